// Command-line front end: benchmark suite, single runs, truth sets, the
// CI-width diagnostic and data-driven truth fitting.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "minima/config.hpp"
#include "minima/io.hpp"

namespace {

using nlohmann::json;

minima::BenchConfig load_bench_config(const std::string& config_path) {
    if (config_path.empty()) return minima::bench_config_from_json(json::object());
    std::ifstream in(config_path);
    if (!in) throw minima::UsageError("cannot open config file '" + config_path + "'");
    json j;
    in >> j;
    return minima::bench_config_from_json(j);
}

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw minima::UsageError("cannot open output file '" + path + "'");
    return file;
}

struct RunOptions {
    std::string case_name = "case3";
    std::string strategy = "ALOE1";
    std::uint64_t seed = 0;
    int budget = 200;
    double grad_eps = 0.35;
    double eig_eps = 0.1;
    double beta_sqrt = 3.0;
    double gamma_sqrt = 3.0;
    std::string rules = "finite";
    std::string truth_model; // optional fitted-truth file
    double lo = 0.0, hi = 1.0, sub_lo = 0.0, sub_hi = 1.0;
    int divisions = 40;
    bool keep_running = false; // disable stop-on-empty
};

minima::SyntheticCase resolve_case(const RunOptions& opt) {
    if (opt.truth_model.empty()) return minima::synthetic_case(opt.case_name);
    std::ifstream in(opt.truth_model);
    if (!in) throw minima::UsageError("cannot open truth model '" + opt.truth_model + "'");
    json j;
    in >> j;
    minima::FittedTruth truth = minima::truth_model_from_json(j);
    return truth.as_case("fitted", opt.lo, opt.hi, opt.divisions, opt.sub_lo, opt.sub_hi);
}

minima::RunSpec make_run_spec(const minima::SyntheticCase& c, const minima::Grid& grid,
                              const RunOptions& opt) {
    minima::RunSpec spec;
    spec.truth = c.f;
    spec.candidates = grid.candidates;
    spec.pool = grid.pool;
    spec.kernel = c.kernel;
    spec.strategy = minima::Strategy::parse(opt.strategy);
    spec.thresholds = minima::Thresholds::uniform(c.dim, opt.grad_eps, opt.eig_eps);
    spec.schedule.beta_sqrt = opt.beta_sqrt;
    spec.schedule.gamma_sqrt = opt.gamma_sqrt;
    spec.loop.budget = opt.budget;
    spec.loop.seed = opt.seed;
    spec.loop.noise_variance = c.noise_variance;
    spec.loop.stop_on_empty_unknown = !opt.keep_running;
    spec.rules = opt.rules == "infinite" ? minima::RuleSet::infinite : minima::RuleSet::finite;
    spec.domain = c.box();
    return spec;
}

void add_run_flags(CLI::App* cmd, RunOptions& opt, bool with_grid) {
    cmd->add_option("--case", opt.case_name, "synthetic case preset (case1|case2|case3)");
    cmd->add_option("--strategy", opt.strategy, "selection rule");
    cmd->add_option("--seed", opt.seed, "run seed");
    cmd->add_option("--budget", opt.budget, "maximum number of evaluations");
    cmd->add_option("--grad-eps", opt.grad_eps, "gradient accuracy");
    cmd->add_option("--eig-eps", opt.eig_eps, "eigenvalue accuracy");
    cmd->add_option("--beta-sqrt", opt.beta_sqrt, "gradient CI scale");
    cmd->add_option("--gamma-sqrt", opt.gamma_sqrt, "eigenvalue CI scale");
    cmd->add_option("--rules", opt.rules, "classification rules (finite|infinite)");
    cmd->add_flag("--keep-running", opt.keep_running,
                  "do not stop when every candidate is classified");
    if (with_grid) {
        cmd->add_option("--truth-model", opt.truth_model, "fitted truth model file");
        cmd->add_option("--lo", opt.lo, "grid lower bound (with --truth-model)");
        cmd->add_option("--hi", opt.hi, "grid upper bound (with --truth-model)");
        cmd->add_option("--sub-lo", opt.sub_lo, "candidate box lower bound");
        cmd->add_option("--sub-hi", opt.sub_hi, "candidate box upper bound");
        cmd->add_option("--divisions", opt.divisions, "grid divisions per axis");
    }
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Active enumeration of local minima of expensive black-box functions"};
    app.require_subcommand(1);

    // bench
    auto* bench = app.add_subcommand("bench", "run the benchmark suite and emit a CSV table");
    std::string bench_config;
    std::string bench_out;
    std::optional<std::uint64_t> bench_seed;
    std::optional<int> bench_reps, bench_horizon;
    std::vector<std::string> bench_cases, bench_strategies;
    bench->add_option("--config", bench_config, "JSON configuration file");
    bench->add_option("--out", bench_out, "output CSV path (default: stdout)");
    bench->add_option("--seed", bench_seed, "master seed override");
    bench->add_option("--reps", bench_reps, "repetitions override");
    bench->add_option("--horizon", bench_horizon, "horizon override");
    bench->add_option("--cases", bench_cases, "case list override")->delimiter(',');
    bench->add_option("--strategies", bench_strategies, "strategy list override")->delimiter(',');

    // run
    auto* run_cmd = app.add_subcommand("run", "single run with an optional trace file");
    RunOptions run_opt;
    std::string trace_path;
    bool snapshots = false;
    add_run_flags(run_cmd, run_opt, true);
    run_cmd->add_option("--trace", trace_path, "write a JSONL trace to this path");
    run_cmd->add_flag("--snapshots", snapshots,
                      "include per-candidate classification snapshots in the trace");

    // truth
    auto* truth_cmd = app.add_subcommand("truth", "print the analytic minimum set of a case");
    std::string truth_case = "case3";
    truth_cmd->add_option("--case", truth_case, "synthetic case preset");

    // eta
    auto* eta_cmd = app.add_subcommand("eta", "print the per-step CI-width diagnostic");
    RunOptions eta_opt;
    add_run_flags(eta_cmd, eta_opt, false);

    // fit-truth
    auto* fit_cmd = app.add_subcommand("fit-truth", "fit a data-driven truth from a table");
    std::string data_path, model_out;
    double fit_sf2 = 1.0, fit_len = 1.0, fit_noise = 0.01;
    double fit_cutoff = std::numeric_limits<double>::infinity();
    fit_cmd->add_option("--data", data_path, "delimited (coords..., value) table")->required();
    fit_cmd->add_option("--signal-variance", fit_sf2, "kernel signal variance");
    fit_cmd->add_option("--lengthscale", fit_len, "kernel lengthscale");
    fit_cmd->add_option("--noise", fit_noise, "observation noise variance");
    fit_cmd->add_option("--cutoff", fit_cutoff, "drop rows with |value| above this");
    fit_cmd->add_option("--out", model_out, "model file to write");

    CLI11_PARSE(app, argc, argv);

    if (bench->parsed()) {
        minima::BenchConfig cfg = load_bench_config(bench_config);
        if (bench_seed) cfg.master_seed = *bench_seed;
        if (bench_reps) cfg.repetitions = *bench_reps;
        if (bench_horizon) cfg.horizon = *bench_horizon;
        if (!bench_cases.empty()) {
            cfg.cases.clear();
            for (const auto& name : bench_cases) cfg.cases.push_back(minima::synthetic_case(name));
        }
        if (!bench_strategies.empty()) {
            cfg.strategies.clear();
            for (const auto& name : bench_strategies) {
                cfg.strategies.push_back(minima::Strategy::parse(name));
            }
        }
        auto rows = minima::run_benchmark(cfg);
        std::ofstream file;
        minima::write_metrics_csv(open_or_stdout(file, bench_out), rows);
        return 0;
    }

    if (run_cmd->parsed()) {
        minima::SyntheticCase c = resolve_case(run_opt);
        minima::Grid grid = minima::build_grid(c);
        minima::RunSpec spec = make_run_spec(c, grid, run_opt);
        std::vector<json> snaps;
        minima::StepObserver obs;
        if (snapshots) {
            obs = [&snaps](const minima::StepSnapshot& s) {
                snaps.push_back(minima::snapshot_json(s));
            };
        }
        minima::RunResult res = minima::run(spec, obs);
        if (!trace_path.empty()) {
            std::ofstream out(trace_path);
            if (!out) throw minima::UsageError("cannot open trace file '" + trace_path + "'");
            minima::write_trace_jsonl(out, res.trace, snapshots ? &snaps : nullptr);
        }
        std::cout << "steps: " << res.trace.size() << "\n"
                  << "minimum: " << res.classification.n_minimum() << "\n"
                  << "not_minimum: " << res.classification.n_not_minimum() << "\n"
                  << "unknown: " << res.classification.n_unknown() << "\n";
        for (int i : res.classification.indices_with(minima::Label::minimum)) {
            std::cout << "S^ " << grid.candidates[static_cast<std::size_t>(i)].transpose() << "\n";
        }
        return 0;
    }

    if (truth_cmd->parsed()) {
        minima::SyntheticCase c = minima::synthetic_case(truth_case);
        minima::Grid grid = minima::build_grid(c);
        for (const auto& p : minima::true_minima(c, grid.candidates)) {
            std::cout << p.transpose() << "\n";
        }
        return 0;
    }

    if (eta_cmd->parsed()) {
        minima::SyntheticCase c = minima::synthetic_case(eta_opt.case_name);
        minima::Grid grid = minima::build_grid(c);
        minima::RunSpec spec = make_run_spec(c, grid, eta_opt);
        minima::RunResult res = minima::run(spec);
        std::cout << "step,eta\n";
        for (const auto& r : res.trace) std::cout << r.step << ',' << r.eta << "\n";
        return 0;
    }

    if (fit_cmd->parsed()) {
        std::ifstream in(data_path);
        if (!in) throw minima::UsageError("cannot open data file '" + data_path + "'");
        auto rows = minima::read_numeric_table(in);
        minima::FittedTruth truth =
            minima::fit_truth(rows, {fit_sf2, fit_len}, fit_noise, fit_cutoff);
        std::cout << "rows: " << rows.size() << "\nkept: " << truth.size()
                  << "\ndropped: " << truth.dropped() << "\ndim: " << truth.dim() << "\n";
        if (!model_out.empty()) {
            std::ofstream out(model_out);
            if (!out) throw minima::UsageError("cannot open model file '" + model_out + "'");
            out << minima::truth_model_json(truth).dump(2) << "\n";
            std::cout << "model: " << model_out << "\n";
        }
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const minima::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const minima::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    }
}
