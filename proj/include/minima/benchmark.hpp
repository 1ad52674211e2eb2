#ifndef MINIMA_BENCHMARK_HPP
#define MINIMA_BENCHMARK_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "minima/driver.hpp"
#include "minima/synthetic.hpp"

namespace minima {

struct BenchConfig {
    std::vector<SyntheticCase> cases;
    std::vector<Strategy> strategies;
    int repetitions = 50;
    int horizon = 200;
    double grad_eps = 0.35;
    double eig_eps = 0.1;
    ScaleSchedule schedule; // default: fixed sqrt-scales of 3
    int initial_points = 1;
    bool stop_on_empty_unknown = true;
    std::uint64_t master_seed = 0;
    RuleSet rules = RuleSet::finite;

    void validate() const {
        detail::require(!cases.empty(), "BenchConfig: no cases");
        detail::require(!strategies.empty(), "BenchConfig: no strategies");
        detail::require(repetitions >= 1, "BenchConfig: repetitions must be >= 1");
        detail::require(horizon >= 1, "BenchConfig: horizon must be >= 1");
        detail::require(grad_eps > 0.0 && eig_eps > 0.0, "BenchConfig: accuracies must be > 0");
        schedule.validate();
    }
};

/// One averaged output row.
struct MetricsRow {
    std::string case_name;
    std::string strategy;
    int step = 0;
    double precision_mean = 0.0;
    double recall_mean = 0.0;
    double fscore_mean = 0.0;
};

/// Stable per-repetition seed: FNV-1a over the master seed and the cell's
/// identity, independent of execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view case_name,
                                 std::string_view strategy, int repetition) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](unsigned char byte) {
        h ^= byte;
        h *= 1099511628211ull;
    };
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(master >> (8 * i)));
    for (char ch : case_name) mix(static_cast<unsigned char>(ch));
    mix(0xff);
    for (char ch : strategy) mix(static_cast<unsigned char>(ch));
    mix(0xff);
    auto rep = static_cast<std::uint32_t>(repetition);
    for (int i = 0; i < 4; ++i) mix(static_cast<unsigned char>(rep >> (8 * i)));
    return h;
}

/// Per-step metric curve of a single run, padded with the final value when
/// the run stops before the horizon.
inline std::vector<Metrics> run_metric_curve(const SyntheticCase& c, const Grid& grid,
                                             const std::vector<int>& truth_indices,
                                             const Strategy& strategy, const BenchConfig& cfg,
                                             std::uint64_t seed,
                                             std::vector<StepRecord>* trace_out = nullptr) {
    std::set<int> truth(truth_indices.begin(), truth_indices.end());
    detail::require(!truth.empty(), "run_metric_curve: empty truth set");

    std::vector<Metrics> curve;
    curve.reserve(static_cast<std::size_t>(cfg.horizon));
    StepObserver observer = [&](const StepSnapshot& snap) {
        int est = 0;
        int hit = 0;
        for (int i = 0; i < snap.cls.size(); ++i) {
            if (snap.cls.label(i) != Label::minimum) continue;
            ++est;
            if (truth.count(i)) ++hit;
        }
        Metrics m;
        m.precision = est > 0 ? static_cast<double>(hit) / est : 0.0;
        m.recall = static_cast<double>(hit) / static_cast<double>(truth.size());
        const double denom = m.precision + m.recall;
        m.fscore = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
        curve.push_back(m);
    };

    RunSpec spec;
    spec.truth = c.f;
    spec.candidates = grid.candidates;
    spec.pool = grid.pool;
    spec.kernel = c.kernel;
    spec.strategy = strategy;
    spec.thresholds = Thresholds::uniform(c.dim, cfg.grad_eps, cfg.eig_eps);
    spec.schedule = cfg.schedule;
    spec.loop.budget = cfg.horizon;
    spec.loop.stop_on_empty_unknown = cfg.stop_on_empty_unknown;
    spec.loop.seed = seed;
    spec.loop.noise_variance = c.noise_variance;
    spec.loop.initial_points = cfg.initial_points;
    spec.rules = cfg.rules;
    spec.domain = c.box();
    RunResult res = run(spec, observer);
    if (trace_out) *trace_out = std::move(res.trace);

    detail::require(!curve.empty(), "run_metric_curve: no steps observed");
    while (static_cast<int>(curve.size()) < cfg.horizon) curve.push_back(curve.back());
    return curve;
}

/// Candidate indices of the analytic minima.
inline std::vector<int> truth_indices(const SyntheticCase& c, const Grid& grid) {
    std::vector<Point> s = true_minima(c, grid.candidates);
    std::map<std::vector<double>, int> lookup;
    for (std::size_t i = 0; i < grid.candidates.size(); ++i) {
        lookup[detail::point_key(grid.candidates[i])] = static_cast<int>(i);
    }
    std::vector<int> out;
    for (const Point& p : s) out.push_back(lookup.at(detail::point_key(p)));
    return out;
}

/// Runs every (case, strategy, repetition) cell and averages the per-step
/// metrics over repetitions. Rows come out in configuration order:
/// cases x strategies x steps.
inline std::vector<MetricsRow> run_benchmark(const BenchConfig& cfg) {
    cfg.validate();
    std::vector<MetricsRow> rows;
    for (const SyntheticCase& c : cfg.cases) {
        const Grid grid = build_grid(c);
        const std::vector<int> truth = truth_indices(c, grid);
        detail::require(!truth.empty(),
                        "run_benchmark: case '" + c.name + "' has no grid minima");
        for (const Strategy& strategy : cfg.strategies) {
            std::vector<double> p_sum(static_cast<std::size_t>(cfg.horizon), 0.0);
            std::vector<double> r_sum(static_cast<std::size_t>(cfg.horizon), 0.0);
            std::vector<double> f_sum(static_cast<std::size_t>(cfg.horizon), 0.0);
            for (int rep = 0; rep < cfg.repetitions; ++rep) {
                const std::uint64_t seed =
                    derive_seed(cfg.master_seed, c.name, strategy.name(), rep);
                const auto curve = run_metric_curve(c, grid, truth, strategy, cfg, seed);
                for (int s = 0; s < cfg.horizon; ++s) {
                    p_sum[static_cast<std::size_t>(s)] += curve[static_cast<std::size_t>(s)].precision;
                    r_sum[static_cast<std::size_t>(s)] += curve[static_cast<std::size_t>(s)].recall;
                    f_sum[static_cast<std::size_t>(s)] += curve[static_cast<std::size_t>(s)].fscore;
                }
            }
            const double n = static_cast<double>(cfg.repetitions);
            for (int s = 0; s < cfg.horizon; ++s) {
                rows.push_back(MetricsRow{c.name, strategy.name(), s + 1,
                                          p_sum[static_cast<std::size_t>(s)] / n,
                                          r_sum[static_cast<std::size_t>(s)] / n,
                                          f_sum[static_cast<std::size_t>(s)] / n});
            }
        }
    }
    return rows;
}

} // namespace minima

#endif
