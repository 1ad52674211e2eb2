#ifndef MINIMA_CONFIG_HPP
#define MINIMA_CONFIG_HPP

#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "minima/benchmark.hpp"

namespace minima {

inline ScaleSchedule schedule_from_json(const nlohmann::json& j) {
    ScaleSchedule s;
    const std::string mode = j.value("mode", "fixed");
    if (mode == "fixed") {
        s.mode = ScaleSchedule::Mode::fixed;
        s.beta_sqrt = j.value("beta_sqrt", 3.0);
        s.gamma_sqrt = j.value("gamma_sqrt", 3.0);
    } else if (mode == "finite_bound") {
        s.mode = ScaleSchedule::Mode::finite_bound;
        s.delta = j.value("delta", 0.05);
        s.cardinality = j.value("cardinality", std::int64_t{0});
    } else if (mode == "covering_bound") {
        s.mode = ScaleSchedule::Mode::covering_bound;
        s.delta = j.value("delta", 0.05);
        s.a = j.value("a", 1.0);
        s.b = j.value("b", 1.0);
        s.r = j.value("r", 1.0);
    } else {
        throw UsageError("config: unknown scales mode '" + mode + "'");
    }
    s.validate();
    return s;
}

/// Builds a benchmark configuration from a JSON document. Unknown keys are
/// rejected so typos fail loudly.
inline BenchConfig bench_config_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "cases",         "strategies",    "repetitions",           "horizon",
        "master_seed",   "grad_eps",      "eig_eps",               "scales",
        "initial_points", "stop_on_empty_unknown", "rules",        "noise_variance",
        "divisions",     "neighbor"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw UsageError("config: unknown key '" + it.key() + "'");
    }

    BenchConfig cfg;
    std::vector<std::string> case_names = {"case1", "case2", "case3"};
    if (j.contains("cases")) case_names = j.at("cases").get<std::vector<std::string>>();
    for (const std::string& name : case_names) cfg.cases.push_back(synthetic_case(name));

    std::vector<std::string> strat_names = {"Random", "US",    "LCB",   "NoLambda",
                                            "ALOE1",  "ALOE2", "ALOE3", "Neighbor"};
    if (j.contains("strategies")) {
        strat_names = j.at("strategies").get<std::vector<std::string>>();
    }
    for (const std::string& name : strat_names) cfg.strategies.push_back(Strategy::parse(name));

    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.grad_eps = j.value("grad_eps", cfg.grad_eps);
    cfg.eig_eps = j.value("eig_eps", cfg.eig_eps);
    cfg.initial_points = j.value("initial_points", cfg.initial_points);
    cfg.stop_on_empty_unknown = j.value("stop_on_empty_unknown", cfg.stop_on_empty_unknown);
    if (j.contains("scales")) cfg.schedule = schedule_from_json(j.at("scales"));
    if (j.contains("rules")) {
        const std::string rules = j.at("rules").get<std::string>();
        if (rules == "finite") {
            cfg.rules = RuleSet::finite;
        } else if (rules == "infinite") {
            cfg.rules = RuleSet::infinite;
        } else {
            throw UsageError("config: rules must be 'finite' or 'infinite'");
        }
    }
    if (j.contains("noise_variance")) {
        const double nv = j.at("noise_variance").get<double>();
        for (auto& c : cfg.cases) c.noise_variance = nv;
    }
    if (j.contains("divisions")) {
        const int div = j.at("divisions").get<int>();
        for (auto& c : cfg.cases) c.divisions = div;
    }
    if (j.contains("neighbor")) {
        const auto& n = j.at("neighbor");
        for (auto& s : cfg.strategies) {
            if (s.kind != Strategy::Kind::neighbor) continue;
            s.neighbor_alpha = n.value("alpha", s.neighbor_alpha);
            s.neighbor_prob_threshold = n.value("prob_threshold", s.neighbor_prob_threshold);
            s.neighbor_mc_samples = n.value("mc_samples", s.neighbor_mc_samples);
        }
    }
    cfg.validate();
    return cfg;
}

} // namespace minima

#endif
