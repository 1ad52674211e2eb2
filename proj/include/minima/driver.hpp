#ifndef MINIMA_DRIVER_HPP
#define MINIMA_DRIVER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "minima/acquisition.hpp"
#include "minima/classify.hpp"
#include "minima/gp.hpp"
#include "minima/types.hpp"

namespace minima {

struct LoopConfig {
    int budget = 200;
    bool stop_on_empty_unknown = true;
    std::uint64_t seed = 0;
    double noise_variance = 0.0;
    int initial_points = 1;

    void validate() const {
        detail::require(budget >= 1, "LoopConfig: budget must be >= 1");
        detail::require(initial_points >= 1, "LoopConfig: initial_points must be >= 1");
        detail::require(noise_variance >= 0.0, "LoopConfig: noise_variance must be >= 0");
    }
};

/// One evaluated step of a run.
struct StepRecord {
    int step = 0;
    Point x;
    double y = 0.0;
    int n_minimum = 0;
    int n_not_minimum = 0;
    int n_unknown = 0;
    double eta = 0.0;
    Branch branch = Branch::uncertainty;
};

/// Read-only view of one step handed to the observer after classification
/// (including a final visit that stops the loop). References are valid only
/// during the callback.
struct StepSnapshot {
    int step;
    const std::vector<Point>& candidates;
    const CandidateCIs& cis;
    const DerivTable& derivs;
    const Classification& cls;
    double eta;
    double beta_sqrt;
    double gamma_sqrt;
};

using StepObserver = std::function<void(const StepSnapshot&)>;

struct RunResult {
    Classification classification;
    std::vector<StepRecord> trace;
};

/// Noisy evaluation of the black-box function.
inline double observe(const std::function<double(const Point&)>& truth, const Point& x,
                      double noise_variance, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    return truth(x) + std::sqrt(noise_variance) * normal(rng);
}

/// Full description of one run.
struct RunSpec {
    std::function<double(const Point&)> truth;
    std::vector<Point> candidates; // the set to classify
    std::vector<Point> pool;       // the set of evaluable points; candidates must be a subset
    KernelParams kernel;
    Strategy strategy;
    Thresholds thresholds;
    ScaleSchedule schedule;
    LoopConfig loop;
    RuleSet rules = RuleSet::finite;
    Box domain; // used for neighbor boundary handling; empty = bounding box of the pool
};

namespace detail {

inline std::vector<int> candidate_pool_map(const std::vector<Point>& candidates,
                                           const std::vector<Point>& pool) {
    std::map<std::vector<double>, int> index;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        index.emplace(std::vector<double>(pool[i].data(), pool[i].data() + pool[i].size()),
                      static_cast<int>(i));
    }
    std::vector<int> out;
    out.reserve(candidates.size());
    for (const Point& c : candidates) {
        auto it = index.find(std::vector<double>(c.data(), c.data() + c.size()));
        require(it != index.end(), "run: candidates must be a subset of the pool");
        out.push_back(it->second);
    }
    return out;
}

inline Box pool_bounding_box(const std::vector<Point>& pool) {
    Box box;
    box.lo = pool[0];
    box.hi = pool[0];
    for (const Point& p : pool) {
        box.lo = box.lo.cwiseMin(p);
        box.hi = box.hi.cwiseMax(p);
    }
    return box;
}

} // namespace detail

/// Runs the query-observe-refit-reclassify loop until the unknown set is
/// empty (when configured) or the budget is exhausted.
inline RunResult run(const RunSpec& spec, const StepObserver& observer = {}) {
    spec.kernel.validate();
    spec.thresholds.validate();
    spec.schedule.validate();
    spec.loop.validate();
    detail::require(static_cast<bool>(spec.truth), "run: truth callable is empty");
    detail::require(!spec.pool.empty(), "run: empty pool");
    detail::require(!spec.candidates.empty(), "run: empty candidate set");
    const int d = static_cast<int>(spec.pool[0].size());
    detail::require(spec.thresholds.grad_eps.size() == d,
                    "run: thresholds dimension does not match the pool");
    const std::vector<int> cand_pool = detail::candidate_pool_map(spec.candidates, spec.pool);

    const bool is_neighbor = spec.strategy.kind == Strategy::Kind::neighbor;
    Box domain = spec.domain;
    if (domain.lo.size() == 0 && is_neighbor) domain = detail::pool_bounding_box(spec.pool);

    Rng rng(spec.loop.seed);
    OnlineGP gp(spec.kernel, spec.loop.noise_variance,
                spec.loop.initial_points + spec.loop.budget);
    const int cand_block = gp.attach_deriv_block(spec.candidates);
    const int pool_block = gp.attach_value_block(spec.pool);

    NeighborBlocks neighbors;
    if (is_neighbor) {
        std::vector<Point> flat;
        neighbors.groups.resize(spec.pool.size());
        for (std::size_t i = 0; i < spec.pool.size(); ++i) {
            for (const Point& p :
                 neighbor_points(spec.pool[i], spec.strategy.neighbor_alpha, domain)) {
                neighbors.groups[i].push_back(static_cast<int>(flat.size()));
                flat.push_back(p);
            }
        }
        neighbors.block = gp.attach_value_block(std::move(flat));
    }

    std::uniform_int_distribution<int> uniform_pool(0, static_cast<int>(spec.pool.size()) - 1);
    for (int j = 0; j < spec.loop.initial_points; ++j) {
        const Point& x = spec.pool[static_cast<std::size_t>(uniform_pool(rng))];
        gp.observe(x, observe(spec.truth, x, spec.loop.noise_variance, rng));
    }

    Classification cls(spec.candidates.size());
    RunResult out;
    for (int t = 1; t <= spec.loop.budget; ++t) {
        const DerivTable derivs = gp.deriv_table(cand_block);
        const auto scales = spec.schedule.at(t, d, static_cast<std::int64_t>(cls.size()),
                                             spec.thresholds.min_eps());
        const CandidateCIs cis = build_cis(derivs, scales.beta_sqrt, scales.gamma_sqrt);

        Eigen::VectorXd pool_probs;
        if (is_neighbor) {
            pool_probs = neighbor_pool_probs(gp, neighbors, spec.strategy.neighbor_mc_samples,
                                             rng);
            for (int i = 0; i < cls.size(); ++i) {
                if (cls.label(i) != Label::unknown) continue;
                if (pool_probs[cand_pool[static_cast<std::size_t>(i)]] >
                    spec.strategy.neighbor_prob_threshold) {
                    cls.set(i, Label::minimum);
                }
            }
        } else {
            update_classification(cls, cis, spec.thresholds, spec.rules);
        }

        const double eta =
            max_scaled_width(derivs.grad_std, cis.eig_spread, scales.beta_sqrt, scales.gamma_sqrt);
        if (observer) {
            observer(StepSnapshot{t, spec.candidates, cis, derivs, cls, eta, scales.beta_sqrt,
                                  scales.gamma_sqrt});
        }
        if (!is_neighbor && spec.loop.stop_on_empty_unknown && cls.all_classified()) break;

        SelectionContext ctx{gp,
                             pool_block,
                             spec.pool,
                             spec.candidates,
                             cls,
                             cis,
                             derivs,
                             spec.thresholds,
                             scales.beta_sqrt,
                             spec.rules,
                             is_neighbor ? &neighbors : nullptr,
                             &spec.strategy,
                             is_neighbor ? &pool_probs : nullptr};
        const SelectionResult sel = select_next(spec.strategy, ctx, t, rng);
        const Point& x = spec.pool[static_cast<std::size_t>(sel.pool_index)];
        const double y = observe(spec.truth, x, spec.loop.noise_variance, rng);
        gp.observe(x, y);
        out.trace.push_back(StepRecord{t, x, y, cls.n_minimum(), cls.n_not_minimum(),
                                       cls.n_unknown(), eta, sel.branch});
    }
    out.classification = std::move(cls);
    return out;
}

} // namespace minima

#endif
