#ifndef MINIMA_ACQUISITION_HPP
#define MINIMA_ACQUISITION_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "minima/classify.hpp"
#include "minima/gp.hpp"
#include "minima/types.hpp"

namespace minima {

/// Selection rule for the next query point.
struct Strategy {
    enum class Kind { random, uncertainty, lcb, no_lambda, aloe, neighbor };

    Kind kind = Kind::aloe;
    /// For `aloe`: exploration period; step t uses pure uncertainty sampling
    /// iff the period is positive and divides t.
    int explore_period = 0;
    double neighbor_alpha = 0.3;
    double neighbor_prob_threshold = 0.6;
    int neighbor_mc_samples = 10000;

    bool explore_at(int t) const { return explore_period > 0 && t % explore_period == 0; }

    std::string name() const {
        switch (kind) {
        case Kind::random: return "Random";
        case Kind::uncertainty: return "US";
        case Kind::lcb: return "LCB";
        case Kind::no_lambda: return "NoLambda";
        case Kind::neighbor: return "Neighbor";
        case Kind::aloe:
            if (explore_period == 0) return "ALOE1";
            if (explore_period == 5) return "ALOE2";
            if (explore_period == 10) return "ALOE3";
            return "ALOE-" + std::to_string(explore_period);
        }
        return "?";
    }

    static Strategy parse(std::string_view name) {
        Strategy s;
        if (name == "Random") {
            s.kind = Kind::random;
        } else if (name == "US" || name == "UncertaintySampling") {
            s.kind = Kind::uncertainty;
        } else if (name == "LCB") {
            s.kind = Kind::lcb;
        } else if (name == "NoLambda") {
            s.kind = Kind::no_lambda;
        } else if (name == "ALOE1") {
            s.kind = Kind::aloe;
            s.explore_period = 0;
        } else if (name == "ALOE2") {
            s.kind = Kind::aloe;
            s.explore_period = 5;
        } else if (name == "ALOE3") {
            s.kind = Kind::aloe;
            s.explore_period = 10;
        } else if (name == "Neighbor") {
            s.kind = Kind::neighbor;
        } else {
            throw UsageError("unknown strategy '" + std::string(name) + "'");
        }
        return s;
    }
};

/// Which rule actually chose the query point at a step.
enum class Branch : unsigned char {
    random,
    uncertainty,
    lcb,
    violation,
    fallback_uncertainty,
    neighbor
};

inline const char* branch_name(Branch b) {
    switch (b) {
    case Branch::random: return "random";
    case Branch::uncertainty: return "uncertainty";
    case Branch::lcb: return "lcb";
    case Branch::violation: return "violation";
    case Branch::fallback_uncertainty: return "fallback_uncertainty";
    case Branch::neighbor: return "neighbor";
    }
    return "?";
}

/// Hinge at zero.
inline double hinge(double a) { return a > 0.0 ? a : 0.0; }

/// Remaining distance of a gradient CI [lo, hi] from any classifying
/// configuration, for accuracy eps: the cheapest of pushing the interval
/// below zero, above zero, or inside (-eps, eps).
inline double ci_violation(double lo, double hi, double eps) {
    const double below = hinge(hi);
    const double above = hinge(-lo);
    const double inside = hinge(hi - eps) + hinge(-eps - lo);
    return std::min({below, above, inside});
}

/// Per-dimension violations of a gradient CI and their sum.
struct ViolationReport {
    Eigen::VectorXd per_dim;
    double total = 0.0;
};

inline ViolationReport violation_report(const GradCI& ci, const Eigen::VectorXd& grad_eps) {
    detail::require(ci.lower.size() == grad_eps.size(),
                    "violation_report: dimension mismatch");
    ViolationReport out;
    out.per_dim.resize(grad_eps.size());
    for (Eigen::Index i = 0; i < grad_eps.size(); ++i) {
        out.per_dim[i] = ci_violation(ci.lower[i], ci.upper[i], grad_eps[i]);
    }
    out.total = out.per_dim.sum();
    return out;
}

/// Index with the largest total violation among `unknown`; lowest index on
/// ties. Returns -1 when `unknown` is empty, signalling the fallback path.
inline int argmax_violation(const std::vector<int>& unknown, const Eigen::VectorXd& totals) {
    int best = -1;
    double best_v = -1.0;
    for (int i : unknown) {
        if (totals[i] > best_v) {
            best_v = totals[i];
            best = i;
        }
    }
    return best;
}

/// Predicted per-dimension violations at `xplus` after a hypothetical
/// observation at `xstar`: the CI is rebuilt with the look-ahead standard
/// deviation while the mean stays fixed.
inline Eigen::VectorXd predicted_violation(const Posterior& post, const Point& xplus,
                                           const Point& xstar, double beta_sqrt,
                                           const Thresholds& th) {
    GradEstimate g = post.grad(xplus);
    Eigen::VectorXd look = post.lookahead_grad_std(xplus, xstar);
    Eigen::VectorXd out(g.mean.size());
    for (Eigen::Index i = 0; i < g.mean.size(); ++i) {
        out[i] = ci_violation(g.mean[i] - beta_sqrt * look[i], g.mean[i] + beta_sqrt * look[i],
                              th.grad_eps[i]);
    }
    return out;
}

/// Sum over dimensions of current-minus-predicted violation at `xplus`
/// when `xstar` would be observed next.
inline double violation_reduction(const Posterior& post, const Point& xplus, const Point& xstar,
                                  double beta_sqrt, const Thresholds& th) {
    GradEstimate g = post.grad(xplus);
    ViolationReport cur = violation_report(grad_ci(g, beta_sqrt), th.grad_eps);
    Eigen::VectorXd pred = predicted_violation(post, xplus, xstar, beta_sqrt, th);
    return (cur.per_dim - pred).sum();
}

/// The point itself plus its in-domain axis neighbors at distance alpha;
/// the center comes first.
inline std::vector<Point> neighbor_points(const Point& x, double alpha, const Box& domain) {
    std::vector<Point> pts;
    pts.push_back(x);
    for (Eigen::Index l = 0; l < x.size(); ++l) {
        for (double sign : {1.0, -1.0}) {
            Point nb = x;
            nb[l] += sign * alpha;
            if (domain.contains(nb)) pts.push_back(nb);
        }
    }
    return pts;
}

/// Monte Carlo estimate of P(v_0 <= v_i for all i >= 1) for a joint normal
/// with the given moments. With no competitors the event is vacuous.
inline double mc_min_prob(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                          Rng& rng) {
    detail::require(n >= 1, "mc_min_prob: need at least one sample");
    const auto m = mean.size();
    if (m == 1) return 1.0;
    const double scale = std::max(cov.diagonal().maxCoeff(), 1e-300);
    Eigen::MatrixXd lc = detail::jittered_cholesky(cov, scale, "mc_min_prob");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(m), v(m);
    int hits = 0;
    for (int s = 0; s < n; ++s) {
        for (Eigen::Index i = 0; i < m; ++i) z[i] = normal(rng);
        v = mean + lc * z;
        bool ok = true;
        for (Eigen::Index i = 1; i < m && ok; ++i) ok = v[0] <= v[i];
        if (ok) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

/// Posterior probability that f at x undercuts f at every in-domain axis
/// neighbor at distance alpha.
inline double neighbor_prob(const Posterior& post, const Point& x, double alpha, int n,
                            Rng& rng, const Box& domain = {}) {
    std::vector<Point> pts = neighbor_points(x, alpha, domain);
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    post.joint_moments(pts, mean, cov);
    return mc_min_prob(mean, cov, n, rng);
}

/// Neighborhood classification and scores over a pool: points whose
/// probability strictly exceeds the threshold are flagged as minima, and
/// every point is scored by variance times probability.
struct NeighborScores {
    std::vector<int> new_minima;
    Eigen::VectorXd prob;
    Eigen::VectorXd score;
};

inline NeighborScores neighbor_classify_and_score(const Posterior& post,
                                                  const std::vector<Point>& pool, double alpha,
                                                  double prob_threshold, int mc_samples,
                                                  Rng& rng, const Box& domain = {}) {
    NeighborScores out;
    const auto m = static_cast<Eigen::Index>(pool.size());
    out.prob.resize(m);
    out.score.resize(m);
    ValueTable vt = post.value_table(pool);
    for (Eigen::Index i = 0; i < m; ++i) {
        out.prob[i] = neighbor_prob(post, pool[i], alpha, mc_samples, rng, domain);
        out.score[i] = vt.variance[i] * out.prob[i];
        if (out.prob[i] > prob_threshold) out.new_minima.push_back(static_cast<int>(i));
    }
    return out;
}

namespace detail {

inline int argmax_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] > v[best]) best = static_cast<int>(i);
    }
    return best;
}

inline int argmin_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (v[i] < v[best]) best = static_cast<int>(i);
    }
    return best;
}

} // namespace detail

/// Precomputed neighbor-group columns over a value block, center first.
struct NeighborBlocks {
    int block = -1;
    std::vector<std::vector<int>> groups;
};

/// Neighborhood probabilities for every group, drawn sequentially from one
/// generator in group order.
inline Eigen::VectorXd neighbor_pool_probs(OnlineGP& gp, const NeighborBlocks& nb,
                                           int mc_samples, Rng& rng) {
    const auto m = static_cast<Eigen::Index>(nb.groups.size());
    Eigen::VectorXd out(m);
    for (Eigen::Index c = 0; c < m; ++c) {
        const auto& group = nb.groups[static_cast<std::size_t>(c)];
        Eigen::VectorXd mean = gp.block_mean(nb.block, group);
        Eigen::MatrixXd cov = gp.block_cov(nb.block, group);
        out[c] = mc_min_prob(mean, cov, mc_samples, rng);
    }
    return out;
}

/// Everything selection needs at one step of a run.
struct SelectionContext {
    OnlineGP& gp;
    int pool_block;
    const std::vector<Point>& pool;
    const std::vector<Point>& candidates;
    const Classification& cls;
    const CandidateCIs& cis;
    const DerivTable& derivs;
    const Thresholds& thresholds;
    double beta_sqrt = 0.0;
    RuleSet rules = RuleSet::finite;
    const NeighborBlocks* neighbor = nullptr;
    const Strategy* strategy = nullptr;
    const Eigen::VectorXd* neighbor_probs = nullptr; // reuse per-step probabilities
};

struct SelectionResult {
    int pool_index = -1;
    Branch branch = Branch::uncertainty;
};

namespace detail {

inline SelectionResult select_max_variance(const SelectionContext& ctx, Branch branch) {
    ValueTable vt = ctx.gp.value_table(ctx.pool_block);
    return {argmax_lowest(vt.variance), branch};
}

/// Candidate indices still unknown when only the gradient sets are used.
inline std::vector<int> grad_only_unknown(const CandidateCIs& cis, const Thresholds& th,
                                          RuleSet rules) {
    const int d = static_cast<int>(th.grad_eps.size());
    const double widen = (rules == RuleSet::infinite) ? 1.0 + 1.0 / d : 1.0;
    const double margin = (rules == RuleSet::infinite) ? 1.0 / d : 0.0;
    std::vector<int> out;
    for (int r = 0; r < cis.size(); ++r) {
        bool zero_all = true;
        bool nonzero_any = false;
        for (int i = 0; i < d; ++i) {
            const double eps = th.grad_eps[i];
            const double lo = cis.grad_lower(r, i);
            const double hi = cis.grad_upper(r, i);
            if (!(-widen * eps < lo && hi < widen * eps)) zero_all = false;
            if (margin * eps <= lo || hi <= -margin * eps) nonzero_any = true;
        }
        if (!zero_all && !nonzero_any) out.push_back(r);
    }
    return out;
}

inline SelectionResult select_by_violation_reduction(const SelectionContext& ctx,
                                                     const std::vector<int>& unknown) {
    if (unknown.empty()) return select_max_variance(ctx, Branch::fallback_uncertainty);

    const int d = static_cast<int>(ctx.thresholds.grad_eps.size());
    Eigen::VectorXd totals = Eigen::VectorXd::Zero(ctx.cis.size());
    for (int r : unknown) {
        for (int i = 0; i < d; ++i) {
            totals[r] += ci_violation(ctx.cis.grad_lower(r, i), ctx.cis.grad_upper(r, i),
                                      ctx.thresholds.grad_eps[i]);
        }
    }
    const int plus = argmax_violation(unknown, totals);
    if (plus < 0 || totals[plus] <= 0.0) {
        return select_max_variance(ctx, Branch::fallback_uncertainty);
    }

    ValueTable vt = ctx.gp.value_table(ctx.pool_block);
    Eigen::MatrixXd cross = ctx.gp.cross_grad_value(ctx.candidates[plus], ctx.pool_block);
    const double noise = ctx.gp.noise_variance();

    Eigen::VectorXd cur(d);
    for (int i = 0; i < d; ++i) {
        cur[i] = ci_violation(ctx.cis.grad_lower(plus, i), ctx.cis.grad_upper(plus, i),
                              ctx.thresholds.grad_eps[i]);
    }

    const auto m = static_cast<Eigen::Index>(ctx.pool.size());
    Eigen::VectorXd reduction(m);
    for (Eigen::Index c = 0; c < m; ++c) {
        const double denom = vt.variance[c] + noise;
        double b = 0.0;
        for (int i = 0; i < d; ++i) {
            double var = ctx.derivs.grad_std(plus, i) * ctx.derivs.grad_std(plus, i);
            if (denom > 0.0) var -= cross(c, i) * cross(c, i) / denom;
            const double look = std::sqrt(clamp_variance(var, "look-ahead gradient posterior"));
            const double mean = ctx.derivs.grad_mean(plus, i);
            const double pred = ci_violation(mean - ctx.beta_sqrt * look,
                                             mean + ctx.beta_sqrt * look,
                                             ctx.thresholds.grad_eps[i]);
            b += cur[i] - pred;
        }
        reduction[c] = b;
    }
    const int best = argmax_lowest(reduction);
    if (reduction[best] <= 0.0) {
        return select_max_variance(ctx, Branch::fallback_uncertainty);
    }
    return {best, Branch::violation};
}

inline SelectionResult select_neighbor(const SelectionContext& ctx, const Strategy& s,
                                       Rng& rng) {
    require(ctx.neighbor != nullptr && ctx.neighbor->block >= 0,
            "select_next: neighbor blocks missing");
    ValueTable vt = ctx.gp.value_table(ctx.pool_block);
    Eigen::VectorXd probs;
    if (ctx.neighbor_probs != nullptr) {
        probs = *ctx.neighbor_probs;
    } else {
        probs = neighbor_pool_probs(ctx.gp, *ctx.neighbor, s.neighbor_mc_samples, rng);
    }
    Eigen::VectorXd score = vt.variance.cwiseProduct(probs);
    return {argmax_lowest(score), Branch::neighbor};
}

} // namespace detail

/// Chooses the next query point from the pool. Deterministic given the
/// context, step and generator state; all ties resolve to the lowest index.
inline SelectionResult select_next(const Strategy& strategy, const SelectionContext& ctx,
                                   int t, Rng& rng) {
    detail::require(!ctx.pool.empty(), "select_next: empty pool");
    switch (strategy.kind) {
    case Strategy::Kind::random: {
        std::uniform_int_distribution<int> pick(0, static_cast<int>(ctx.pool.size()) - 1);
        return {pick(rng), Branch::random};
    }
    case Strategy::Kind::uncertainty:
        return detail::select_max_variance(ctx, Branch::uncertainty);
    case Strategy::Kind::lcb: {
        ValueTable vt = ctx.gp.value_table(ctx.pool_block);
        Eigen::VectorXd score =
            vt.mean - 3.0 * vt.variance.array().sqrt().matrix();
        return {detail::argmin_lowest(score), Branch::lcb};
    }
    case Strategy::Kind::aloe: {
        if (strategy.explore_at(t)) return detail::select_max_variance(ctx, Branch::uncertainty);
        return detail::select_by_violation_reduction(ctx,
                                                     ctx.cls.indices_with(Label::unknown));
    }
    case Strategy::Kind::no_lambda: {
        return detail::select_by_violation_reduction(
            ctx, detail::grad_only_unknown(ctx.cis, ctx.thresholds, ctx.rules));
    }
    case Strategy::Kind::neighbor:
        return detail::select_neighbor(ctx, strategy, rng);
    }
    throw UsageError("select_next: unknown strategy kind");
}

} // namespace minima

#endif
