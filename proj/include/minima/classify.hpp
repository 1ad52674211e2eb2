#ifndef MINIMA_CLASSIFY_HPP
#define MINIMA_CLASSIFY_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "minima/gp.hpp"
#include "minima/types.hpp"

namespace minima {

/// Accuracy parameters: per-dimension slack for "the gradient is zero" and
/// scalar slack for "the smallest Hessian eigenvalue is positive".
struct Thresholds {
    Eigen::VectorXd grad_eps;
    double eig_eps = 0.1;

    void validate() const {
        detail::require(grad_eps.size() >= 1, "Thresholds: grad_eps is empty");
        detail::require(grad_eps.minCoeff() > 0.0, "Thresholds: grad_eps entries must be > 0");
        detail::require(eig_eps > 0.0, "Thresholds: eig_eps must be > 0");
    }

    /// Smallest accuracy over all gradient dimensions and the eigenvalue.
    double min_eps() const { return std::min(grad_eps.minCoeff(), eig_eps); }

    static Thresholds uniform(int dim, double grad, double eig) {
        return {Eigen::VectorXd::Constant(dim, grad), eig};
    }
};

/// Per-dimension confidence interval for the gradient.
struct GradCI {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

/// Confidence interval for the smallest Hessian eigenvalue: the center is
/// the smallest eigenvalue of the posterior-mean Hessian, the spread is the
/// largest entrywise posterior standard deviation.
struct EigCI {
    double lower = 0.0;
    double upper = 0.0;
    double center = 0.0;
    double spread = 0.0;
};

/// mean +- scale * std per dimension.
inline GradCI grad_ci(const GradEstimate& g, double beta_sqrt) {
    detail::require(beta_sqrt >= 0.0, "grad_ci: scale must be >= 0");
    return {g.mean - beta_sqrt * g.std, g.mean + beta_sqrt * g.std};
}

namespace detail {

/// Smallest eigenvalue from one row of packed upper-triangle entries of a
/// d x d symmetric matrix; closed forms for d <= 2.
inline double min_eig_packed(const Eigen::MatrixXd& packed, Eigen::Index row, int d) {
    if (d == 1) return packed(row, 0);
    if (d == 2) {
        const double a = packed(row, 0), b = packed(row, 1), c = packed(row, 2);
        const double half_diff = 0.5 * (a - c);
        return 0.5 * (a + c) - std::hypot(half_diff, b);
    }
    Eigen::MatrixXd m(d, d);
    int q = 0;
    for (int j = 0; j < d; ++j)
        for (int k = j; k < d; ++k) m(j, k) = m(k, j) = packed(row, q++);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

} // namespace detail

/// Smallest eigenvalue of a symmetric matrix. Inputs asymmetric beyond
/// 1e-8 (relative to the largest entry) are rejected; smaller asymmetry is
/// removed by averaging with the transpose.
inline double min_eigenvalue(const Eigen::MatrixXd& m) {
    detail::require(m.rows() == m.cols(), "min_eigenvalue: matrix is not square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    detail::require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
                    "min_eigenvalue: matrix is not symmetric");
    const int d = static_cast<int>(m.rows());
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::MatrixXd packed(1, DerivTable::n_pairs(d));
    int q = 0;
    for (int j = 0; j < d; ++j)
        for (int k = j; k < d; ++k) packed(0, q++) = sym(j, k);
    return detail::min_eig_packed(packed, 0, d);
}

/// CI for the smallest Hessian eigenvalue from the Hessian posterior.
inline EigCI eig_ci(const HessEstimate& h, double gamma_sqrt) {
    detail::require(gamma_sqrt >= 0.0, "eig_ci: scale must be >= 0");
    EigCI out;
    out.center = min_eigenvalue(h.mean);
    out.spread = h.std.maxCoeff();
    out.lower = out.center - gamma_sqrt * out.spread;
    out.upper = out.center + gamma_sqrt * out.spread;
    return out;
}

/// Confidence intervals for every candidate, struct-of-arrays layout.
struct CandidateCIs {
    Eigen::MatrixXd grad_lower; // m x d
    Eigen::MatrixXd grad_upper; // m x d
    Eigen::VectorXd eig_lower;
    Eigen::VectorXd eig_upper;
    Eigen::VectorXd eig_center;
    Eigen::VectorXd eig_spread;

    int size() const { return static_cast<int>(grad_lower.rows()); }

    GradCI grad_at(int r) const {
        return {grad_lower.row(r).transpose(), grad_upper.row(r).transpose()};
    }
    EigCI eig_at(int r) const {
        return {eig_lower[r], eig_upper[r], eig_center[r], eig_spread[r]};
    }
};

/// Builds all candidate CIs from a posterior table.
inline CandidateCIs build_cis(const DerivTable& tab, double beta_sqrt, double gamma_sqrt) {
    const int m = tab.size();
    const int d = tab.dim;
    CandidateCIs out;
    out.grad_lower = tab.grad_mean - beta_sqrt * tab.grad_std;
    out.grad_upper = tab.grad_mean + beta_sqrt * tab.grad_std;
    out.eig_lower.resize(m);
    out.eig_upper.resize(m);
    out.eig_center.resize(m);
    out.eig_spread.resize(m);
    for (int r = 0; r < m; ++r) {
        const double center = detail::min_eig_packed(tab.hess_mean, r, d);
        const double spread = tab.hess_std.row(r).maxCoeff();
        out.eig_center[r] = center;
        out.eig_spread[r] = spread;
        out.eig_lower[r] = center - gamma_sqrt * spread;
        out.eig_upper[r] = center + gamma_sqrt * spread;
    }
    return out;
}

enum class Label : unsigned char { unknown = 0, minimum = 1, not_minimum = 2 };

inline const char* label_name(Label l) {
    switch (l) {
    case Label::minimum: return "minimum";
    case Label::not_minimum: return "not_minimum";
    default: return "unknown";
    }
}

/// Three-way partition of the candidate indices. Labels move away from
/// `unknown` exactly once and are never revised.
class Classification {
public:
    Classification() = default;
    explicit Classification(std::size_t n)
        : labels_(n, Label::unknown), n_unknown_(static_cast<int>(n)) {}

    int size() const { return static_cast<int>(labels_.size()); }
    Label label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
    const std::vector<Label>& labels() const { return labels_; }

    int n_minimum() const { return n_minimum_; }
    int n_not_minimum() const { return n_not_minimum_; }
    int n_unknown() const { return n_unknown_; }
    bool all_classified() const { return n_unknown_ == 0; }

    void set(int i, Label l) {
        Label& cur = labels_[static_cast<std::size_t>(i)];
        if (l == Label::unknown || cur == l) return;
        detail::require(cur == Label::unknown, "Classification: labels are never revised");
        cur = l;
        --n_unknown_;
        (l == Label::minimum ? n_minimum_ : n_not_minimum_)++;
    }

    std::vector<int> indices_with(Label want) const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i) {
            if (labels_[static_cast<std::size_t>(i)] == want) out.push_back(i);
        }
        return out;
    }

private:
    std::vector<Label> labels_;
    int n_minimum_ = 0;
    int n_not_minimum_ = 0;
    int n_unknown_ = 0;
};

/// Which set definitions to apply: the plain ones for a finite candidate
/// set, or the d-adjusted ones used when the candidates discretize a
/// continuous set (gradient acceptance widened by (1 + 1/d), gradient
/// rejection requiring a margin of eps/d; the eigenvalue rules are shared).
enum class RuleSet { finite, infinite };

namespace detail {

template <class Lo, class Up>
Label classify_rule(const Lo& lower, const Up& upper, double eig_lo, double eig_hi,
                    const Thresholds& th, RuleSet rules) {
    const int d = static_cast<int>(th.grad_eps.size());
    const double widen = (rules == RuleSet::infinite) ? 1.0 + 1.0 / d : 1.0;
    const double reject_margin = (rules == RuleSet::infinite) ? 1.0 / d : 0.0;

    bool grad_zero_all = true;  // every dimension inside the widened band
    bool grad_nonzero_any = false; // some dimension bounded away from zero
    for (int i = 0; i < d; ++i) {
        const double eps = th.grad_eps[i];
        if (!(-widen * eps < lower[i] && upper[i] < widen * eps)) grad_zero_all = false;
        if (reject_margin * eps <= lower[i] || upper[i] <= -reject_margin * eps) {
            grad_nonzero_any = true;
        }
    }
    const bool eig_positive = eig_lo > -th.eig_eps;
    const bool eig_negative = eig_hi < th.eig_eps;

    if (eig_positive && grad_zero_all) return Label::minimum;
    if (eig_negative || grad_nonzero_any) return Label::not_minimum;
    return Label::unknown;
}

} // namespace detail

/// Classifies one candidate from its CIs; pure rule evaluation.
inline Label classify_point(const GradCI& g, const EigCI& e, const Thresholds& th,
                            RuleSet rules) {
    detail::require(g.lower.size() == th.grad_eps.size(),
                    "classify_point: dimension mismatch with thresholds");
    return detail::classify_rule(g.lower, g.upper, e.lower, e.upper, th, rules);
}

/// One classification sweep: every still-unknown candidate is re-examined
/// under the current CIs; already-classified candidates are never touched.
inline void update_classification(Classification& cls, const CandidateCIs& cis,
                                  const Thresholds& th, RuleSet rules) {
    detail::require(cls.size() == cis.size(),
                    "update_classification: CI count does not match candidates");
    for (int i = 0; i < cls.size(); ++i) {
        if (cls.label(i) != Label::unknown) continue;
        cls.set(i, detail::classify_rule(cis.grad_lower.row(i), cis.grad_upper.row(i),
                                         cis.eig_lower[i], cis.eig_upper[i], th, rules));
    }
}

/// Index of the candidate closest to x in Euclidean distance; ties resolve
/// to the lowest index.
inline int nearest_index(const std::vector<Point>& candidates, const Point& x) {
    detail::require(!candidates.empty(), "nearest_index: empty candidate set");
    int best = 0;
    double best_d = (candidates[0] - x).squaredNorm();
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double dist = (candidates[i] - x).squaredNorm();
        if (dist < best_d) {
            best_d = dist;
            best = static_cast<int>(i);
        }
    }
    return best;
}

/// Label of an arbitrary point: the label of its nearest candidate.
inline Label label_by_nearest(const Classification& cls, const std::vector<Point>& candidates,
                              const Point& x) {
    return cls.label(nearest_index(candidates, x));
}

/// CI scale schedule. `fixed` uses the given square-root scales directly;
/// `finite_bound` applies the union bound over a finite candidate set of
/// known cardinality; `covering_bound` applies the union bound over a
/// covering grid of a compact domain inside [0, r]^d, with tail constants
/// (a, b) of the derivative processes.
struct ScaleSchedule {
    enum class Mode { fixed, finite_bound, covering_bound };

    Mode mode = Mode::fixed;
    double beta_sqrt = 3.0;
    double gamma_sqrt = 3.0;
    double delta = 0.05;
    std::int64_t cardinality = 0; // finite_bound; 0 = infer from candidate count
    double a = 1.0;               // covering_bound tail constant
    double b = 1.0;               // covering_bound tail constant
    double r = 1.0;               // covering_bound domain extent

    struct Scales {
        double beta_sqrt;
        double gamma_sqrt;
    };

    void validate() const {
        if (mode == Mode::fixed) {
            detail::require(beta_sqrt >= 0.0 && gamma_sqrt >= 0.0,
                            "ScaleSchedule: fixed scales must be >= 0");
            return;
        }
        detail::require(delta > 0.0 && delta < 1.0, "ScaleSchedule: delta must be in (0,1)");
        if (mode == Mode::covering_bound) {
            detail::require(a > 0.0 && b > 0.0 && r > 0.0,
                            "ScaleSchedule: covering constants must be > 0");
        }
    }

    Scales at(int t, int d, std::int64_t n_candidates, double eps) const {
        switch (mode) {
        case Mode::fixed: return {beta_sqrt, gamma_sqrt};
        case Mode::finite_bound: {
            const std::int64_t card = cardinality > 0 ? cardinality : n_candidates;
            auto [bt, gt] = finite_bound_scales(t, d, card, delta);
            return {std::sqrt(bt), std::sqrt(gt)};
        }
        case Mode::covering_bound: {
            auto s = covering_bound_scales(t, d, delta, a, b, r, eps);
            return {std::sqrt(s.beta_t), std::sqrt(s.gamma_t)};
        }
        }
        throw UsageError("ScaleSchedule: unknown mode");
    }

    /// beta_t = 2 log((d+1) |X| pi^2 t^2 / (6 delta)),
    /// gamma_t = 2 d^2 log(d^2 (d+1) |X| pi^2 t^2 / (6 delta)).
    static std::pair<double, double> finite_bound_scales(int t, int d, std::int64_t card,
                                                         double delta) {
        detail::require(t >= 1, "finite_bound_scales: t must be >= 1");
        detail::require(delta > 0.0 && delta < 1.0, "finite_bound_scales: delta in (0,1)");
        detail::require(card >= 1, "finite_bound_scales: cardinality must be >= 1");
        const double pi2 = std::numbers::pi * std::numbers::pi;
        const double dd = static_cast<double>(d);
        const double tt = static_cast<double>(t);
        const double common = (dd + 1.0) * static_cast<double>(card) * pi2 * tt * tt / (6.0 * delta);
        const double beta = 2.0 * std::log(common);
        const double gamma = 2.0 * dd * dd * std::log(dd * dd * common);
        return {beta, gamma};
    }

    struct CoveringScales {
        double beta_t;
        double gamma_t;
        long long cover_per_axis; // grid points per axis needed for accuracy eps
    };

    /// Covering-grid variant: the candidate cardinality is replaced by the
    /// ceil'd per-axis covering count tau = ceil(d^2 r L / eps) with
    /// L = b sqrt(log(a (d^2 + d^3) / delta)).
    static CoveringScales covering_bound_scales(int t, int d, double delta, double a, double b,
                                                double r, double eps) {
        detail::require(t >= 1, "covering_bound_scales: t must be >= 1");
        detail::require(delta > 0.0 && delta < 1.0, "covering_bound_scales: delta in (0,1)");
        detail::require(a > 0.0 && b > 0.0 && r > 0.0 && eps > 0.0,
                        "covering_bound_scales: a, b, r, eps must be > 0");
        const double pi2 = std::numbers::pi * std::numbers::pi;
        const double dd = static_cast<double>(d);
        const double tt = static_cast<double>(t);
        const double tail = std::log(a * (dd * dd + dd * dd * dd) / delta);
        detail::require(tail > 0.0, "covering_bound_scales: tail log must be positive");
        const double lip = b * std::sqrt(tail);
        const double tau = std::ceil(dd * dd * r * lip / eps);
        const double log_tau = std::log(tau);
        const double beta =
            2.0 * std::log((dd + 1.0) * pi2 * tt * tt / (6.0 * delta)) + 2.0 * dd * log_tau;
        const double gamma = 2.0 * dd * dd * std::log(dd * dd * (dd + 1.0) * pi2 * tt * tt /
                                                      (6.0 * delta)) +
                             2.0 * dd * dd * log_tau;
        return {beta, gamma, static_cast<long long>(tau)};
    }
};

/// Largest scaled CI half-width diagnostic over a candidate table:
/// max of 2 * beta_sqrt * grad_std and gamma_sqrt * eig_spread. Once this
/// falls to the smallest accuracy parameter, no candidate can stay unknown.
inline double max_scaled_width(const Eigen::MatrixXd& grad_std,
                               const Eigen::VectorXd& eig_spread, double beta_sqrt,
                               double gamma_sqrt) {
    detail::require(grad_std.rows() > 0, "max_scaled_width: empty candidate set");
    const double g = 2.0 * beta_sqrt * grad_std.maxCoeff();
    const double h = gamma_sqrt * eig_spread.maxCoeff();
    return std::max(g, h);
}

} // namespace minima

#endif
