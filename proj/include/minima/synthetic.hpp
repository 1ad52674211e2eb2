#ifndef MINIMA_SYNTHETIC_HPP
#define MINIMA_SYNTHETIC_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "minima/gp.hpp"
#include "minima/classify.hpp"
#include "minima/types.hpp"

namespace minima {

/// A closed-form benchmark truth with analytic derivatives, plus the grid
/// geometry and GP configuration used to search it.
struct SyntheticCase {
    std::string name;
    int dim = 2;
    std::function<double(const Point&)> f;
    std::function<Eigen::VectorXd(const Point&)> grad;
    std::function<Eigen::MatrixXd(const Point&)> hess;
    double lo = 0.0;     // domain interval [lo, hi] per axis
    double hi = 1.0;
    int divisions = 40;  // equal parts per axis; grid has divisions+1 points
    double sub_lo = 0.0; // candidate sub-box [sub_lo, sub_hi] per axis
    double sub_hi = 1.0;
    KernelParams kernel;
    double noise_variance = 0.005;

    Box box() const {
        return {Point::Constant(dim, lo), Point::Constant(dim, hi)};
    }
};

/// Tensor grid over [lo, hi]^dim plus the candidate subset inside the
/// closed sub-box; `spacing` is the per-axis step.
struct Grid {
    std::vector<Point> pool;
    std::vector<Point> candidates;
    double spacing = 0.0;
};

inline Grid build_grid(double lo, double hi, int divisions, double sub_lo, double sub_hi,
                       int dim) {
    detail::require(lo < hi, "build_grid: need lo < hi");
    detail::require(divisions >= 1, "build_grid: divisions must be >= 1");
    detail::require(dim >= 1, "build_grid: dim must be >= 1");
    detail::require(sub_lo <= sub_hi && sub_lo >= lo && sub_hi <= hi,
                    "build_grid: sub-box must sit inside [lo, hi]");
    Grid out;
    out.spacing = (hi - lo) / divisions;
    const int per_axis = divisions + 1;
    const double tol = 1e-9 * (hi - lo); // absorbs round-off at sub-box edges
    std::vector<int> idx(static_cast<std::size_t>(dim), 0);
    for (;;) {
        Point p(dim);
        bool inside = true;
        for (int a = 0; a < dim; ++a) {
            p[a] = lo + idx[static_cast<std::size_t>(a)] * out.spacing;
            if (p[a] < sub_lo - tol || p[a] > sub_hi + tol) inside = false;
        }
        out.pool.push_back(p);
        if (inside) out.candidates.push_back(p);
        int a = dim - 1;
        while (a >= 0 && ++idx[static_cast<std::size_t>(a)] == per_axis) {
            idx[static_cast<std::size_t>(a)] = 0;
            --a;
        }
        if (a < 0) break;
    }
    return out;
}

inline Grid build_grid(const SyntheticCase& c) {
    return build_grid(c.lo, c.hi, c.divisions, c.sub_lo, c.sub_hi, c.dim);
}

inline std::vector<std::string> synthetic_case_names() { return {"case1", "case2", "case3"}; }

/// Named presets. case1: sin(x1)cos(x2) on a trig grid; case2: a separable
/// quartic with four minima; case3: a shifted paraboloid.
inline SyntheticCase synthetic_case(std::string_view name) {
    SyntheticCase c;
    c.name = std::string(name);
    c.dim = 2;
    if (name == "case1") {
        c.f = [](const Point& x) { return std::sin(x[0]) * std::cos(x[1]); };
        c.grad = [](const Point& x) {
            Eigen::VectorXd g(2);
            g[0] = std::cos(x[0]) * std::cos(x[1]);
            g[1] = -std::sin(x[0]) * std::sin(x[1]);
            return g;
        };
        c.hess = [](const Point& x) {
            Eigen::MatrixXd h(2, 2);
            h(0, 0) = h(1, 1) = -std::sin(x[0]) * std::cos(x[1]);
            h(0, 1) = h(1, 0) = -std::cos(x[0]) * std::sin(x[1]);
            return h;
        };
        c.lo = -std::numbers::pi / 2.0;
        c.hi = 7.0 * std::numbers::pi / 2.0;
        c.sub_lo = 0.0;
        c.sub_hi = 3.0 * std::numbers::pi;
        c.kernel = {1.0, 4.5};
    } else if (name == "case2") {
        auto poly = [](double x) {
            return ((x * x * x * x) / 4.0 - (13.0 / 3.0) * x * x * x + 25.0 * x * x -
                    56.0 * x) /
                   3.0;
        };
        auto dpoly = [](double x) { return (x * x * x - 13.0 * x * x + 50.0 * x - 56.0) / 3.0; };
        auto ddpoly = [](double x) { return (3.0 * x * x - 26.0 * x + 50.0) / 3.0; };
        c.f = [poly](const Point& x) { return 18.0 + poly(x[0]) + poly(x[1]); };
        c.grad = [dpoly](const Point& x) {
            Eigen::VectorXd g(2);
            g[0] = dpoly(x[0]);
            g[1] = dpoly(x[1]);
            return g;
        };
        c.hess = [ddpoly](const Point& x) {
            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
            h(0, 0) = ddpoly(x[0]);
            h(1, 1) = ddpoly(x[1]);
            return h;
        };
        c.lo = -1.0;
        c.hi = 9.0;
        c.sub_lo = 0.0;
        c.sub_hi = 8.0;
        c.kernel = {2.0, 3.0};
    } else if (name == "case3") {
        c.f = [](const Point& x) {
            return (x[0] - 4.0) * (x[0] - 4.0) + (x[1] - 4.0) * (x[1] - 4.0);
        };
        c.grad = [](const Point& x) {
            Eigen::VectorXd g(2);
            g[0] = 2.0 * (x[0] - 4.0);
            g[1] = 2.0 * (x[1] - 4.0);
            return g;
        };
        c.hess = [](const Point&) {
            return Eigen::MatrixXd(2.0 * Eigen::MatrixXd::Identity(2, 2));
        };
        c.lo = -1.0;
        c.hi = 9.0;
        c.sub_lo = 0.0;
        c.sub_hi = 8.0;
        c.kernel = {2.0, 3.0};
    } else {
        throw UsageError("unknown synthetic case '" + std::string(name) + "'");
    }
    return c;
}

/// Candidate points that are local minima of the analytic truth: gradient
/// zero to 1e-9 in the max norm and a strictly positive-definite Hessian.
inline std::vector<Point> true_minima(const SyntheticCase& c,
                                      const std::vector<Point>& candidates) {
    std::vector<Point> out;
    for (const Point& x : candidates) {
        if (c.grad(x).cwiseAbs().maxCoeff() >= 1e-9) continue;
        if (min_eigenvalue(c.hess(x)) <= 0.0) continue;
        out.push_back(x);
    }
    return out;
}

/// Precision, recall and F-score of an estimated minimum set.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double fscore = 0.0;
};

namespace detail {

inline std::vector<double> point_key(const Point& p) {
    return std::vector<double>(p.data(), p.data() + p.size());
}

} // namespace detail

/// Exact-coordinate set comparison; the spec convention 0/0 = 0 applies to
/// both the precision of an empty estimate and an all-miss F-score.
inline Metrics score_estimate(const std::vector<Point>& truth,
                              const std::vector<Point>& estimate) {
    detail::require(!truth.empty(), "score_estimate: empty truth set");
    std::map<std::vector<double>, bool> members;
    for (const Point& p : truth) members[detail::point_key(p)] = true;
    int hit = 0;
    for (const Point& p : estimate) {
        auto it = members.find(detail::point_key(p));
        if (it != members.end() && it->second) {
            ++hit;
            it->second = false; // count duplicates once
        }
    }
    Metrics m;
    m.precision = estimate.empty() ? 0.0 : static_cast<double>(hit) / estimate.size();
    m.recall = static_cast<double>(hit) / truth.size();
    const double denom = m.precision + m.recall;
    m.fscore = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
    return m;
}

/// Data-driven truth: the posterior mean of a GP fitted to a table of
/// (coordinates, value) rows, with analytic derivatives of the mean
/// surface. Rows whose |value| exceeds the cutoff are dropped first.
class FittedTruth {
public:
    FittedTruth(const std::vector<std::pair<Point, double>>& rows, KernelParams kernel,
                double noise_variance,
                double outlier_cutoff = std::numeric_limits<double>::infinity())
        : kernel_(kernel), noise_variance_(noise_variance) {
        TrainingSet keep;
        keep.noise_variance = noise_variance;
        for (const auto& [x, y] : rows) {
            if (std::abs(y) > outlier_cutoff) {
                ++dropped_;
                continue;
            }
            keep.add(x, y);
        }
        detail::require(keep.size() > 0, "FittedTruth: no rows left after outlier filtering");
        outputs_ = keep.outputs;
        Posterior post(kernel_, keep);
        inputs_ = post.training().inputs;
        weights_ = post.weights();
    }

    int dim() const { return static_cast<int>(inputs_[0].size()); }
    int size() const { return static_cast<int>(inputs_.size()); }
    int dropped() const { return dropped_; }
    const KernelParams& kernel() const { return kernel_; }
    double noise_variance() const { return noise_variance_; }
    const std::vector<Point>& inputs() const { return inputs_; }
    const Eigen::VectorXd& outputs() const { return outputs_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    /// The fitted mean surface.
    double operator()(const Point& x) const {
        double v = 0.0;
        for (std::size_t l = 0; l < inputs_.size(); ++l) {
            v += weights_[static_cast<Eigen::Index>(l)] * kernel::value(kernel_, inputs_[l], x);
        }
        return v;
    }

    /// Exact gradient of the mean surface (a finite kernel expansion).
    Eigen::VectorXd grad(const Point& x) const {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
        for (std::size_t l = 0; l < inputs_.size(); ++l) {
            const double w = weights_[static_cast<Eigen::Index>(l)];
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                g[i] += w * kernel::value_grad_cov(kernel_, inputs_[l], x, static_cast<int>(i));
            }
        }
        return g;
    }

    /// Exact Hessian of the mean surface.
    Eigen::MatrixXd hess(const Point& x) const {
        const auto d = x.size();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t l = 0; l < inputs_.size(); ++l) {
            const double w = weights_[static_cast<Eigen::Index>(l)];
            for (Eigen::Index j = 0; j < d; ++j) {
                for (Eigen::Index k = j; k < d; ++k) {
                    const double v = w * kernel::value_hess_cov(kernel_, inputs_[l], x,
                                                                static_cast<int>(j),
                                                                static_cast<int>(k));
                    h(j, k) += v;
                    if (j != k) h(k, j) += v;
                }
            }
        }
        return h;
    }

    /// Wraps the fitted surface as a SyntheticCase over the given grid, so
    /// the usual run/bench machinery applies to data-driven truths.
    SyntheticCase as_case(std::string name, double lo, double hi, int divisions, double sub_lo,
                          double sub_hi) const {
        SyntheticCase c;
        c.name = std::move(name);
        c.dim = dim();
        FittedTruth copy = *this;
        c.f = [copy](const Point& x) { return copy(x); };
        c.grad = [copy](const Point& x) { return copy.grad(x); };
        c.hess = [copy](const Point& x) { return copy.hess(x); };
        c.lo = lo;
        c.hi = hi;
        c.divisions = divisions;
        c.sub_lo = sub_lo;
        c.sub_hi = sub_hi;
        c.kernel = kernel_;
        c.noise_variance = noise_variance_;
        return c;
    }

private:
    KernelParams kernel_;
    double noise_variance_;
    std::vector<Point> inputs_;
    Eigen::VectorXd outputs_;
    Eigen::VectorXd weights_;
    int dropped_ = 0;
};

/// Builds a data-driven truth; alias for the constructor.
inline FittedTruth fit_truth(const std::vector<std::pair<Point, double>>& rows,
                             const KernelParams& kernel, double noise_variance,
                             double outlier_cutoff = std::numeric_limits<double>::infinity()) {
    return FittedTruth(rows, kernel, noise_variance, outlier_cutoff);
}

} // namespace minima

#endif
