#ifndef MINIMA_GP_HPP
#define MINIMA_GP_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "minima/kernel.hpp"
#include "minima/types.hpp"

namespace minima {

/// Observed inputs and noisy outputs, y_i = f(x_i) + e_i with Var[e_i] = noise_variance.
struct TrainingSet {
    std::vector<Point> inputs;
    Eigen::VectorXd outputs;
    double noise_variance = 0.0;

    void validate() const {
        detail::require(static_cast<Eigen::Index>(inputs.size()) == outputs.size(),
                        "TrainingSet: inputs and outputs differ in length");
        detail::require(noise_variance >= 0.0, "TrainingSet: noise_variance must be >= 0");
        for (std::size_t i = 1; i < inputs.size(); ++i) {
            detail::require(inputs[i].size() == inputs[0].size(),
                            "TrainingSet: inconsistent input dimensions");
        }
    }

    int dim() const { return inputs.empty() ? -1 : static_cast<int>(inputs[0].size()); }
    int size() const { return static_cast<int>(inputs.size()); }

    void add(const Point& x, double y) {
        inputs.push_back(x);
        outputs.conservativeResize(outputs.size() + 1);
        outputs[outputs.size() - 1] = y;
    }
};

/// Posterior mean and variance of f at one point.
struct ValueEstimate {
    double mean = 0.0;
    double variance = 0.0;
};

/// Per-dimension posterior mean and standard deviation of the gradient.
struct GradEstimate {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

/// Entrywise posterior mean and standard deviation of the Hessian; both symmetric.
struct HessEstimate {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd std;
};

/// Posterior value mean/variance for a batch of points, one row per point.
struct ValueTable {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Gradient and Hessian posteriors for a batch of points, one row per point.
/// Hessian entries are packed per unordered pair (j <= k), row-major.
struct DerivTable {
    int dim = 0;
    Eigen::MatrixXd grad_mean; // m x d
    Eigen::MatrixXd grad_std;  // m x d
    Eigen::MatrixXd hess_mean; // m x d(d+1)/2
    Eigen::MatrixXd hess_std;  // m x d(d+1)/2

    int size() const { return static_cast<int>(grad_mean.rows()); }

    static int n_pairs(int d) { return d * (d + 1) / 2; }

    static int pair_index(int j, int k, int d) {
        if (j > k) std::swap(j, k);
        return j * d - j * (j - 1) / 2 + (k - j);
    }

    Eigen::MatrixXd hess_mean_matrix(int row) const { return unpack(hess_mean, row); }
    Eigen::MatrixXd hess_std_matrix(int row) const { return unpack(hess_std, row); }

private:
    Eigen::MatrixXd unpack(const Eigen::MatrixXd& packed, int row) const {
        Eigen::MatrixXd out(dim, dim);
        for (int j = 0; j < dim; ++j)
            for (int k = j; k < dim; ++k) out(j, k) = out(k, j) = packed(row, pair_index(j, k, dim));
        return out;
    }
};

namespace detail {

/// Lower Cholesky factor of M, escalating a diagonal jitter from
/// 1e-10*scale by factors of ten up to 1e-6*scale before giving up.
/// On success *jitter_used receives the jitter that was applied.
inline Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& m, double scale,
                                         const char* context, double* jitter_used = nullptr) {
    double jitter = 0.0;
    for (;;) {
        Eigen::MatrixXd c = m;
        if (jitter > 0.0) c.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = jitter;
            return llt.matrixL();
        }
        if (jitter == 0.0) {
            jitter = 1e-10 * scale;
        } else if (jitter < 1e-6 * scale) {
            jitter *= 10.0;
        } else {
            throw NumericalError(std::string(context) + ": Cholesky failed for " +
                                 std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                 " matrix even with jitter " + std::to_string(jitter));
        }
    }
}

/// Prior self-variance of the packed derivative column `col` (gradient
/// components first, then Hessian pairs) at any point of dimension d.
inline double deriv_prior_self(const KernelParams& p, int d, int col) {
    const double c = 2.0 / p.lengthscale;
    if (col < d) return c * p.signal_variance; // gradient component
    int q = col - d;
    for (int j = 0; j < d; ++j) {
        for (int k = j; k < d; ++k) {
            if (q == 0) return (j == k ? 3.0 * c * c : c * c) * p.signal_variance;
            --q;
        }
    }
    throw UsageError("deriv_prior_self: column out of range");
}

/// Fills one row (indexed by training point `a`) of the packed derivative
/// columns for query point `b`: d gradient columns then d(d+1)/2 Hessian
/// columns, all sharing the same exponential factor.
template <class Row>
inline void fill_deriv_row(const KernelParams& p, const Point& a, const Point& b, Row&& row) {
    const int d = static_cast<int>(a.size());
    const double e = kernel::value(p, a, b);
    const double c = 2.0 / p.lengthscale;
    int col = 0;
    for (int i = 0; i < d; ++i) row[col++] = c * (a[i] - b[i]) * e;
    for (int j = 0; j < d; ++j) {
        for (int k = j; k < d; ++k) {
            const double delta = (j == k) ? 1.0 : 0.0;
            row[col++] = (c * c * (a[j] - b[j]) * (a[k] - b[k]) - c * delta) * e;
        }
    }
}

inline DerivTable package_deriv_table(const KernelParams& p, int d, Eigen::Index m,
                                      const Eigen::VectorXd& means,
                                      const Eigen::VectorXd& vars) {
    const int npairs = DerivTable::n_pairs(d);
    const int cols_per_pt = d + npairs;
    DerivTable out;
    out.dim = d;
    out.grad_mean.resize(m, d);
    out.grad_std.resize(m, d);
    out.hess_mean.resize(m, npairs);
    out.hess_std.resize(m, npairs);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index base = r * cols_per_pt;
        for (int i = 0; i < d; ++i) {
            out.grad_mean(r, i) = means[base + i];
            out.grad_std(r, i) = std::sqrt(clamp_variance(vars[base + i], "gradient posterior"));
        }
        for (int q = 0; q < npairs; ++q) {
            out.hess_mean(r, q) = means[base + d + q];
            out.hess_std(r, q) =
                std::sqrt(clamp_variance(vars[base + d + q], "Hessian posterior"));
        }
    }
    return out;
}

} // namespace detail

/// GP posterior over f given a training set; immutable once constructed.
/// All queries are read-only and thread-safe.
class Posterior {
public:
    Posterior(KernelParams kernel, TrainingSet training)
        : kernel_(kernel), train_(std::move(training)) {
        kernel_.validate();
        train_.validate();
        const int t = train_.size();
        if (t > 0) {
            Eigen::MatrixXd c(t, t);
            for (int i = 0; i < t; ++i) {
                for (int j = 0; j <= i; ++j) {
                    c(i, j) = c(j, i) = kernel::value(kernel_, train_.inputs[i], train_.inputs[j]);
                }
            }
            c.diagonal().array() += train_.noise_variance;
            chol_ = detail::jittered_cholesky(c, kernel_.signal_variance, "Posterior fit");
            weights_ = chol_.triangularView<Eigen::Lower>().solve(train_.outputs);
            chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(weights_);
        }
    }

    const KernelParams& kernel() const { return kernel_; }
    const TrainingSet& training() const { return train_; }
    int size() const { return train_.size(); }
    int dim() const { return train_.dim(); }
    const Eigen::MatrixXd& chol_factor() const { return chol_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    /// Posterior mean and variance of f(x); variance clamped at zero.
    ValueEstimate value(const Point& x) const {
        check_dim(x);
        if (size() == 0) return {0.0, kernel_.signal_variance};
        Eigen::VectorXd k0 = value_column(x);
        const double mean = k0.dot(weights_);
        Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(k0);
        const double var = detail::clamp_variance(kernel_.signal_variance - w.squaredNorm(),
                                                  "value posterior");
        return {mean, var};
    }

    /// Posterior covariance of f between two points.
    double cov(const Point& a, const Point& b) const {
        check_dim(a);
        check_dim(b);
        const double prior = kernel::value(kernel_, a, b);
        if (size() == 0) return prior;
        Eigen::VectorXd wa = chol_.triangularView<Eigen::Lower>().solve(value_column(a));
        Eigen::VectorXd wb = chol_.triangularView<Eigen::Lower>().solve(value_column(b));
        return prior - wa.dot(wb);
    }

    /// Posterior gradient distribution at x.
    GradEstimate grad(const Point& x) const {
        DerivTable tab = deriv_table({x});
        return {tab.grad_mean.row(0).transpose(), tab.grad_std.row(0).transpose()};
    }

    /// Posterior Hessian distribution at x; mean and std matrices symmetric
    /// by construction (each unordered pair computed once).
    HessEstimate hess(const Point& x) const {
        DerivTable tab = deriv_table({x});
        return {tab.hess_mean_matrix(0), tab.hess_std_matrix(0)};
    }

    /// Gradient standard deviations at x after a hypothetical new observation
    /// of f at `next`; the mean is left unchanged. Rank-one reduction:
    ///   var' = var - cross^2 / (var_f(next) + noise).
    Eigen::VectorXd lookahead_grad_std(const Point& x, const Point& next) const {
        check_dim(x);
        check_dim(next);
        const int d = static_cast<int>(x.size());
        GradEstimate g = grad(x);
        const double denom = value(next).variance + train_.noise_variance;
        Eigen::VectorXd out(d);
        if (denom <= 0.0) { // nothing left to learn at `next`
            for (int i = 0; i < d; ++i) out[i] = g.std[i];
            return out;
        }
        Eigen::MatrixXd w1 = grad_solves(x);
        Eigen::VectorXd w0;
        if (size() > 0) w0 = chol_.triangularView<Eigen::Lower>().solve(value_column(next));
        for (int i = 0; i < d; ++i) {
            double cross = kernel::value_grad_cov(kernel_, next, x, i);
            if (size() > 0) cross -= w1.col(i).dot(w0);
            const double var = g.std[i] * g.std[i] - cross * cross / denom;
            out[i] = std::sqrt(detail::clamp_variance(var, "look-ahead gradient posterior"));
        }
        return out;
    }

    /// n draws from the joint posterior over the listed points; one row per
    /// draw. Identical generator state gives identical output.
    Eigen::MatrixXd sample_joint(const std::vector<Point>& points, int n, Rng& rng) const {
        detail::require(!points.empty(), "sample_joint: empty point list");
        detail::require(n >= 1, "sample_joint: need at least one draw");
        const auto m = static_cast<Eigen::Index>(points.size());
        Eigen::VectorXd mean(m);
        Eigen::MatrixXd cov(m, m);
        joint_moments(points, mean, cov);
        Eigen::MatrixXd lc =
            detail::jittered_cholesky(cov, kernel_.signal_variance, "sample_joint", nullptr);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd out(n, m);
        Eigen::VectorXd z(m);
        for (int s = 0; s < n; ++s) {
            for (Eigen::Index i = 0; i < m; ++i) z[i] = normal(rng);
            out.row(s) = (mean + lc * z).transpose();
        }
        return out;
    }

    /// Posterior mean vector and covariance matrix over a list of points.
    void joint_moments(const std::vector<Point>& points, Eigen::VectorXd& mean,
                       Eigen::MatrixXd& cov) const {
        const auto m = static_cast<Eigen::Index>(points.size());
        mean.resize(m);
        cov.resize(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            check_dim(points[i]);
            for (Eigen::Index j = 0; j <= i; ++j) {
                cov(i, j) = cov(j, i) = kernel::value(kernel_, points[i], points[j]);
            }
        }
        if (size() == 0) {
            mean.setZero();
            return;
        }
        const int t = size();
        Eigen::MatrixXd k0(t, m);
        for (Eigen::Index c = 0; c < m; ++c) k0.col(c) = value_column(points[c]);
        mean = k0.transpose() * weights_;
        Eigen::MatrixXd w = chol_.triangularView<Eigen::Lower>().solve(k0);
        cov -= w.transpose() * w;
    }

    /// Value posterior for a batch of points.
    ValueTable value_table(const std::vector<Point>& points) const {
        const auto m = static_cast<Eigen::Index>(points.size());
        ValueTable out;
        out.mean = Eigen::VectorXd::Zero(m);
        out.variance = Eigen::VectorXd::Constant(m, kernel_.signal_variance);
        if (size() == 0) return out;
        const int t = size();
        Eigen::MatrixXd k0(t, m);
        for (Eigen::Index c = 0; c < m; ++c) {
            check_dim(points[c]);
            k0.col(c) = value_column(points[c]);
        }
        out.mean = k0.transpose() * weights_;
        chol_.triangularView<Eigen::Lower>().solveInPlace(k0);
        for (Eigen::Index c = 0; c < m; ++c) {
            out.variance[c] = detail::clamp_variance(
                kernel_.signal_variance - k0.col(c).squaredNorm(), "value posterior");
        }
        return out;
    }

    /// Gradient/Hessian posterior for a batch of points.
    DerivTable deriv_table(const std::vector<Point>& points) const {
        detail::require(!points.empty(), "deriv_table: empty point list");
        const int d = static_cast<int>(points[0].size());
        const auto m = static_cast<Eigen::Index>(points.size());
        const int cols_per_pt = d + DerivTable::n_pairs(d);
        const Eigen::Index cols = m * cols_per_pt;
        Eigen::VectorXd means = Eigen::VectorXd::Zero(cols);
        Eigen::VectorXd vars(cols);
        for (Eigen::Index c = 0; c < cols; ++c) {
            vars[c] = detail::deriv_prior_self(kernel_, d, static_cast<int>(c % cols_per_pt));
        }
        if (size() > 0) {
            const int t = size();
            Eigen::MatrixXd k(t, cols);
            for (Eigen::Index r = 0; r < m; ++r) {
                check_dim(points[r]);
                for (int l = 0; l < t; ++l) {
                    detail::fill_deriv_row(kernel_, train_.inputs[l], points[r],
                                           k.row(l).segment(r * cols_per_pt, cols_per_pt));
                }
            }
            means = k.transpose() * weights_;
            chol_.triangularView<Eigen::Lower>().solveInPlace(k);
            for (Eigen::Index c = 0; c < cols; ++c) vars[c] -= k.col(c).squaredNorm();
        }
        return detail::package_deriv_table(kernel_, d, m, means, vars);
    }

    /// Solved gradient cross-covariance columns at x: column i holds
    /// L^{-1} k1_i(x) where k1_i(x)_l = Cov[f(x_l), g_i(x)].
    Eigen::MatrixXd grad_solves(const Point& x) const {
        const int d = static_cast<int>(x.size());
        const int t = size();
        Eigen::MatrixXd k1(t, d);
        for (int l = 0; l < t; ++l) {
            for (int i = 0; i < d; ++i) {
                k1(l, i) = kernel::value_grad_cov(kernel_, train_.inputs[l], x, i);
            }
        }
        if (t > 0) chol_.triangularView<Eigen::Lower>().solveInPlace(k1);
        return k1;
    }

private:
    void check_dim(const Point& x) const {
        detail::require(dim() < 0 || x.size() == dim(), "Posterior: query dimension mismatch");
    }

    Eigen::VectorXd value_column(const Point& x) const {
        const int t = size();
        Eigen::VectorXd k0(t);
        for (int l = 0; l < t; ++l) k0[l] = kernel::value(kernel_, train_.inputs[l], x);
        return k0;
    }

    KernelParams kernel_;
    TrainingSet train_;
    Eigen::MatrixXd chol_;    // lower factor of K_t + noise*I (+jitter)
    Eigen::VectorXd weights_; // (K_t + noise*I)^{-1} y
};

/// Fits the GP posterior; alias for the constructor.
inline Posterior fit(const KernelParams& kernel, TrainingSet training) {
    return Posterior(kernel, std::move(training));
}

/// Incrementally updated GP over fixed query blocks. Produces the same
/// posterior tables as refitting a Posterior from scratch after every
/// observation (verified by tests), at O(t * columns) per step instead of
/// O(t^2 * columns). Owned by a single run; not thread-safe.
class OnlineGP {
public:
    OnlineGP(KernelParams kernel, double noise_variance, int capacity)
        : kernel_(kernel), sigma2_(noise_variance), cap_(capacity) {
        kernel_.validate();
        detail::require(noise_variance >= 0.0, "OnlineGP: noise_variance must be >= 0");
        detail::require(capacity >= 1, "OnlineGP: capacity must be >= 1");
        chol_.setZero(cap_, cap_);
        ys_.setZero(cap_);
    }

    int attach_value_block(std::vector<Point> points) {
        return attach_block(std::move(points), false);
    }

    int attach_deriv_block(std::vector<Point> points) {
        return attach_block(std::move(points), true);
    }

    /// Adds one observation and updates the factor and all query blocks.
    void observe(const Point& x, double y) {
        detail::require(t_ < cap_, "OnlineGP: capacity exceeded");
        if (dim_ < 0) {
            dim_ = static_cast<int>(x.size());
        } else {
            detail::require(x.size() == dim_, "OnlineGP: observation dimension mismatch");
        }
        const int told = t_;
        for (auto& blk : blocks_) fill_prior_row(blk, told, x);
        xs_.push_back(x);
        ys_[told] = y;
        t_ = told + 1;

        Eigen::VectorXd cvec(told);
        for (int l = 0; l < told; ++l) cvec[l] = kernel::value(kernel_, xs_[l], x);
        const double self = kernel_.signal_variance + sigma2_ + jitter_;
        Eigen::VectorXd v = cvec;
        if (told > 0) {
            chol_.topLeftCorner(told, told).triangularView<Eigen::Lower>().solveInPlace(v);
        }
        const double s2 = self - v.squaredNorm();
        const double floor = 1e-12 * (kernel_.signal_variance + sigma2_);
        if (s2 <= floor) {
            refactor();
        } else {
            const double s = std::sqrt(s2);
            chol_.row(told).head(told) = v.transpose();
            chol_(told, told) = s;
            for (auto& blk : blocks_) {
                if (blk.k.cols() == 0) continue;
                Eigen::RowVectorXd wrow = blk.k.row(told);
                if (told > 0) wrow -= v.transpose() * blk.w.topRows(told);
                wrow /= s;
                blk.w.row(told) = wrow;
                blk.norms += wrow.array().square().matrix().transpose();
            }
        }
        refresh_weights();
    }

    int size() const { return t_; }
    int dim() const { return dim_; }
    const KernelParams& kernel() const { return kernel_; }
    double noise_variance() const { return sigma2_; }

    TrainingSet training() const {
        TrainingSet out;
        out.inputs = xs_;
        out.outputs = ys_.head(t_);
        out.noise_variance = sigma2_;
        return out;
    }

    ValueTable value_table(int block) const {
        const Block& blk = blocks_.at(block);
        detail::require(!blk.deriv, "OnlineGP: block is not a value block");
        ValueTable out;
        out.mean = block_means(blk);
        const auto m = static_cast<Eigen::Index>(blk.points.size());
        out.variance.resize(m);
        for (Eigen::Index c = 0; c < m; ++c) {
            out.variance[c] =
                detail::clamp_variance(blk.prior_self[c] - blk.norms[c], "value posterior");
        }
        return out;
    }

    DerivTable deriv_table(int block) const {
        const Block& blk = blocks_.at(block);
        detail::require(blk.deriv, "OnlineGP: block is not a derivative block");
        Eigen::VectorXd means = block_means(blk);
        Eigen::VectorXd vars = blk.prior_self - blk.norms;
        return detail::package_deriv_table(kernel_, dim_for(blk), blk.points.size(), means, vars);
    }

    const std::vector<Point>& block_points(int block) const { return blocks_.at(block).points; }

    /// Solved gradient columns at an arbitrary point (t x d).
    Eigen::MatrixXd grad_solves(const Point& x) const {
        const int d = static_cast<int>(x.size());
        Eigen::MatrixXd k1(t_, d);
        for (int l = 0; l < t_; ++l) {
            for (int i = 0; i < d; ++i) {
                k1(l, i) = kernel::value_grad_cov(kernel_, xs_[l], x, i);
            }
        }
        if (t_ > 0) {
            chol_.topLeftCorner(t_, t_).triangularView<Eigen::Lower>().solveInPlace(k1);
        }
        return k1;
    }

    /// Posterior Cov[g_i(x), f(p_c)] for every point p_c of a value block (m x d).
    Eigen::MatrixXd cross_grad_value(const Point& x, int block) const {
        const Block& blk = blocks_.at(block);
        detail::require(!blk.deriv, "OnlineGP: block is not a value block");
        const int d = static_cast<int>(x.size());
        const auto m = static_cast<Eigen::Index>(blk.points.size());
        Eigen::MatrixXd out(m, d);
        for (Eigen::Index c = 0; c < m; ++c) {
            for (int i = 0; i < d; ++i) {
                out(c, i) = kernel::value_grad_cov(kernel_, blk.points[c], x, i);
            }
        }
        if (t_ > 0) out -= blk.w.topRows(t_).transpose() * grad_solves(x);
        return out;
    }

    /// Posterior covariance among selected columns of a value block.
    Eigen::MatrixXd block_cov(int block, const std::vector<int>& cols) const {
        const Block& blk = blocks_.at(block);
        detail::require(!blk.deriv, "OnlineGP: block is not a value block");
        const auto m = static_cast<Eigen::Index>(cols.size());
        Eigen::MatrixXd out(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                double v = kernel::value(kernel_, blk.points[cols[i]], blk.points[cols[j]]);
                if (t_ > 0) v -= blk.w.col(cols[i]).head(t_).dot(blk.w.col(cols[j]).head(t_));
                out(i, j) = out(j, i) = v;
            }
        }
        return out;
    }

    /// Posterior means of selected columns of a value block.
    Eigen::VectorXd block_mean(int block, const std::vector<int>& cols) const {
        const Block& blk = blocks_.at(block);
        const auto m = static_cast<Eigen::Index>(cols.size());
        Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
        if (t_ == 0) return out;
        for (Eigen::Index i = 0; i < m; ++i) {
            out[i] = blk.k.col(cols[i]).head(t_).dot(alpha_);
        }
        return out;
    }

private:
    struct Block {
        bool deriv = false;
        std::vector<Point> points;
        Eigen::MatrixXd k;          // cap x cols, prior cross-covariance rows
        Eigen::MatrixXd w;          // cap x cols, L^{-1} k rows filled so far
        Eigen::VectorXd norms;      // per column, squared norm of solved rows
        Eigen::VectorXd prior_self; // per column, prior self-variance
    };

    int dim_for(const Block& blk) const {
        return blk.points.empty() ? 0 : static_cast<int>(blk.points[0].size());
    }

    int attach_block(std::vector<Point> points, bool deriv) {
        detail::require(t_ == 0, "OnlineGP: attach blocks before observing");
        Block blk;
        blk.deriv = deriv;
        blk.points = std::move(points);
        const int d = dim_for(blk);
        const Eigen::Index cols =
            static_cast<Eigen::Index>(blk.points.size()) * (deriv ? d + DerivTable::n_pairs(d) : 1);
        blk.k.setZero(cap_, cols);
        blk.w.setZero(cap_, cols);
        blk.norms.setZero(cols);
        blk.prior_self.resize(cols);
        if (deriv) {
            const int cols_per_pt = d + DerivTable::n_pairs(d);
            for (Eigen::Index c = 0; c < cols; ++c) {
                blk.prior_self[c] =
                    detail::deriv_prior_self(kernel_, d, static_cast<int>(c % cols_per_pt));
            }
        } else {
            blk.prior_self.setConstant(kernel_.signal_variance);
        }
        blocks_.push_back(std::move(blk));
        return static_cast<int>(blocks_.size() - 1);
    }

    void fill_prior_row(Block& blk, int row, const Point& x) {
        if (blk.points.empty()) return;
        if (!blk.deriv) {
            for (std::size_t c = 0; c < blk.points.size(); ++c) {
                blk.k(row, static_cast<Eigen::Index>(c)) = kernel::value(kernel_, x, blk.points[c]);
            }
            return;
        }
        const int d = dim_for(blk);
        const int cols_per_pt = d + DerivTable::n_pairs(d);
        for (std::size_t c = 0; c < blk.points.size(); ++c) {
            detail::fill_deriv_row(
                kernel_, x, blk.points[c],
                blk.k.row(row).segment(static_cast<Eigen::Index>(c) * cols_per_pt, cols_per_pt));
        }
    }

    /// Full refactorization with escalating jitter; rebuilds every block.
    void refactor() {
        Eigen::MatrixXd c(t_, t_);
        for (int i = 0; i < t_; ++i) {
            for (int j = 0; j <= i; ++j) {
                c(i, j) = c(j, i) = kernel::value(kernel_, xs_[i], xs_[j]);
            }
        }
        c.diagonal().array() += sigma2_;
        double jitter = std::max(jitter_, 1e-10 * kernel_.signal_variance);
        for (;;) {
            Eigen::MatrixXd m = c;
            m.diagonal().array() += jitter;
            Eigen::LLT<Eigen::MatrixXd> llt(m);
            if (llt.info() == Eigen::Success) {
                chol_.topLeftCorner(t_, t_) = llt.matrixL();
                break;
            }
            if (jitter >= 1e-6 * kernel_.signal_variance) {
                throw NumericalError("OnlineGP: Cholesky failed after jitter escalation at t=" +
                                     std::to_string(t_));
            }
            jitter *= 10.0;
        }
        jitter_ = jitter;
        for (auto& blk : blocks_) {
            if (blk.k.cols() == 0) continue;
            blk.w.topRows(t_) = blk.k.topRows(t_);
            chol_.topLeftCorner(t_, t_).triangularView<Eigen::Lower>().solveInPlace(
                blk.w.topRows(t_));
            for (Eigen::Index col = 0; col < blk.w.cols(); ++col) {
                blk.norms[col] = blk.w.col(col).head(t_).squaredNorm();
            }
        }
    }

    void refresh_weights() {
        alpha_ = ys_.head(t_);
        chol_.topLeftCorner(t_, t_).triangularView<Eigen::Lower>().solveInPlace(alpha_);
        chol_.topLeftCorner(t_, t_).transpose().triangularView<Eigen::Upper>().solveInPlace(alpha_);
    }

    Eigen::VectorXd block_means(const Block& blk) const {
        if (t_ == 0) return Eigen::VectorXd::Zero(blk.k.cols());
        return blk.k.topRows(t_).transpose() * alpha_;
    }

    KernelParams kernel_;
    double sigma2_;
    int cap_;
    int t_ = 0;
    int dim_ = -1;
    std::vector<Point> xs_;
    Eigen::VectorXd ys_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
    std::vector<Block> blocks_;
};

} // namespace minima

#endif
