#ifndef MINIMA_KERNEL_HPP
#define MINIMA_KERNEL_HPP

#include <cmath>
#include <utility>

#include "minima/types.hpp"

namespace minima {

/// Hyperparameters of the Gaussian kernel
///   k(x, x') = signal_variance * exp(-|x - x'|^2 / lengthscale).
/// The lengthscale divides the squared distance directly.
struct KernelParams {
    double signal_variance = 1.0;
    double lengthscale = 1.0;

    void validate() const {
        detail::require(signal_variance > 0.0, "KernelParams: signal_variance must be > 0");
        detail::require(lengthscale > 0.0, "KernelParams: lengthscale must be > 0");
    }
};

/// Gaussian kernel and its analytic partial derivatives through order four.
/// All functions are pure and thread-safe. Derivatives are named by the
/// covariance they represent between the latent function f, its gradient
/// components g_i = df/dx_i and its Hessian entries h_jk = d2f/dx_j dx_k.
namespace kernel {

namespace detail2 {

inline void check_dims(const Point& a, const Point& b) {
    detail::require(a.size() == b.size(), "kernel: dimension mismatch between inputs");
}

inline void check_index(const Point& a, int i) {
    detail::require(i >= 0 && i < a.size(), "kernel: coordinate index out of range");
}

} // namespace detail2

/// k(a, b) = Cov[f(a), f(b)].
inline double value(const KernelParams& p, const Point& a, const Point& b) {
    detail2::check_dims(a, b);
    return p.signal_variance * std::exp(-(a - b).squaredNorm() / p.lengthscale);
}

/// Cov[f(a), g_i(b)] = dk(a, b)/db_i.
inline double value_grad_cov(const KernelParams& p, const Point& a, const Point& b, int i) {
    detail2::check_dims(a, b);
    detail2::check_index(a, i);
    const double u = a[i] - b[i];
    return (2.0 * u / p.lengthscale) * value(p, a, b);
}

/// Cov[f(a), h_jk(b)] = d2k(a, b)/db_j db_k. Symmetric in (j, k), exactly:
/// the indices are canonicalized so both orders run the same arithmetic.
inline double value_hess_cov(const KernelParams& p, const Point& a, const Point& b, int j,
                             int k) {
    detail2::check_dims(a, b);
    detail2::check_index(a, j);
    detail2::check_index(a, k);
    if (j > k) std::swap(j, k);
    const double c = 2.0 / p.lengthscale;
    const double uj = a[j] - b[j];
    const double uk = a[k] - b[k];
    const double delta = (j == k) ? 1.0 : 0.0;
    return (c * c * uj * uk - c * delta) * value(p, a, b);
}

/// Cov[g_i(a), g_i(b)] = d2k(a, b)/da_i db_i.
inline double grad_cov(const KernelParams& p, const Point& a, const Point& b, int i) {
    detail2::check_dims(a, b);
    detail2::check_index(a, i);
    const double c = 2.0 / p.lengthscale;
    const double u = a[i] - b[i];
    return (c - c * c * u * u) * value(p, a, b);
}

/// Cov[h_jk(a), h_jk(b)] = d4k(a, b)/da_j da_k db_j db_k.
///
/// For the Gaussian kernel the stationary form k(u), u = a - b, gives
///   j != k : (-c + c^2 u_j^2)(-c + c^2 u_k^2) k(u)
///   j == k : (3c^2 - 6c^3 u_j^2 + c^4 u_j^4) k(u)
/// with c = 2 / lengthscale.
inline double hess_cov(const KernelParams& p, const Point& a, const Point& b, int j, int k) {
    detail2::check_dims(a, b);
    detail2::check_index(a, j);
    detail2::check_index(a, k);
    if (j > k) std::swap(j, k);
    const double c = 2.0 / p.lengthscale;
    const double uj = a[j] - b[j];
    const double uk = a[k] - b[k];
    if (j == k) {
        const double u2 = uj * uj;
        return (3.0 * c * c - 6.0 * c * c * c * u2 + c * c * c * c * u2 * u2) *
               value(p, a, b);
    }
    return (-c + c * c * uj * uj) * (-c + c * c * uk * uk) * value(p, a, b);
}

} // namespace kernel
} // namespace minima

#endif
