// Test-only oracles: finite differences, an independent derivative-kernel
// formula, normal quadrature and a joint prior sampler for function values
// together with their derivatives. None of these call into the paths they
// are used to check.

#ifndef MINIMA_TESTS_SUPPORT_HPP
#define MINIMA_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "minima/types.hpp"

namespace testsupport {

using minima::Point;
using minima::Rng;

// ---------------------------------------------------------------------------
// finite differences

template <class F>
double fd_partial(const F& f, const Point& x, int i, double h) {
    Point a = x, b = x;
    a[i] += h;
    b[i] -= h;
    return (f(a) - f(b)) / (2.0 * h);
}

template <class F>
double fd_partial2(const F& f, const Point& x, int j, int k, double h) {
    if (j == k) {
        Point a = x, b = x;
        a[j] += h;
        b[j] -= h;
        return (f(a) - 2.0 * f(x) + f(b)) / (h * h);
    }
    Point pp = x, pm = x, mp = x, mm = x;
    pp[j] += h; pp[k] += h;
    pm[j] += h; pm[k] -= h;
    mp[j] -= h; mp[k] += h;
    mm[j] -= h; mm[k] -= h;
    return (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
}

template <class F>
Eigen::VectorXd fd_gradient(const F& f, const Point& x, double h) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = fd_partial(f, x, static_cast<int>(i), h);
    return g;
}

template <class F>
Eigen::MatrixXd fd_hessian(const F& f, const Point& x, double h) {
    const auto d = x.size();
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = j; k < d; ++k) {
            m(j, k) = m(k, j) = fd_partial2(f, x, static_cast<int>(j), static_cast<int>(k), h);
        }
    }
    return m;
}

// Mixed fourth difference d^4 f / dx_j dx_k dy_j dy_k of a two-argument
// scalar function, composing second-order stencils in each argument.
template <class F2>
double fd_mixed4(const F2& f, const Point& x, const Point& y, int j, int k, double h) {
    auto inner = [&](const Point& yy) {
        auto fx = [&](const Point& xx) { return f(xx, yy); };
        return fd_partial2(fx, x, j, k, h);
    };
    return fd_partial2(inner, y, j, k, h);
}

// Mixed second difference d^2 f / dx_i dy_i.
template <class F2>
double fd_mixed2(const F2& f, const Point& x, const Point& y, int i, double h) {
    auto inner = [&](const Point& yy) {
        auto fx = [&](const Point& xx) { return f(xx, yy); };
        return fd_partial(fx, x, i, h);
    };
    return fd_partial(inner, y, i, h);
}

// Relative error with a floor: values far below `scale` are compared
// absolutely at tol*scale instead of blowing up the quotient.
inline double rel_error(double got, double want, double scale) {
    return std::abs(got - want) / std::max(std::abs(want), scale);
}

// ---------------------------------------------------------------------------
// independent Gaussian-kernel derivative formula (Hermite product form)

// He_n, probabilists' Hermite polynomials, n <= 4.
inline double hermite(int n, double z) {
    switch (n) {
    case 0: return 1.0;
    case 1: return z;
    case 2: return z * z - 1.0;
    case 3: return z * (z * z - 3.0);
    case 4: return z * z * (z * z - 6.0) + 3.0;
    default: throw std::runtime_error("hermite: order not supported");
    }
}

// Cov[ D^alpha f(a), D^beta f(b) ] for a zero-mean prior with kernel
// sf2 * exp(-|a-b|^2 / len), via the per-coordinate factorization
// d^n/ds^n exp(-c s^2/2) = (-sqrt(c))^n He_n(sqrt(c) s) exp(-c s^2/2).
inline double prior_deriv_cov(double sf2, double len, const Point& a, const Point& b,
                              const std::vector<int>& alpha, const std::vector<int>& beta) {
    const double c = 2.0 / len;
    const double sqc = std::sqrt(c);
    double out = sf2;
    int order_b = 0;
    for (int nb : beta) order_b += nb;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double u = a[i] - b[i];
        const int n = alpha[static_cast<std::size_t>(i)] + beta[static_cast<std::size_t>(i)];
        out *= std::pow(-sqc, n) * hermite(n, sqc * u) * std::exp(-c * u * u / 2.0);
    }
    return (order_b % 2 == 0) ? out : -out;
}

// ---------------------------------------------------------------------------
// joint prior sample of values, gradients and Hessian entries on a grid

struct PriorFieldSample {
    Eigen::VectorXd value;  // per point
    Eigen::MatrixXd grad;   // m x d
    Eigen::MatrixXd hess;   // m x d(d+1)/2, packed (j<=k) row-major
};

// Operators: value, d gradients, d(d+1)/2 Hessian entries; one joint draw.
inline PriorFieldSample sample_prior_field(double sf2, double len,
                                           const std::vector<Point>& pts, Rng& rng) {
    const int d = static_cast<int>(pts[0].size());
    const int npairs = d * (d + 1) / 2;
    const int q = 1 + d + npairs;
    std::vector<std::vector<int>> ops;
    ops.push_back(std::vector<int>(static_cast<std::size_t>(d), 0));
    for (int i = 0; i < d; ++i) {
        std::vector<int> a(static_cast<std::size_t>(d), 0);
        a[static_cast<std::size_t>(i)] = 1;
        ops.push_back(a);
    }
    for (int j = 0; j < d; ++j) {
        for (int k = j; k < d; ++k) {
            std::vector<int> a(static_cast<std::size_t>(d), 0);
            a[static_cast<std::size_t>(j)] += 1;
            a[static_cast<std::size_t>(k)] += 1;
            ops.push_back(a);
        }
    }

    const auto m = static_cast<Eigen::Index>(pts.size());
    const Eigen::Index n = m * q;
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index s = 0; s < m; ++s) {
            for (int oa = 0; oa < q; ++oa) {
                for (int ob = 0; ob < q; ++ob) {
                    cov(r * q + oa, s * q + ob) =
                        prior_deriv_cov(sf2, len, pts[static_cast<std::size_t>(r)],
                                        pts[static_cast<std::size_t>(s)],
                                        ops[static_cast<std::size_t>(oa)],
                                        ops[static_cast<std::size_t>(ob)]);
                }
            }
        }
    }
    // draw
    double jitter = 1e-10 * sf2;
    Eigen::MatrixXd l;
    for (;;) {
        Eigen::MatrixXd c = cov;
        c.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() == Eigen::Success) {
            l = llt.matrixL();
            break;
        }
        jitter *= 10.0;
        if (jitter > 1e-2 * sf2) throw std::runtime_error("sample_prior_field: bad covariance");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(rng);
    Eigen::VectorXd field = l * z;

    PriorFieldSample out;
    out.value.resize(m);
    out.grad.resize(m, d);
    out.hess.resize(m, npairs);
    for (Eigen::Index r = 0; r < m; ++r) {
        out.value[r] = field[r * q];
        for (int i = 0; i < d; ++i) out.grad(r, i) = field[r * q + 1 + i];
        for (int p = 0; p < npairs; ++p) out.hess(r, p) = field[r * q + 1 + d + p];
    }
    return out;
}

// ---------------------------------------------------------------------------
// normal quadrature for the two-competitor orthant probability

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// P(Y1 >= 0, Y2 >= 0) for a bivariate normal, by integrating the
// conditional distribution of Y2 given Y1 over Y1 >= 0 (Simpson rule).
inline double orthant_prob(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
    const double s1 = std::sqrt(cov(0, 0));
    const double s2 = std::sqrt(cov(1, 1));
    if (s1 < 1e-12) {
        if (mean[0] < 0.0) return 0.0;
        if (s2 < 1e-12) return mean[1] >= 0.0 ? 1.0 : 0.0;
        return normal_cdf(mean[1] / s2);
    }
    const double rho = cov(0, 1) / (s1 * s2);
    const double cond_sd = s2 * std::sqrt(std::max(1.0 - rho * rho, 0.0));
    const double lo = 0.0;
    const double hi = std::max(mean[0], 0.0) + 10.0 * s1;
    const int n = 40000; // even
    const double h = (hi - lo) / n;
    auto integrand = [&](double y1) {
        const double zpdf = (y1 - mean[0]) / s1;
        const double pdf = std::exp(-0.5 * zpdf * zpdf) / (s1 * std::sqrt(2.0 * std::numbers::pi));
        const double cond_mean = mean[1] + rho * s2 / s1 * (y1 - mean[0]);
        double tail;
        if (cond_sd < 1e-12) {
            tail = cond_mean >= 0.0 ? 1.0 : 0.0;
        } else {
            tail = 1.0 - normal_cdf((0.0 - cond_mean) / cond_sd);
        }
        return pdf * tail;
    };
    double acc = integrand(lo) + integrand(hi);
    for (int i = 1; i < n; ++i) acc += integrand(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// ---------------------------------------------------------------------------
// misc generators

inline Point random_point(Rng& rng, int d, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Point p(d);
    for (int i = 0; i < d; ++i) p[i] = u(rng);
    return p;
}

} // namespace testsupport

#endif
