#include <catch2/catch_amalgamated.hpp>

#include "minima/kernel.hpp"

#include "support.hpp"

using namespace minima;
namespace ts = testsupport;

namespace {

// Natural magnitude of each derivative order, used as the floor of the
// relative-error comparisons so near-zero targets are compared absolutely.
double scale1(const KernelParams& p) { return p.signal_variance * std::sqrt(2.0 / p.lengthscale); }
double scale2(const KernelParams& p) { return p.signal_variance * 2.0 / p.lengthscale; }
double scale4(const KernelParams& p) {
    return p.signal_variance * (2.0 / p.lengthscale) * (2.0 / p.lengthscale);
}

struct PairSampler {
    ts::Rng rng;
    int d;
    double len;
    explicit PairSampler(unsigned seed, int d_, double len_) : rng(seed), d(d_), len(len_) {}
    std::pair<Point, Point> operator()() {
        const double s = std::sqrt(len);
        Point x = ts::random_point(rng, d, -2.0 * s, 2.0 * s);
        Point off = ts::random_point(rng, d, -1.5 * s, 1.5 * s);
        return {x, Point(x + off)};
    }
};

} // namespace

TEST_CASE("kernel value closed form") {
    KernelParams p{1.0, 1.0};
    Point x(2), y(2);
    x << 0.3, -0.7;
    y = x;
    CHECK(kernel::value(p, x, x) == p.signal_variance);

    y << 0.3 + 1.0, -0.7; // squared distance exactly 1
    CHECK_THAT(kernel::value(p, x, y), Catch::Matchers::WithinRel(std::exp(-1.0), 1e-12));

    KernelParams q{2.5, 0.8};
    Point z = x;
    CHECK(kernel::value(q, z, z) == q.signal_variance);
}

TEST_CASE("kernel value symmetry and stationarity") {
    KernelParams p{1.7, 2.3};
    PairSampler sample(11u, 3, p.lengthscale);
    for (int it = 0; it < 100; ++it) {
        auto [x, y] = sample();
        CHECK(kernel::value(p, x, y) == kernel::value(p, y, x));
        Point shift = ts::random_point(sample.rng, 3, -5.0, 5.0);
        CHECK_THAT(kernel::value(p, Point(x + shift), Point(y + shift)),
                   Catch::Matchers::WithinRel(kernel::value(p, x, y), 1e-12));
    }
}

TEST_CASE("kernel argument validation") {
    KernelParams p{1.0, 1.0};
    Point a(2), b(3);
    a.setZero();
    b.setZero();
    CHECK_THROWS_AS(kernel::value(p, a, b), UsageError);
    Point c(2);
    c.setZero();
    CHECK_THROWS_AS(kernel::value_grad_cov(p, a, c, 2), UsageError);
    CHECK_THROWS_AS(kernel::value_hess_cov(p, a, c, 0, -1), UsageError);
    CHECK_THROWS_AS(kernel::grad_cov(p, a, c, 5), UsageError);
    CHECK_THROWS_AS(kernel::hess_cov(p, a, c, 0, 2), UsageError);
    KernelParams bad{0.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("first derivative closed form") {
    KernelParams p{1.0, 1.0};

    SECTION("zero at coincident points") {
        ts::Rng rng(3u);
        Point x = ts::random_point(rng, 2, -1.0, 1.0);
        CHECK(kernel::value_grad_cov(p, x, x, 0) == 0.0);
        CHECK(kernel::value_grad_cov(p, x, x, 1) == 0.0);
    }

    SECTION("one-dimensional reference value") {
        Point a(1), b(1);
        a << 0.0;
        b << 1.0;
        // derivative with respect to the second argument at (0, 1)
        CHECK_THAT(kernel::value_grad_cov(p, a, b, 0),
                   Catch::Matchers::WithinRel(-2.0 * std::exp(-1.0), 1e-12));
    }
}

TEST_CASE("first derivative matches finite differences") {
    KernelParams p{1.3, 0.9};
    const double h = 1e-5 * std::sqrt(p.lengthscale);
    PairSampler sample(17u, 2, p.lengthscale);
    for (int it = 0; it < 50; ++it) {
        auto [a, b] = sample();
        for (int i = 0; i < 2; ++i) {
            auto slice = [&](const Point& bb) { return kernel::value(p, a, bb); };
            const double fd = ts::fd_partial(slice, b, i, h);
            const double an = kernel::value_grad_cov(p, a, b, i);
            CHECK(ts::rel_error(an, fd, 1e-2 * scale1(p)) < 1e-6);
        }
    }
}

TEST_CASE("second derivative closed form and symmetry") {
    KernelParams p{2.0, 1.7};
    CHECK_THAT(kernel::value_hess_cov(p, Point::Zero(2), Point::Zero(2), 0, 0),
               Catch::Matchers::WithinRel(-2.0 * p.signal_variance / p.lengthscale, 1e-12));

    PairSampler sample(23u, 3, p.lengthscale);
    for (int it = 0; it < 30; ++it) {
        auto [a, b] = sample();
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                CHECK(kernel::value_hess_cov(p, a, b, j, k) ==
                      kernel::value_hess_cov(p, a, b, k, j));
            }
        }
    }
}

TEST_CASE("second derivative matches finite differences") {
    KernelParams p{0.8, 2.1};
    const double h = 1e-5 * std::sqrt(p.lengthscale);
    PairSampler sample(29u, 2, p.lengthscale);
    for (int it = 0; it < 50; ++it) {
        auto [a, b] = sample();
        auto slice = [&](const Point& bb) { return kernel::value(p, a, bb); };
        for (int j = 0; j < 2; ++j) {
            for (int k = j; k < 2; ++k) {
                const double fd = ts::fd_partial2(slice, b, j, k, h);
                const double an = kernel::value_hess_cov(p, a, b, j, k);
                CHECK(ts::rel_error(an, fd, 0.1 * scale2(p)) < 1e-5);
            }
        }
    }
}

TEST_CASE("gradient covariance kernel") {
    KernelParams p{1.9, 3.1};

    SECTION("self variance") {
        Point x = Point::Constant(2, 0.4);
        for (int i = 0; i < 2; ++i) {
            CHECK_THAT(kernel::grad_cov(p, x, x, i),
                       Catch::Matchers::WithinRel(2.0 * p.signal_variance / p.lengthscale, 1e-12));
            CHECK(kernel::grad_cov(p, x, x, i) > 0.0);
        }
    }

    SECTION("mixed finite difference and symmetry") {
        const double h = 1e-5 * std::sqrt(p.lengthscale);
        PairSampler sample(31u, 2, p.lengthscale);
        auto two_arg = [&](const Point& xx, const Point& yy) { return kernel::value(p, xx, yy); };
        for (int it = 0; it < 40; ++it) {
            auto [a, b] = sample();
            for (int i = 0; i < 2; ++i) {
                const double fd = ts::fd_mixed2(two_arg, a, b, i, h);
                const double an = kernel::grad_cov(p, a, b, i);
                CHECK(ts::rel_error(an, fd, 0.1 * scale2(p)) < 1e-5);
                CHECK(kernel::grad_cov(p, a, b, i) == kernel::grad_cov(p, b, a, i));
            }
        }
    }
}

TEST_CASE("Hessian covariance kernel") {
    KernelParams p{2.0, 3.0};

    SECTION("self variances") {
        Point x = Point::Constant(2, -1.2);
        const double l2 = p.lengthscale * p.lengthscale;
        CHECK_THAT(kernel::hess_cov(p, x, x, 0, 0),
                   Catch::Matchers::WithinRel(12.0 * p.signal_variance / l2, 1e-12));
        CHECK_THAT(kernel::hess_cov(p, x, x, 0, 1),
                   Catch::Matchers::WithinRel(4.0 * p.signal_variance / l2, 1e-12));
        CHECK(kernel::hess_cov(p, x, x, 1, 1) > 0.0);
    }

    SECTION("fourth-order finite difference") {
        // 1e-3*sqrt(L) leaves ~1e-4 relative round-off in the 4th difference,
        // right at the tolerance; doubling the step gives a 5x margin.
        const double h = 2e-3 * std::sqrt(p.lengthscale);
        PairSampler sample(37u, 2, p.lengthscale);
        auto two_arg = [&](const Point& xx, const Point& yy) { return kernel::value(p, xx, yy); };
        for (int it = 0; it < 25; ++it) {
            auto [a, b] = sample();
            for (int j = 0; j < 2; ++j) {
                for (int k = j; k < 2; ++k) {
                    const double fd = ts::fd_mixed4(two_arg, a, b, j, k, h);
                    const double an = kernel::hess_cov(p, a, b, j, k);
                    CHECK(ts::rel_error(an, fd, 0.5 * scale4(p)) < 1e-4);
                }
            }
        }
    }
}

TEST_CASE("derivative kernels are translation invariant") {
    KernelParams p{1.1, 1.6};
    PairSampler sample(41u, 2, p.lengthscale);
    for (int it = 0; it < 25; ++it) {
        auto [a, b] = sample();
        Point shift = ts::random_point(sample.rng, 2, -4.0, 4.0);
        Point a2 = a + shift, b2 = b + shift;
        CHECK_THAT(kernel::value_grad_cov(p, a2, b2, 0),
                   Catch::Matchers::WithinAbs(kernel::value_grad_cov(p, a, b, 0), 1e-12));
        CHECK_THAT(kernel::grad_cov(p, a2, b2, 1),
                   Catch::Matchers::WithinAbs(kernel::grad_cov(p, a, b, 1), 1e-12));
        CHECK_THAT(kernel::hess_cov(p, a2, b2, 0, 1),
                   Catch::Matchers::WithinAbs(kernel::hess_cov(p, a, b, 0, 1), 1e-12));
    }
}

TEST_CASE("library derivative kernels agree with the Hermite product form") {
    KernelParams p{1.4, 2.2};
    PairSampler sample(43u, 3, p.lengthscale);
    for (int it = 0; it < 25; ++it) {
        auto [a, b] = sample();
        std::vector<int> zero(3, 0);
        for (int i = 0; i < 3; ++i) {
            std::vector<int> ei(3, 0);
            ei[static_cast<std::size_t>(i)] = 1;
            const double want =
                ts::prior_deriv_cov(p.signal_variance, p.lengthscale, a, b, zero, ei);
            CHECK_THAT(kernel::value_grad_cov(p, a, b, i),
                       Catch::Matchers::WithinAbs(want, 1e-12));
            CHECK_THAT(kernel::grad_cov(p, a, b, i),
                       Catch::Matchers::WithinAbs(
                           ts::prior_deriv_cov(p.signal_variance, p.lengthscale, a, b, ei, ei),
                           1e-12));
        }
        for (int j = 0; j < 3; ++j) {
            for (int k = 0; k < 3; ++k) {
                std::vector<int> jk(3, 0);
                jk[static_cast<std::size_t>(j)] += 1;
                jk[static_cast<std::size_t>(k)] += 1;
                CHECK_THAT(kernel::value_hess_cov(p, a, b, j, k),
                           Catch::Matchers::WithinAbs(ts::prior_deriv_cov(p.signal_variance,
                                                                          p.lengthscale, a, b,
                                                                          zero, jk),
                                                      1e-12));
                CHECK_THAT(kernel::hess_cov(p, a, b, j, k),
                           Catch::Matchers::WithinAbs(ts::prior_deriv_cov(p.signal_variance,
                                                                          p.lengthscale, a, b, jk,
                                                                          jk),
                                                      1e-11));
            }
        }
    }
}
