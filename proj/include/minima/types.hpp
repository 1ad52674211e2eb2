#ifndef MINIMA_TYPES_HPP
#define MINIMA_TYPES_HPP

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace minima {

/// A point in the input domain; dimension is fixed within one experiment.
using Point = Eigen::VectorXd;

/// Deterministic generator; every run owns exactly one stream.
using Rng = std::mt19937_64;

/// Caller passed inconsistent arguments or an invalid configuration.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

/// A linear-algebra step failed beyond the jitter escalation policy.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw UsageError(what);
}

/// Round-off below this magnitude is clamped to zero; anything more
/// negative is treated as a bug in the caller's covariance algebra.
inline constexpr double kVarianceSlack = 1e-8;

inline double clamp_variance(double v, const char* context) {
    if (v >= 0.0) return v;
    if (v > -kVarianceSlack) return 0.0;
    throw NumericalError(std::string(context) + ": variance " + std::to_string(v) +
                         " is negative beyond round-off");
}

} // namespace detail

/// Axis-aligned box, used for domain-boundary checks.
struct Box {
    Point lo;
    Point hi;

    bool contains(const Point& x) const {
        if (lo.size() == 0) return true; // unbounded
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (x[i] < lo[i] || x[i] > hi[i]) return false;
        }
        return true;
    }
};

} // namespace minima

#endif
