#pragma once

#include "entroflow/error.hpp"

#include <cmath>

namespace entroflow {

/// Initial relative entropy r0 and model data for the closed-form decay bounds.
struct BoundParams {
    double r0;
    double p;
    double theta0;
};

namespace detail {

inline void check_bound_params(const BoundParams& bp) {
    if (!(bp.r0 >= 0.0) || !std::isfinite(bp.r0)) throw Error(ErrorKind::argument, "r0 must be finite and >= 0");
    if (!(bp.p >= 1.0 && bp.p <= 1.5)) throw Error(ErrorKind::argument, "order p must lie in [1, 3/2]");
    if (!(bp.theta0 > 0.0)) throw Error(ErrorKind::argument, "theta0 must be positive");
}

// -1/2 ln(1 - (1 - e^{-2 r0}) s) for s in (0, 1]
inline double super_bound_of(double s, double r0) {
    return -0.5 * std::log1p(std::expm1(-2.0 * r0) * s);
}

} // namespace detail

/// -1/2 ln(1 - (1 - e^{-2 r0}) e^{-4 p tau / theta0}).
inline double super_bound(double tau, const BoundParams& bp) {
    detail::check_bound_params(bp);
    if (!(tau >= 0.0)) throw Error(ErrorKind::argument, "tau must be >= 0");
    if (tau == 0.0) return bp.r0;
    return detail::super_bound_of(std::exp(-4.0 * bp.p * tau / bp.theta0), bp.r0);
}

/// The same bound in original variables: the exponential becomes theta0 / Theta(u(t)).
inline double super_bound_original(double t_theta, const BoundParams& bp) {
    detail::check_bound_params(bp);
    if (!(t_theta >= bp.theta0)) throw Error(ErrorKind::domain, "second moment must be >= theta0");
    if (t_theta == bp.theta0) return bp.r0;
    return detail::super_bound_of(bp.theta0 / t_theta, bp.r0);
}

/// Linearized reference r0 e^{-4 p tau / theta0}.
inline double exp_reference(double tau, const BoundParams& bp) {
    detail::check_bound_params(bp);
    if (!(tau >= 0.0)) throw Error(ErrorKind::argument, "tau must be >= 0");
    return bp.r0 * std::exp(-4.0 * bp.p * tau / bp.theta0);
}

} // namespace entroflow
