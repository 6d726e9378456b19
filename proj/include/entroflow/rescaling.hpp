#pragma once

#include "entroflow/functionals.hpp"
#include "entroflow/grid.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace entroflow {

/// Second moments Theta(u(t_i)) sampled along a trajectory of the original equation.
struct MomentTrajectory {
    std::vector<double> times;
    std::vector<double> thetas;
};

namespace detail {

// s * f(s * y) resampled on f's grid, renormalized to f's mass. Expanding maps (s < 1) must
// not push mass past the grid edge.
inline DensityField scaled_resample(const DensityField& f, double s) {
    const Grid& g = f.grid();
    if (s < 1.0) {
        const double floor = positivity_floor(f);
        const double reach = g.half_width() * s;
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (std::abs(g.node(i)) > reach && f[i] > floor)
                throw Error(ErrorKind::domain_too_small, "dilated support leaves the grid");
        }
    }
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = s * interpolate(g, f.values(), g.node(i) * s);
    DensityField out(g, std::move(v));
    const double m_in = integrate(f), m_out = integrate(out);
    if (m_out > 0.0 && m_in > 0.0) return out.scaled(m_in / m_out);
    return out;
}

inline double dilation_ratio(double theta_t, double theta0) {
    if (!(theta0 > 0.0)) throw Error(ErrorKind::argument, "theta0 must be positive");
    if (!(theta_t >= theta0)) throw Error(ErrorKind::argument, "theta_t must be >= theta0");
    return theta_t / theta0;
}

} // namespace detail

/// v(y) = lambda^{1/2} u(y lambda^{1/2}), lambda = theta_t / theta0: brings u back to second moment theta0.
inline DensityField forward_map(const DensityField& u, double theta_t, double theta0) {
    const double lambda = detail::dilation_ratio(theta_t, theta0);
    if (lambda == 1.0) return u;
    return detail::scaled_resample(u, std::sqrt(lambda));
}

/// u(x) = lambda^{-1/2} v(x lambda^{-1/2}).
inline DensityField inverse_map(const DensityField& v, double theta_t, double theta0) {
    const double lambda = detail::dilation_ratio(theta_t, theta0);
    if (lambda == 1.0) return v;
    return detail::scaled_resample(v, 1.0 / std::sqrt(lambda));
}

/// tau_i = (theta_0 / (4p)) ln(theta_i / theta_0) with theta_0 = thetas[0].
inline std::vector<double> tau_of_t(const MomentTrajectory& traj, double p) {
    if (traj.thetas.empty() || traj.thetas.size() != traj.times.size())
        throw Error(ErrorKind::argument, "moment trajectory needs matching, non-empty columns");
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        if (!(traj.times[i] > traj.times[i - 1])) throw Error(ErrorKind::argument, "times must be increasing");
    }
    for (double th : traj.thetas) {
        if (!(th > 0.0)) throw Error(ErrorKind::domain, "second moments must be positive");
    }
    const double theta0 = traj.thetas.front();
    std::vector<double> tau(traj.thetas.size());
    for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = theta0 / (4.0 * p) * std::log(traj.thetas[i] / theta0);
    return tau;
}

/// Source of u(., s) for the classical rescaling; must return fields on a common grid.
using FieldSampler = std::function<DensityField(double)>;

/// w(x, t) = e^t u(e^t x, (e^{5t} - 1)/5), the thin-film similarity rescaling.
inline DensityField classical_rescale(const FieldSampler& sampler, double t) {
    if (!(t >= 0.0)) throw Error(ErrorKind::argument, "classical rescaling needs t >= 0");
    const DensityField u = sampler(std::expm1(5.0 * t) / 5.0);
    if (t == 0.0) return u;
    return detail::scaled_resample(u, std::exp(t));
}

} // namespace entroflow
