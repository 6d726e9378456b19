#pragma once

#include "entroflow/functionals.hpp"
#include "entroflow/grid.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace entroflow {

/// Barenblatt profile B(y) = (C_p - (p-1)/p * y^2/(2 sigma))_+^{1/(p-1)}, or the Gaussian
/// C_1 exp(-y^2/(2 sigma)) when p = 1.
struct BarenblattSpec {
    double p;
    double theta0;
    double sigma;
    double c_p;
    double support_radius; ///< +inf for the Gaussian

    double operator()(double y) const {
        if (p == 1.0) return c_p * std::exp(-y * y / (2.0 * sigma));
        const double base = c_p - (p - 1.0) / p * y * y / (2.0 * sigma);
        return base > 0.0 ? std::pow(base, 1.0 / (p - 1.0)) : 0.0;
    }
};

namespace detail {

// int_{-1}^{1} (1 - s^2)^m ds = B(1/2, m + 1)
inline double cap_integral(double m) { return std::beta(0.5, m + 1.0); }

inline void require_inside(const Grid& grid, double radius) {
    if (radius > 0.9 * grid.half_width())
        throw Error(ErrorKind::domain_too_small, "profile support radius " + std::to_string(radius) +
                                                     " exceeds 0.9 * half width " + std::to_string(grid.half_width()));
}

} // namespace detail

/// Closed-form (sigma, C_p) for unit mass and second moment theta0.
///
/// With m = 1/(p-1) and b = (p-1)/(2 p sigma) the profile is (C - b y^2)_+^m, whose mass is
/// C^{m+1/2} b^{-1/2} B(1/2, m+1) and whose second moment is C / (b (2m + 3)).
inline BarenblattSpec barenblatt_spec(double p, double theta0) {
    if (!(theta0 > 0.0)) throw Error(ErrorKind::argument, "theta0 must be positive");
    if (p == 1.0) {
        return {1.0, theta0, theta0, 1.0 / std::sqrt(2.0 * std::numbers::pi * theta0),
                std::numeric_limits<double>::infinity()};
    }
    if (!(p > 1.0 && p <= 1.5)) throw Error(ErrorKind::argument, "Barenblatt order must satisfy 1 < p <= 3/2");
    const double m = 1.0 / (p - 1.0);
    const double k = 2.0 * m + 3.0;
    const double b = std::pow(std::pow(k * theta0, m + 0.5) * detail::cap_integral(m), -1.0 / m);
    const double c = b * k * theta0;
    const double sigma = (p - 1.0) / (2.0 * p * b);
    return {p, theta0, sigma, c, std::sqrt(c / b)};
}

inline std::pair<DensityField, BarenblattSpec> solve_barenblatt(double p, double theta0, const Grid& grid) {
    if (!(p > 1.0 && p <= 1.5)) throw Error(ErrorKind::argument, "solve_barenblatt needs 1 < p <= 3/2");
    const auto spec = barenblatt_spec(p, theta0);
    detail::require_inside(grid, spec.support_radius);
    return {DensityField::sample(grid, spec), spec};
}

inline std::pair<DensityField, BarenblattSpec> gaussian_profile(double theta0, const Grid& grid) {
    const auto spec = barenblatt_spec(1.0, theta0);
    if (grid.half_width() < 6.0 * std::sqrt(theta0))
        throw Error(ErrorKind::domain_too_small, "Gaussian needs half width >= 6 sqrt(theta0)");
    return {DensityField::sample(grid, spec), spec};
}

/// Dispatches to the Gaussian at p = 1.
inline std::pair<DensityField, BarenblattSpec> steady_profile(double p, double theta0, const Grid& grid) {
    return p == 1.0 ? gaussian_profile(theta0, grid) : solve_barenblatt(p, theta0, grid);
}

/// |sigma - sqrt(theta0) / (p sqrt(2 I_p(B)))| with I_p evaluated by quadrature on b's grid.
inline double sigma_fixed_point_residual(const DensityField& b, const BarenblattSpec& spec) {
    const double ip = fisher_generalized(b, spec.p);
    return std::abs(spec.sigma - std::sqrt(spec.theta0) / (spec.p * std::sqrt(2.0 * ip)));
}

/// max |p (ln_p B)_y + y / sigma| over nodes whose stencil lies inside the support.
inline double steady_residual(const DensityField& b, const BarenblattSpec& spec) {
    const Grid& g = b.grid();
    const double floor = positivity_floor(b);
    const double h = g.spacing();
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < b.size(); ++i) {
        if (b[i - 1] <= floor || b[i] <= floor || b[i + 1] <= floor) continue;
        const double dl = (p_logarithm(b[i + 1], spec.p) - p_logarithm(b[i - 1], spec.p)) / (2.0 * h);
        worst = std::max(worst, std::abs(spec.p * dl + g.node(i) / spec.sigma));
    }
    return worst;
}

/// U_p at second moment theta_t: the dilation lambda^{-1/2} B(x lambda^{-1/2}), lambda = theta_t/theta0.
inline DensityField rescaled_attractor(double theta_t, const BarenblattSpec& spec, const Grid& grid) {
    if (!(theta_t > 0.0)) throw Error(ErrorKind::domain, "theta_t must be positive");
    const double s = std::sqrt(spec.theta0 / theta_t);
    if (std::isfinite(spec.support_radius)) detail::require_inside(grid, spec.support_radius / s);
    return DensityField::sample(grid, [&](double x) { return s * spec(x * s); });
}

/// Attractor dilated and rescaled so that its discrete mass and second moment equal those of f.
/// The continuum dilation is adjusted by a few secant updates to absorb quadrature error.
inline DensityField moment_matched_attractor(const DensityField& f, const BarenblattSpec& spec) {
    const double target = moment(f, 2);
    const double mass = integrate(f);
    if (!(target > 0.0) || !(mass > 0.0)) throw Error(ErrorKind::degenerate_density, "field has no mass or spread");
    double guess = target;
    DensityField u = rescaled_attractor(guess, spec, f.grid());
    for (int it = 0; it < 8; ++it) {
        u = u.scaled(mass / integrate(u));
        const double got = moment(u, 2);
        if (std::abs(got - target) <= 1e-13 * target) break;
        guess *= target / got;
        u = rescaled_attractor(guess, spec, f.grid());
    }
    return u;
}

struct SelfSimilarSpec {
    double p;
    double c;     ///< profile constant fixed by unit mass
    double t_ref; ///< reference time
};

/// Constant of the Smyth-Hill profile (1/(24 t^{1/5})) (C - x^2/t^{2/5})_+^2 with unit mass.
inline SelfSimilarSpec smyth_hill_spec(double t_ref) {
    // mass = (1/24) (16/15) C^{5/2}
    return {1.5, std::pow(22.5, 0.4), t_ref};
}

inline double self_similar_tf(double x, double t, const SelfSimilarSpec& spec) {
    if (!(t > 0.0)) throw Error(ErrorKind::domain, "self-similar profile needs t > 0");
    const double base = spec.c - x * x / std::pow(t, 0.4);
    return base > 0.0 ? base * base / (24.0 * std::pow(t, 0.2)) : 0.0;
}

/// a_p = (2p(2p-1))^{-1/(2p-2)}.
inline double self_similar_prefactor(double p) { return std::pow(2.0 * p * (2.0 * p - 1.0), -1.0 / (2.0 * p - 2.0)); }

/// Constant C giving unit mass to the family (a_p/t^{1/(2p+2)}) (C - (p-1) x^2/t^{1/(p+1)})_+^{1/(p-1)}.
inline SelfSimilarSpec self_similar_spec(double p, double t_ref) {
    if (!(p > 1.0 && p <= 1.5)) throw Error(ErrorKind::argument, "self-similar family needs 1 < p <= 3/2");
    const double m = 1.0 / (p - 1.0);
    // mass = a_p C^{m+1/2} (p-1)^{-1/2} B(1/2, m+1)
    const double c = std::pow(std::sqrt(p - 1.0) / (self_similar_prefactor(p) * detail::cap_integral(m)), 1.0 / (m + 0.5));
    return {p, c, t_ref};
}

inline double self_similar_general(double x, double t, double p, const SelfSimilarSpec& spec) {
    if (!(t > 0.0)) throw Error(ErrorKind::domain, "self-similar profile needs t > 0");
    if (!(p > 1.0 && p <= 1.5)) throw Error(ErrorKind::argument, "self-similar family needs 1 < p <= 3/2");
    const double base = spec.c - (p - 1.0) * x * x / std::pow(t, 1.0 / (p + 1.0));
    if (base <= 0.0) return 0.0;
    return self_similar_prefactor(p) / std::pow(t, 1.0 / (2.0 * p + 2.0)) * std::pow(base, 1.0 / (p - 1.0));
}

/// Clock factor k_p = 4(p+1)/(2p-1): the profiles of self_similar_tf / self_similar_general,
/// evaluated at k_p * t, solve u_t = -(u^p (ln_p u)_xx)_xx exactly (k = 5 for the thin film).
inline double source_clock_factor(double p) { return 4.0 * (p + 1.0) / (2.0 * p - 1.0); }

/// Exact unit-mass source-type solution of the evolution family at time t.
/// For p > 1 `spec` must come from self_similar_spec (or smyth_hill_spec at p = 3/2);
/// for p = 1 it is the Gaussian of variance 2 sqrt(t) and `spec.c` is unused.
inline double source_solution(double x, double t, double p, const SelfSimilarSpec& spec) {
    if (!(t > 0.0)) throw Error(ErrorKind::domain, "source solution needs t > 0");
    if (p == 1.0) {
        const double var = 2.0 * std::sqrt(t);
        return std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    return self_similar_general(x, source_clock_factor(p) * t, p, spec);
}

/// Second moment of the exact source solution at time t.
inline double source_second_moment(double t, double p, const SelfSimilarSpec& spec) {
    if (p == 1.0) return 2.0 * std::sqrt(t);
    // support half-width squared R^2 = C s^{1/(p+1)}/(p-1) with s = k_p t; theta = R^2/(2m+3)
    const double m = 1.0 / (p - 1.0);
    const double s = source_clock_factor(p) * t;
    return spec.c * std::pow(s, 1.0 / (p + 1.0)) / (p - 1.0) / (2.0 * m + 3.0);
}

} // namespace entroflow
