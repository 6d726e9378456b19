#pragma once

#include "entroflow/grid.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace entroflow {

/// Relative positivity threshold: degenerate integrands are only evaluated where f > floor.
inline constexpr double kPositivityFloor = 1e-12;

inline double positivity_floor(const DensityField& f) { return kPositivityFloor * f.max(); }

/// ln_p(x) = (x^{p-1} - 1)/(p-1), natural log at p = 1.
inline double p_logarithm(double value, double p) {
    if (!(value > 0.0)) throw Error(ErrorKind::domain, "p-logarithm needs a positive argument");
    if (p == 1.0) return std::log(value);
    // expm1 keeps the p -> 1 limit accurate
    return std::expm1((p - 1.0) * std::log(value)) / (p - 1.0);
}

/// Integral of f^p.
inline double p_mass(const DensityField& f, double p) {
    std::vector<double> w(f.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = f[i] > 0.0 ? std::pow(f[i], p) : 0.0;
    return trapezoid(f.grid(), w);
}

/// -int f ln f with 0 ln 0 = 0.
inline double boltzmann_entropy(const DensityField& f) {
    std::vector<double> w(f.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = f[i] > 0.0 ? -f[i] * std::log(f[i]) : 0.0;
    return trapezoid(f.grid(), w);
}

inline double renyi_entropy(const DensityField& f, double p) {
    if (p == 1.0) return boltzmann_entropy(f);
    const double m = p_mass(f, p);
    if (!(m > 0.0)) throw Error(ErrorKind::degenerate_density, "integral of f^p vanishes");
    return std::log(m) / (1.0 - p);
}

/// 1/2 int f ((ln_p f)_x)^2 = 1/2 int f^{2p-3} f_x^2 on {f > floor}.
inline double fisher_generalized(const DensityField& f, double p) {
    const auto fx = gradient_fourth_order(f.grid(), f.values());
    const double floor = positivity_floor(f);
    std::vector<double> w(f.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (f[i] > floor) w[i] = 0.5 * std::pow(f[i], 2.0 * p - 3.0) * fx[i] * fx[i];
    }
    return trapezoid(f.grid(), w);
}

/// 1/2 int f_x^2.
inline double surface_energy(const DensityField& f) {
    const auto fx = gradient_fourth_order(f.grid(), f.values());
    std::vector<double> w(f.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * fx[i] * fx[i];
    return trapezoid(f.grid(), w);
}

inline double fisher_modified(const DensityField& f, double p) {
    const double m = p_mass(f, p);
    if (!(m > 0.0)) throw Error(ErrorKind::degenerate_density, "integral of f^p vanishes");
    return 2.0 * p * p * fisher_generalized(f, p) / m;
}

/// Samples of ln_p f, with f clamped to the positivity floor so that p = 1 stays finite.
inline std::vector<double> p_logarithm_samples(const DensityField& f, double p) {
    const double floor = std::max(positivity_floor(f), std::numeric_limits<double>::min());
    std::vector<double> l(f.size());
    for (std::size_t i = 0; i < l.size(); ++i) l[i] = p_logarithm(std::max(f[i], floor), p);
    return l;
}

/// Relative level below which a sample counts as outside the support for second-difference stencils.
inline constexpr double kStencilSupportFloor = 1e-9;

/// int f^p ((ln_p f)_xx)^2 over nodes whose three-point stencil lies inside the support.
///
/// ln_p f has a kink where a compact support ends, so a stencil straddling the edge samples a
/// spurious O(1/h) curvature; such edge cells are dropped. Their true contribution is O(h^2).
inline double k_functional(const DensityField& f, double p) {
    const auto lxx = derivative(f.grid(), p_logarithm_samples(f, p), 2);
    const double floor = std::max(positivity_floor(f), kStencilSupportFloor * f.max());
    const std::size_t n = f.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool inside = f[i] > floor && (i == 0 || f[i - 1] > floor) && (i + 1 == n || f[i + 1] > floor);
        if (inside) w[i] = std::pow(f[i], p) * lxx[i] * lxx[i];
    }
    return trapezoid(f.grid(), w);
}

struct KSplit {
    double part_a; ///< int f^{1/2} f_yy^2
    double part_b; ///< (1/12) int f^{-3/2} f_y^4
};

/// Thin-film (p = 3/2) split form of K: both integrals restricted to {f > floor}.
inline KSplit k_functional_tf_split(const DensityField& f) {
    const auto fy = derivative(f.grid(), f.values(), 1);
    const auto fyy = derivative(f.grid(), f.values(), 2);
    const double floor = positivity_floor(f);
    std::vector<double> a(f.size(), 0.0), b(f.size(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] > floor) {
            a[i] = std::sqrt(f[i]) * fyy[i] * fyy[i];
            b[i] = std::pow(f[i], -1.5) * std::pow(fy[i], 4) / 12.0;
        }
    }
    return {trapezoid(f.grid(), a), trapezoid(f.grid(), b)};
}

/// Newman-Ralston relative entropy (p > 1). Where b = 0 the integrand is f^p/(p-1).
inline double nr_relative_entropy(const DensityField& f, const DensityField& b, double p) {
    if (p == 1.0)
        throw Error(ErrorKind::not_applicable, "Newman-Ralston entropy is defined for p > 1; use boltzmann_relative");
    if (!(f.grid() == b.grid())) throw Error(ErrorKind::argument, "nr_relative_entropy on mismatched grids");
    std::vector<double> w(f.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double fp = f[i] > 0.0 ? std::pow(f[i], p) : 0.0;
        if (b[i] > 0.0) {
            const double bp1 = std::pow(b[i], p - 1.0);
            w[i] = (fp - bp1 * b[i] - p * bp1 * (f[i] - b[i])) / (p - 1.0);
        } else {
            w[i] = fp / (p - 1.0);
        }
    }
    return trapezoid(f.grid(), w);
}

/// Relative second-moment mismatch accepted by the moment-matched comparisons.
inline constexpr double kMomentMatchTolerance = 1e-6;

inline void require_moment_match(const DensityField& f, const DensityField& b) {
    const double tf = moment(f, 2), tb = moment(b, 2);
    if (std::abs(tf - tb) > kMomentMatchTolerance * tb)
        throw Error(ErrorKind::contract, "second moments differ: " + std::to_string(tf) + " vs " + std::to_string(tb));
}

/// R_p(b) - R_p(f) for the moment-matched steady profile b.
inline double relative_renyi(const DensityField& f, const DensityField& b, double p) {
    if (!(f.grid() == b.grid())) throw Error(ErrorKind::argument, "relative_renyi on mismatched grids");
    require_moment_match(f, b);
    return renyi_entropy(b, p) - renyi_entropy(f, p);
}

/// 1/2 ln(2 pi e theta0) - H(f), the relative entropy to the Gaussian of variance theta0.
inline double boltzmann_relative(const DensityField& f, double theta0) {
    const double t = moment(f, 2);
    if (std::abs(t - theta0) > kMomentMatchTolerance * theta0)
        throw Error(ErrorKind::contract, "second moment " + std::to_string(t) + " does not match " + std::to_string(theta0));
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * theta0) - boltzmann_entropy(f);
}

/// int (y^2/2 w + sqrt(8/3) w^{3/2}).
inline double classical_tf_entropy(const DensityField& w) {
    const Grid& g = w.grid();
    const double c = std::sqrt(8.0 / 3.0);
    std::vector<double> s(w.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double y = g.node(i);
        s[i] = 0.5 * y * y * w[i] + c * std::pow(w[i], 1.5);
    }
    return trapezoid(g, s);
}

/// (1/(alpha(alpha-1))) int f^alpha, and int f ln f at alpha = 1.
inline double alpha_entropy(const DensityField& f, double alpha) {
    if (!(alpha > 0.0)) throw Error(ErrorKind::argument, "alpha must be positive");
    if (alpha == 1.0) return -boltzmann_entropy(f);
    return p_mass(f, alpha) / (alpha * (alpha - 1.0));
}

/// int f^{alpha-1} f_xx f_x^2 - ((1-alpha)/3) int f^{alpha-2} f_x^4 for strictly positive f.
/// The two integrals agree for fields decaying at the ends, so this measures discretization error.
inline double integration_by_parts_residual(const DensityField& f, double alpha) {
    const auto fx = gradient_fourth_order(f.grid(), f.values());
    const auto fxx = derivative(f.grid(), f.values(), 2);
    std::vector<double> lhs(f.size()), rhs(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f[i] > 0.0)) throw Error(ErrorKind::degenerate_density, "integration by parts needs a positive field");
        const double g2 = fx[i] * fx[i];
        lhs[i] = std::pow(f[i], alpha - 1.0) * fxx[i] * g2;
        rhs[i] = std::pow(f[i], alpha - 2.0) * g2 * g2;
    }
    return trapezoid(f.grid(), lhs) - (1.0 - alpha) / 3.0 * trapezoid(f.grid(), rhs);
}

struct FunctionalReport {
    double renyi;
    double boltzmann;
    double fisher_gen;
    double fisher_mod;
    double k_functional;
    double surface_energy;
    double p_mass;
};

inline FunctionalReport evaluate_functionals(const DensityField& f, double p) {
    FunctionalReport r{};
    r.p_mass = p_mass(f, p);
    r.boltzmann = boltzmann_entropy(f);
    r.renyi = renyi_entropy(f, p);
    r.fisher_gen = fisher_generalized(f, p);
    r.fisher_mod = r.p_mass > 0.0 ? 2.0 * p * p * r.fisher_gen / r.p_mass : 0.0;
    r.k_functional = k_functional(f, p);
    r.surface_energy = surface_energy(f);
    return r;
}

} // namespace entroflow
