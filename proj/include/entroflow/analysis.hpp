#pragma once

#include "entroflow/bounds.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/solver.hpp"
#include "entroflow/steady_states.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace entroflow {

/// Absolute slack accepted on inequality gaps.
inline constexpr double kInequalityTolerance = 1e-8;

/// gap = rhs - lhs, so gap >= 0 means the inequality lhs <= rhs holds.
struct InequalityVerdict {
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;
    bool holds = true;
};

inline InequalityVerdict make_verdict(double lhs, double rhs, double tol = kInequalityTolerance) {
    const double gap = rhs - lhs;
    return {lhs, rhs, gap, gap >= -tol};
}

/// Villani-type bound 4 p^2 I_p(f)^2 / int f^p <= K_p(f).
inline InequalityVerdict villani_check(const DensityField& f, double p) {
    const double pm = p_mass(f, p);
    if (!(pm > 0.0)) throw Error(ErrorKind::degenerate_density, "integral of f^p vanishes");
    const double ip = fisher_generalized(f, p);
    return make_verdict(4.0 * p * p * ip * ip / pm, k_functional(f, p));
}

/// Entropy-power bound exp((p+1) R_p(f|b)) <= J_p(f) / J_p(b) against the moment-matched profile b.
inline InequalityVerdict epi_check(const DensityField& f, const DensityField& b, double p) {
    const double r = relative_renyi(f, b, p);
    return make_verdict(std::exp((p + 1.0) * r), fisher_modified(f, p) / fisher_modified(b, p));
}

/// Strengthened chain exp(2 R_p(f|b)) <= J_p(f) int b^p / (J_p(b) int f^p).
inline InequalityVerdict epi_chain_check(const DensityField& f, const DensityField& b, double p) {
    const double r = relative_renyi(f, b, p);
    const double rhs = fisher_modified(f, p) * p_mass(b, p) / (fisher_modified(b, p) * p_mass(f, p));
    return make_verdict(std::exp(2.0 * r), rhs);
}

/// Lemma-type comparison H_p(f|b) <= (int f^p) R_p(f|b), defined for p > 1.
inline InequalityVerdict nr_bound_check(const DensityField& f, const DensityField& b, double p) {
    if (p == 1.0) throw Error(ErrorKind::not_applicable, "Newman-Ralston comparison needs p > 1");
    const double r = relative_renyi(f, b, p);
    return make_verdict(nr_relative_entropy(f, b, p), p_mass(f, p) * r);
}

/// Exponent (2p^2 - 3p + 1)/(4p^2) of the Gagliardo-Nirenberg constant.
inline double gns_outer_exponent(double p) { return (2.0 * p * p - 3.0 * p + 1.0) / (4.0 * p * p); }

/// C_p = (2 (int b^p)^{2p/(p-1)} / ((2p-1)^2 I_p(b)))^{(2p^2-3p+1)/(4p^2)}.
///
/// The denominator is the generalized Fisher information of the profile itself: with that choice
/// the inequality below is an equality at g = b^{p-1/2}, and C_p is invariant under dilation of b.
inline double gns_constant(double p, const DensityField& b) {
    if (p == 1.0) throw Error(ErrorKind::not_applicable, "Gagliardo-Nirenberg form needs p > 1");
    if (!(p > 1.0 && p <= 1.5)) throw Error(ErrorKind::argument, "order p must lie in (1, 3/2]");
    const double pm = p_mass(b, p);
    const double ip = fisher_generalized(b, p);
    if (!(pm > 0.0 && ip > 0.0)) throw Error(ErrorKind::degenerate_density, "profile has no p-mass or no gradient");
    const double inner = 2.0 * std::pow(pm, 2.0 * p / (p - 1.0)) / ((2.0 * p - 1.0) * (2.0 * p - 1.0) * ip);
    return std::pow(inner, gns_outer_exponent(p));
}

/// ||g||_{2p/(2p-1)} <= C_p ||g_x||_2^{(2p^2-3p+1)/(2p^2)} ||g||_{2/(2p-1)}^{(3p-1)/(2p^2)} with g = f^{p-1/2}.
/// ||g_x||_2^2 is taken as (2p-1)^2/2 * I_p(f), the same identity that links the two forms.
inline InequalityVerdict gns_check(const DensityField& f, double p, double c_p) {
    if (p == 1.0) throw Error(ErrorKind::not_applicable, "Gagliardo-Nirenberg form needs p > 1");
    const double q = 2.0 * p - 1.0;
    const double norm_r = std::pow(p_mass(f, p), q / (2.0 * p));   // ||g||_{2p/(2p-1)}
    const double norm_s = std::pow(integrate(f), q / 2.0);          // ||g||_{2/(2p-1)}
    const double grad = std::sqrt(0.5 * q * q * fisher_generalized(f, p));
    const double rhs = c_p * std::pow(grad, 2.0 * gns_outer_exponent(p)) * std::pow(norm_s, (3.0 * p - 1.0) / (2.0 * p * p));
    return make_verdict(norm_r, rhs);
}

/// Default Csiszar-Kullback constants: Pinsker's sqrt(2) for the Boltzmann case, 2 otherwise.
inline double default_ck_constant(double p) { return p == 1.0 ? std::numbers::sqrt2 : 2.0; }

/// ||f - b||_1 <= C sqrt(R_p(f|b)), with R_1 the relative Boltzmann entropy.
inline InequalityVerdict csiszar_kullback_check(const DensityField& f, const DensityField& b, double p,
                                                std::optional<double> c_ck = std::nullopt) {
    const double c = c_ck.value_or(default_ck_constant(p));
    const double r = std::max(relative_renyi(f, b, p), 0.0);
    return make_verdict(l1_distance(f, b), c * std::sqrt(r));
}

/// Predicted dR/dtau = -(p / int v^p) K_p / I_p + 2p/theta0 from a record.
inline double predicted_renyi_slope(const TrajectoryRecord& r, double p, double theta0) {
    if (!(r.p_mass > 0.0 && r.fisher_gen > 0.0))
        throw Error(ErrorKind::degenerate_density, "record lacks p-mass or Fisher information");
    return -(p / r.p_mass) * r.k_functional / r.fisher_gen + 2.0 * p / theta0;
}

/// Slopes smaller than this are treated as stationary and skipped.
inline constexpr double kDissipationSlopeCutoff = 1e-4;

/// Worst normalized mismatch between the finite-difference slope of R_p over consecutive records
/// and the predicted dissipation, averaged over the two records of each pair. Pairs whose slope
/// magnitude is below the cutoff are stationary and carry no information; if none remain the
/// residual is 0.
inline double renyi_dissipation_residual(const std::vector<TrajectoryRecord>& records, double p, double theta0) {
    if (records.size() < 3) throw Error(ErrorKind::argument, "dissipation residual needs at least 3 records");
    double worst = 0.0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& a = records[i - 1];
        const auto& b = records[i];
        const double dtau = b.tau - a.tau;
        if (!(dtau > 0.0)) continue;
        const double slope = (b.renyi_rel - a.renyi_rel) / dtau;
        if (std::abs(slope) <= kDissipationSlopeCutoff) continue;
        const double pred = 0.5 * (predicted_renyi_slope(a, p, theta0) + predicted_renyi_slope(b, p, theta0));
        worst = std::max(worst, std::abs(slope - pred) / std::max(std::abs(slope), kDissipationSlopeCutoff));
    }
    return worst;
}

/// Least-squares slope of ln(values) against ln(times) over samples with time in [lo, hi].
inline double rate_fit(const std::vector<double>& times, const std::vector<double>& values, std::pair<double, double> window) {
    if (times.size() != values.size()) throw Error(ErrorKind::argument, "rate_fit needs matching columns");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < window.first || times[i] > window.second) continue;
        if (!(times[i] > 0.0) || !(values[i] > 0.0)) throw Error(ErrorKind::argument, "rate_fit needs positive samples");
        const double x = std::log(times[i]), y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 8) throw Error(ErrorKind::argument, "rate_fit needs at least 8 samples in the window, got " + std::to_string(n));
    const double dn = static_cast<double>(n);
    const double den = dn * sxx - sx * sx;
    if (!(den > 0.0)) throw Error(ErrorKind::argument, "rate_fit window has no spread in time");
    return (dn * sxy - sx * sy) / den;
}

/// Largest ||u - U_p||_1 / sqrt(relative entropy) over records whose relative entropy exceeds `floor`.
inline double max_l1_entropy_ratio(const std::vector<TrajectoryRecord>& records, double floor = 1e-10) {
    double worst = 0.0;
    for (const auto& r : records) {
        if (r.renyi_rel > floor) worst = std::max(worst, r.l1_to_attractor / std::sqrt(r.renyi_rel));
    }
    return worst;
}

// ---------------------------------------------------------------------------------------------
// Versioned density suite

inline constexpr const char* kDensitySuiteVersion = "1";

struct SuiteDensity {
    std::string id;
    DensityField field;
};

namespace detail {

inline DensityField unit_mass(DensityField f) { return f.scaled(1.0 / integrate(f)); }

// Dilates a unit-mass sampler until the discrete second moment equals theta.
template <typename Fn>
DensityField sample_with_moment(const Grid& grid, double theta, Fn&& shape) {
    double lambda = 1.0;
    DensityField f = unit_mass(DensityField::sample(grid, shape));
    for (int it = 0; it < 60; ++it) {
        const double th = moment(f, 2);
        if (std::abs(th - theta) <= 1e-14 * theta) break;
        lambda *= theta / th;
        const double s = 1.0 / std::sqrt(lambda);
        f = unit_mass(DensityField::sample(grid, [&](double y) { return shape(y * s); }));
    }
    return f;
}

} // namespace detail

/// Barenblatt (or Gaussian at p = 1) multiplied by 1 + amplitude cos(wavenumber y), renormalized
/// and re-dilated so that mass is 1 and the second moment equals theta0 on `grid`.
inline DensityField perturbed_barenblatt(double p, double theta0, const Grid& grid, double amplitude = 0.1,
                                         double wavenumber = 1.0) {
    if (!(std::abs(amplitude) < 1.0)) throw Error(ErrorKind::argument, "perturbation amplitude must lie in (-1, 1)");
    const auto spec = barenblatt_spec(p, theta0);
    if (std::isfinite(spec.support_radius)) detail::require_inside(grid, 1.1 * spec.support_radius);
    return detail::sample_with_moment(grid, theta0, [&](double y) {
        return spec(y) * (1.0 + amplitude * std::cos(wavenumber * y));
    });
}

/// The six moment-matched densities of the inequality suite, in a fixed order.
///  barenblatt        steady profile of order p
///  gaussian          standard normal shape
///  smoothed-uniform  plateau with logistic edges (a sharp uniform has infinite Fisher information)
///  bimodal           equal mixture of two Gaussians at +-1.5 with variance 0.25
///  perturbed         Barenblatt times (1 + 0.1 cos y)
///  skewed            unequal mixture of two Gaussians, shifted to zero mean
inline std::vector<SuiteDensity> density_suite(double p, double theta0, const Grid& grid) {
    const auto spec = barenblatt_spec(p, theta0);
    std::vector<SuiteDensity> out;
    out.push_back({"barenblatt", detail::sample_with_moment(grid, theta0, spec)});
    out.push_back({"gaussian", detail::sample_with_moment(grid, theta0, [](double y) { return std::exp(-0.5 * y * y); })});
    out.push_back({"smoothed-uniform", detail::sample_with_moment(grid, theta0, [](double y) {
                       return 1.0 / (1.0 + std::exp((std::abs(y) - 1.0) / 0.08));
                   })});
    out.push_back({"bimodal", detail::sample_with_moment(grid, theta0, [](double y) {
                       return std::exp(-2.0 * (y - 1.5) * (y - 1.5)) + std::exp(-2.0 * (y + 1.5) * (y + 1.5));
                   })});
    out.push_back({"perturbed", perturbed_barenblatt(p, theta0, grid)});
    // weights 0.7 / 0.3 at -0.6 / +1.4 have zero mean
    out.push_back({"skewed", detail::sample_with_moment(grid, theta0, [](double y) {
                       return 0.7 * std::exp(-2.0 * (y + 0.6) * (y + 0.6)) + 0.3 * std::exp(-2.0 * (y - 1.4) * (y - 1.4));
                   })});
    return out;
}

struct SuiteRow {
    std::string density_id;
    std::string inequality_id;
    std::optional<InequalityVerdict> verdict; ///< empty when the inequality does not apply at this p
};

/// Evaluates every inequality on every suite density. Rows are in suite order, then in the order
/// renyi-nonneg, villani, epi, epi-chain, nr-bound, gagliardo-nirenberg, csiszar-kullback.
inline std::vector<SuiteRow> run_inequality_suite(double p, double theta0, const Grid& grid) {
    const auto spec = barenblatt_spec(p, theta0);
    const auto suite = density_suite(p, theta0, grid);
    std::optional<double> c_p;
    if (p > 1.0) c_p = gns_constant(p, suite.front().field);
    std::vector<SuiteRow> rows;
    for (const auto& d : suite) {
        const DensityField b = moment_matched_attractor(d.field, spec);
        rows.push_back({d.id, "renyi-nonneg", make_verdict(0.0, relative_renyi(d.field, b, p))});
        rows.push_back({d.id, "villani", villani_check(d.field, p)});
        rows.push_back({d.id, "epi", epi_check(d.field, b, p)});
        rows.push_back({d.id, "epi-chain", epi_chain_check(d.field, b, p)});
        if (p > 1.0) {
            rows.push_back({d.id, "nr-bound", nr_bound_check(d.field, b, p)});
            rows.push_back({d.id, "gagliardo-nirenberg", gns_check(d.field, p, *c_p)});
        } else {
            rows.push_back({d.id, "nr-bound", std::nullopt});
            rows.push_back({d.id, "gagliardo-nirenberg", std::nullopt});
        }
        rows.push_back({d.id, "csiszar-kullback", csiszar_kullback_check(d.field, b, p)});
    }
    return rows;
}

} // namespace entroflow
