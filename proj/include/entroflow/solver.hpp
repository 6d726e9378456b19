#pragma once

#include "entroflow/banded.hpp"
#include "entroflow/bounds.hpp"
#include "entroflow/functionals.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/steady_states.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace entroflow {

enum class EquationKind { original, rescaled };

/// Face mobility used in the fourth-order flux.
///  - donor_limited: arithmetic mean capped by twice the upwind value (default, keeps fronts moving
///    while never draining an empty node)
///  - arithmetic: plain mean, clipped at zero
///  - harmonic: harmonic mean, zero as soon as one side vanishes
enum class MobilityScheme { donor_limited, arithmetic, harmonic };

inline const char* to_string(EquationKind k) { return k == EquationKind::original ? "original" : "rescaled"; }

inline const char* to_string(MobilityScheme m) {
    switch (m) {
    case MobilityScheme::donor_limited: return "donor-limited";
    case MobilityScheme::arithmetic: return "arithmetic";
    case MobilityScheme::harmonic: return "harmonic";
    }
    return "unknown";
}

struct SolverConfig {
    EquationKind equation_kind = EquationKind::original;
    double p = 1.5;
    double theta0 = 1.0;
    double dt_init = 1e-4;
    double dt_min = 1e-14;
    double dt_max = 1e-2;
    double newton_tol = 1e-11;      ///< relative to max(u)
    int newton_max_iters = 30;
    double positivity_floor = 1e-10; ///< relative to max(u0)
    MobilityScheme mobility_scheme = MobilityScheme::donor_limited;

    void validate() const {
        (void)ModelParams{p, theta0};
        if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max))
            throw Error(ErrorKind::argument, "time steps must satisfy 0 < dt_min <= dt_init <= dt_max");
        if (!(newton_tol > 0.0)) throw Error(ErrorKind::argument, "newton_tol must be positive");
        if (newton_max_iters < 1) throw Error(ErrorKind::argument, "newton_max_iters must be >= 1");
        if (!(positivity_floor >= 0.0)) throw Error(ErrorKind::argument, "positivity_floor must be >= 0");
    }
};

struct SolverState {
    DensityField field;
    double time = 0.0;          ///< t for the original equation, tau for the rescaled one
    std::size_t step_count = 0;
    double last_dt = 0.0;
    double dt = 0.0;            ///< proposal for the next step
    int accept_streak = 0;
    double floor_abs = 0.0;     ///< absolute positivity floor, fixed from the initial data
    double max_clamp = 0.0;     ///< largest negative value clamped to zero so far
    std::size_t newton_rejections = 0;
    std::size_t negativity_rejections = 0;
};

inline SolverState make_state(const DensityField& initial, const SolverConfig& cfg) {
    cfg.validate();
    SolverState s{initial};
    s.dt = cfg.dt_init;
    s.floor_abs = cfg.positivity_floor * initial.max();
    return s;
}

namespace detail {

inline constexpr double kNegativityTolerance = 1e-13;

/// Face fluxes of the conservative discretization and their derivatives.
///
/// The fourth-order part is -c (M G_x)_x with c = 2/(2p-1) and
/// G = u^{p-3/2} (u^{p-1/2})_xx, which for p = 3/2 is G = u_xx (mobility form of the thin film).
/// The rescaled drift beta (y v)_y uses face values (y_i v_i + y_{i+1} v_{i+1})/2, limited by the
/// outer (upwind) node, and the nonlocal coefficient kappa is the one that makes the discrete
/// second moment exactly invariant.
class FluxAssembler {
public:
    FluxAssembler(const Grid& grid, const SolverConfig& cfg, double floor_abs)
        : cfg_(cfg), n_(grid.size()), h_(grid.spacing()), floor_(floor_abs), y_(grid.nodes()), omega_(n_) {
        for (std::size_t i = 0; i < n_; ++i) omega_[i] = grid.weight(i);
        rescaled_ = cfg.equation_kind == EquationKind::rescaled;
        beta_ = rescaled_ ? 2.0 * cfg.p / cfg.theta0 : 0.0;
        c_ = 2.0 / (2.0 * cfg.p - 1.0);
        const std::size_t nf = n_ - 1;
        g_.resize(n_);
        gm_.resize(n_);
        g0_.resize(n_);
        gp_.resize(n_);
        jt_.resize(nf);
        ah_.resize(nf);
        flux_.resize(nf);
        djt_.resize(nf);
        dah_.resize(nf);
        delta_.resize(nf);
        for (std::size_t f = 0; f < nf; ++f) delta_[f] = y_[f + 1] * y_[f + 1] - y_[f] * y_[f];
        grad_kappa_.assign(n_, 0.0);
    }

    std::span<const double> omega() const { return omega_; }
    std::span<const double> flux() const { return flux_; }
    double kappa() const { return kappa_; }

    void evaluate(std::span<const double> x, bool with_derivatives) {
        compute_g(x);
        compute_fourth_order(x);
        if (rescaled_) {
            compute_drift(x);
            compute_kappa(with_derivatives);
        } else {
            kappa_ = 1.0;
        }
        for (std::size_t f = 0; f + 1 < n_; ++f) {
            flux_[f] = kappa_ * jt_[f] - beta_ * ah_[f];
            if (!std::isfinite(flux_[f])) throw Error(ErrorKind::numerical_blowup, "non-finite face flux");
        }
    }

    /// omega_i (x_i - prev_i) + dt (F_{i+1/2} - F_{i-1/2}); requires a prior evaluate(x).
    void residual(std::span<const double> x, std::span<const double> prev, double dt, std::span<double> r) const {
        for (std::size_t i = 0; i < n_; ++i) {
            const double right = i + 1 < n_ ? flux_[i] : 0.0;
            const double left = i > 0 ? flux_[i - 1] : 0.0;
            r[i] = omega_[i] * (x[i] - prev[i]) + dt * (right - left);
        }
    }

    /// Banded part of the residual Jacobian; requires evaluate(x, true).
    void jacobian(double dt, BandMatrix& a) const {
        a.clear();
        for (std::size_t i = 0; i < n_; ++i) a.add(i, i, omega_[i]);
        for (std::size_t f = 0; f + 1 < n_; ++f) {
            for (std::size_t k = 0; k < 4; ++k) {
                if ((f == 0 && k == 0) || f + k > n_) continue;
                const std::size_t j = f + k - 1;
                double d = kappa_ * djt_[f][k];
                if (k == 1 || k == 2) d -= beta_ * dah_[f][k - 1];
                if (d == 0.0) continue;
                a.add(f, j, dt * d);
                a.add(f + 1, j, -dt * d);
            }
        }
    }

    /// Size of the residual that rounding alone produces: the flux carries G ~ u^{2p-2}/h^2,
    /// differenced twice more, so errors of order eps u^{2p-1}/h^4 per unit time survive.
    double roundoff_floor(std::span<const double> x, double dt) const {
        double umax = 0.0;
        for (double v : x) umax = std::max(umax, std::abs(v));
        const double h2 = h_ * h_;
        return 64.0 * std::numeric_limits<double>::epsilon() * dt * std::abs(kappa_) * c_ *
               std::pow(umax, 2.0 * cfg_.p - 1.0) / (h2 * h2);
    }

    /// Rank-one term u v^T of the Jacobian coming from kappa's dependence on the state.
    bool has_rank_one() const { return rescaled_; }

    void rank_one(double dt, std::vector<double>& u, std::vector<double>& v) const {
        u.assign(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const double right = i + 1 < n_ ? jt_[i] : 0.0;
            const double left = i > 0 ? jt_[i - 1] : 0.0;
            u[i] = dt * (right - left);
        }
        v = grad_kappa_;
    }

private:
    void compute_g(std::span<const double> x) {
        const double p = cfg_.p;
        const bool linear = p == 1.5;
        const double q = p - 0.5, e = p - 1.5;
        const double ih2 = 1.0 / (h_ * h_);
        w_.resize(n_);
        dw_.resize(n_);
        s_.resize(n_);
        ds_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            if (linear) {
                w_[i] = x[i];
                dw_[i] = 1.0;
                s_[i] = 1.0;
                ds_[i] = 0.0;
                continue;
            }
            // smooth floor: ub ~ x well above floor_, ub -> floor_ near zero, no kink for Newton to trip on
            const double root = std::hypot(x[i], 2.0 * floor_);
            const double ub = x[i] >= 0.0 ? 0.5 * (x[i] + root) : 2.0 * floor_ * floor_ / (root - x[i]);
            if (!(ub > 0.0)) throw Error(ErrorKind::numerical_blowup, "positivity floor must be positive for p < 3/2");
            const double dub = ub / root;
            w_[i] = std::pow(ub, q);
            dw_[i] = q * w_[i] / ub * dub;
            s_[i] = std::pow(ub, e);
            ds_[i] = e * s_[i] / ub * dub;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            // reflected Laplacian at the two ends
            double lm = ih2, l0 = -2.0 * ih2, lp = ih2;
            if (i == 0) {
                lm = 0.0;
                lp = 2.0 * ih2;
            } else if (i + 1 == n_) {
                lm = 2.0 * ih2;
                lp = 0.0;
            }
            const double wm = i > 0 ? w_[i - 1] : 0.0;
            const double wp = i + 1 < n_ ? w_[i + 1] : 0.0;
            const double lap = lm * wm + l0 * w_[i] + lp * wp;
            g_[i] = s_[i] * lap;
            gm_[i] = i > 0 ? s_[i] * lm * dw_[i - 1] : 0.0;
            g0_[i] = ds_[i] * lap + s_[i] * l0 * dw_[i];
            gp_[i] = i + 1 < n_ ? s_[i] * lp * dw_[i + 1] : 0.0;
        }
    }

    void compute_fourth_order(std::span<const double> x) {
        const double ch = c_ / h_;
        for (std::size_t f = 0; f + 1 < n_; ++f) {
            const std::size_t i = f;
            const double a = x[i], b = x[i + 1];
            const double dg = g_[i + 1] - g_[i];
            double m = 0.0, dma = 0.0, dmb = 0.0;
            switch (cfg_.mobility_scheme) {
            case MobilityScheme::arithmetic:
                m = 0.5 * (a + b);
                dma = dmb = 0.5;
                break;
            case MobilityScheme::harmonic:
                if (a > 0.0 && b > 0.0) {
                    const double s = a + b;
                    m = 2.0 * a * b / s;
                    dma = 2.0 * b * b / (s * s);
                    dmb = 2.0 * a * a / (s * s);
                }
                break;
            case MobilityScheme::donor_limited: {
                const bool donor_left = dg >= 0.0;
                const double donor = donor_left ? a : b;
                const double mean = 0.5 * (a + b);
                if (2.0 * donor < mean) {
                    m = 2.0 * donor;
                    (donor_left ? dma : dmb) = 2.0;
                } else {
                    m = mean;
                    dma = dmb = 0.5;
                }
                break;
            }
            }
            if (m <= 0.0) {
                m = 0.0;
                dma = dmb = 0.0;
            }
            jt_[f] = ch * m * dg;
            // dg depends on nodes i-1 .. i+2 through the G stencils
            const double d0 = -gm_[i];
            const double d1 = gm_[i + 1] - g0_[i];
            const double d2 = g0_[i + 1] - gp_[i];
            const double d3 = gp_[i + 1];
            djt_[f] = {ch * m * d0, ch * (dma * dg + m * d1), ch * (dmb * dg + m * d2), ch * m * d3};
        }
    }

    void compute_drift(std::span<const double> x) {
        for (std::size_t f = 0; f + 1 < n_; ++f) {
            const std::size_t i = f;
            const double yf = 0.5 * (y_[i] + y_[i + 1]);
            const bool outer_right = yf > 0.0;
            const double donor = std::max(outer_right ? x[i + 1] : x[i], 0.0);
            const double cap = 2.0 * std::abs(yf) * donor;
            const double a = 0.5 * (y_[i] * x[i] + y_[i + 1] * x[i + 1]);
            if (a > cap || a < -cap) {
                const double sgn = a > 0.0 ? 1.0 : -1.0;
                ah_[f] = sgn * cap;
                const double dcap = donor > 0.0 ? sgn * 2.0 * std::abs(yf) : 0.0;
                dah_[f] = outer_right ? std::array<double, 2>{0.0, dcap} : std::array<double, 2>{dcap, 0.0};
            } else {
                ah_[f] = a;
                dah_[f] = {0.5 * y_[i], 0.5 * y_[i + 1]};
            }
        }
    }

    void compute_kappa(bool with_derivatives) {
        double num = 0.0, den = 0.0;
        for (std::size_t f = 0; f + 1 < n_; ++f) {
            num += ah_[f] * delta_[f];
            den += jt_[f] * delta_[f];
        }
        if (!(den > 0.0) || !std::isfinite(den))
            throw Error(ErrorKind::numerical_blowup, "nonlocal coefficient undefined (second-moment production <= 0)");
        kappa_ = beta_ * num / den;
        if (!with_derivatives) return;
        std::fill(grad_kappa_.begin(), grad_kappa_.end(), 0.0);
        for (std::size_t f = 0; f + 1 < n_; ++f) {
            for (std::size_t k = 0; k < 4; ++k) {
                if ((f == 0 && k == 0) || f + k > n_) continue;
                double d = -kappa_ * djt_[f][k];
                if (k == 1 || k == 2) d += beta_ * dah_[f][k - 1];
                grad_kappa_[f + k - 1] += delta_[f] * d / den;
            }
        }
    }

    const SolverConfig& cfg_;
    std::size_t n_;
    double h_, floor_;
    bool rescaled_ = false;
    double beta_ = 0.0, c_ = 1.0, kappa_ = 1.0;
    std::vector<double> y_, omega_, delta_;
    std::vector<double> w_, dw_, s_, ds_;
    std::vector<double> g_, gm_, g0_, gp_;
    std::vector<double> jt_, ah_, flux_;
    std::vector<std::array<double, 4>> djt_;
    std::vector<std::array<double, 2>> dah_;
    std::vector<double> grad_kappa_;
};

inline double max_abs_scaled(std::span<const double> r, std::span<const double> omega) {
    double m = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = std::abs(r[i] / omega[i]);
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        m = std::max(m, v);
    }
    return m;
}

struct NewtonOutcome {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

/// Damped Newton for one implicit-Euler step; x enters as the initial guess.
inline NewtonOutcome newton_solve(FluxAssembler& ops, std::span<const double> prev, double dt, double tol,
                                  int max_iters, std::vector<double>& x) {
    const double requested_tol = tol;
    const std::size_t n = x.size();
    std::vector<double> r(n), trial(n), delta(n), ru, rv;
    BandMatrix jac(n, 2, 2);
    NewtonOutcome out;
    try {
        ops.evaluate(x, true);
    } catch (const Error&) {
        return out;
    }
    ops.residual(x, prev, dt, r);
    double norm = max_abs_scaled(r, ops.omega());
    for (int it = 0; it < max_iters; ++it) {
        tol = std::max(requested_tol, ops.roundoff_floor(x, dt));
        out.iterations = it;
        out.residual = norm;
        if (norm <= tol) {
            out.converged = true;
            return out;
        }
        ops.jacobian(dt, jac);
        try {
            jac.factorize();
        } catch (const Error&) {
            return out;
        }
        for (std::size_t i = 0; i < n; ++i) delta[i] = -r[i];
        jac.solve(delta);
        if (ops.has_rank_one()) {
            // Sherman-Morrison: (A + u v^T)^{-1} b = z - A^{-1}u (v.z)/(1 + v.A^{-1}u)
            ops.rank_one(dt, ru, rv);
            jac.solve(ru);
            double vz = 0.0, vy = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                vz += rv[i] * delta[i];
                vy += rv[i] * ru[i];
            }
            const double denom = 1.0 + vy;
            if (!(std::abs(denom) > 1e-14)) return out;
            for (std::size_t i = 0; i < n; ++i) delta[i] -= ru[i] * vz / denom;
        }
        // The discrete fourth-order residual has a roundoff floor near eps * dt / h^4, which can sit
        // above the tolerance on fine grids; a negligible full update therefore also counts as converged.
        double step_size = 0.0;
        for (double d : delta) step_size = std::max(step_size, std::abs(d));
        if (!std::isfinite(step_size)) return out;
        if (step_size <= tol) {
            for (std::size_t i = 0; i < n; ++i) x[i] += delta[i];
            out.iterations = it + 1;
            out.converged = true;
            return out;
        }
        double lambda = 1.0;
        bool accepted = false;
        while (lambda >= 1.0 / 64.0) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + lambda * delta[i];
            try {
                ops.evaluate(trial, true);
                ops.residual(trial, prev, dt, r);
                const double trial_norm = max_abs_scaled(r, ops.omega());
                if (trial_norm < norm || trial_norm <= tol) {
                    x.swap(trial);
                    norm = trial_norm;
                    accepted = true;
                    break;
                }
            } catch (const Error&) {
            }
            lambda *= 0.5;
        }
        if (!accepted) return out;
    }
    out.iterations = max_iters;
    out.residual = norm;
    out.converged = norm <= tol;
    return out;
}

inline void require_positive_dlss(const DensityField& f) {
    double lo = f[0];
    for (std::size_t i = 1; i < f.size(); ++i) lo = std::min(lo, f[i]);
    if (!(lo > 0.0))
        throw Error(ErrorKind::contract, "p = 1 needs strictly positive data; compactly supported input is refused");
}

} // namespace detail

/// Discrete right-hand side du/dt of the selected equation at `field`.
inline std::vector<double> spatial_operator(const DensityField& field, const SolverConfig& cfg) {
    cfg.validate();
    detail::FluxAssembler ops(field.grid(), cfg, cfg.positivity_floor * field.max());
    ops.evaluate(field.values(), false);
    const auto flux = ops.flux();
    const auto omega = ops.omega();
    const std::size_t n = field.size();
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double right = i + 1 < n ? flux[i] : 0.0;
        const double left = i > 0 ? flux[i - 1] : 0.0;
        rhs[i] = -(right - left) / omega[i];
        if (!std::isfinite(rhs[i])) throw Error(ErrorKind::numerical_blowup, "non-finite right-hand side");
    }
    return rhs;
}

/// One accepted implicit-Euler step of size at most min(state.dt, dt_cap).
///
/// Newton failure or negativity below -1e-13 halves dt and retries; values in [-1e-13, 0) are
/// clamped. After five consecutive accepted steps at the proposed size the proposal grows by 1.2.
inline SolverState step(const SolverState& state, const SolverConfig& cfg,
                        double dt_cap = std::numeric_limits<double>::infinity()) {
    const Grid& grid = state.field.grid();
    detail::FluxAssembler ops(grid, cfg, state.floor_abs);
    const auto prev = state.field.values();
    const double tol = cfg.newton_tol * state.field.max();
    double proposal = std::min(state.dt, cfg.dt_max);
    std::vector<double> x;
    std::string last_reason = "none";
    std::size_t newton_rejections = 0, negativity_rejections = 0;
    while (true) {
        const double dt = std::min(proposal, dt_cap);
        if (dt < cfg.dt_min && dt < dt_cap) {
            throw Error(ErrorKind::step_failure, "time step " + std::to_string(dt) + " fell below dt_min at time " +
                                                     std::to_string(state.time) + " after step " +
                                                     std::to_string(state.step_count) + " (" + last_reason + ")");
        }
        x.assign(prev.begin(), prev.end());
        const auto outcome = detail::newton_solve(ops, prev, dt, tol, cfg.newton_max_iters, x);
        bool ok = outcome.converged;
        double clamp = 0.0;
        if (ok) {
            for (double& v : x) {
                if (v < 0.0) {
                    if (v < -detail::kNegativityTolerance) {
                        ok = false;
                        ++negativity_rejections;
                        last_reason = "negativity " + std::to_string(v);
                        break;
                    }
                    clamp = std::max(clamp, -v);
                    v = 0.0;
                }
            }
        } else {
            ++newton_rejections;
            last_reason = "newton residual " + std::to_string(outcome.residual);
        }
        if (!ok) {
            proposal = 0.5 * dt;
            continue;
        }
        SolverState next{DensityField(grid, std::move(x))};
        next.time = state.time + dt;
        next.step_count = state.step_count + 1;
        next.last_dt = dt;
        next.floor_abs = state.floor_abs;
        next.max_clamp = std::max(state.max_clamp, clamp);
        next.newton_rejections = state.newton_rejections + newton_rejections;
        next.negativity_rejections = state.negativity_rejections + negativity_rejections;
        const bool full = dt >= proposal;
        const bool failed_before = proposal < std::min(state.dt, cfg.dt_max);
        next.accept_streak = (full && !failed_before) ? state.accept_streak + 1 : 0;
        next.dt = failed_before ? proposal : std::min(state.dt, cfg.dt_max);
        if (next.accept_streak >= 5) {
            next.dt = std::min(1.2 * next.dt, cfg.dt_max);
            next.accept_streak = 0;
        }
        return next;
    }
}

/// Diagnostics of one recorded state. The last two members are not part of the CSV schema.
struct TrajectoryRecord {
    double time = 0.0;
    double tau = 0.0;
    double mass = 0.0;
    double first_moment = 0.0;
    double second_moment = 0.0;
    double renyi_rel = 0.0;
    double nr_rel = 0.0;
    double boltz_rel = 0.0;
    double l1_to_attractor = 0.0;
    double surface_energy = 0.0;
    double fisher_gen = 0.0;
    double k_functional = 0.0;
    double bound_super = 0.0;
    double bound_exp = 0.0;
    double p_mass = 0.0;
    double max_value = 0.0;
};

/// Entropies and distances of f relative to the attractor with f's mass and second moment.
/// For p = 1 the Newman-Ralston column falls back to its p -> 1 limit, the relative Boltzmann entropy.
inline TrajectoryRecord measure(const DensityField& f, double p, const BarenblattSpec& spec) {
    TrajectoryRecord r;
    r.mass = integrate(f);
    r.first_moment = moment(f, 1);
    r.second_moment = moment(f, 2);
    const DensityField u = moment_matched_attractor(f, spec);
    r.renyi_rel = relative_renyi(f, u, p);
    r.boltz_rel = boltzmann_relative(f, r.second_moment);
    r.nr_rel = p == 1.0 ? r.boltz_rel : nr_relative_entropy(f, u, p);
    r.l1_to_attractor = l1_distance(f, u);
    r.surface_energy = surface_energy(f);
    r.fisher_gen = fisher_generalized(f, p);
    r.k_functional = k_functional(f, p);
    r.p_mass = p_mass(f, p);
    r.max_value = f.max();
    return r;
}

struct EvolveResult {
    std::vector<TrajectoryRecord> records;
    SolverState final_state;
    double max_mass_drift = 0.0;    ///< over all accepted steps, absolute
    double max_theta_drift = 0.0;   ///< rescaled runs only, relative to theta0
};

namespace detail {

inline void check_initial(const DensityField& initial, const SolverConfig& cfg) {
    const double mass = integrate(initial);
    if (std::abs(mass - 1.0) > 1e-8)
        throw Error(ErrorKind::contract, "initial data must have unit mass, got " + std::to_string(mass));
    const double m1 = moment(initial, 1);
    if (std::abs(m1) > 1e-6) throw Error(ErrorKind::contract, "initial data must be centred, first moment " + std::to_string(m1));
    if (cfg.p == 1.0) require_positive_dlss(initial);
    if (cfg.equation_kind == EquationKind::rescaled) {
        const double th = moment(initial, 2);
        if (std::abs(th - cfg.theta0) > kMomentMatchTolerance * cfg.theta0)
            throw Error(ErrorKind::contract, "rescaled run needs second moment theta0 = " + std::to_string(cfg.theta0) +
                                                 ", initial data has " + std::to_string(th));
    }
}

} // namespace detail

/// Integrates to t_end (t or tau depending on the equation kind), recording every `record_every`
/// accepted steps and at t_end.
///
/// Original runs derive tau from the measured second moment; rescaled runs recover t by
/// integrating dt/dtau = lambda^{1+p} / I_p(v), lambda = exp(4 p tau / theta0), step by step.
/// Bounds use r0 = renyi_rel of the initial record.
/// `observer`, when set, sees each record together with the state it was measured on.
using RecordObserver = std::function<void(const TrajectoryRecord&, const SolverState&)>;

inline EvolveResult evolve(const DensityField& initial, const SolverConfig& cfg, double t_end, std::size_t record_every,
                           const RecordObserver& observer = {}) {
    cfg.validate();
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::argument, "t_end must be finite and >= 0");
    if (record_every == 0) throw Error(ErrorKind::argument, "record_every must be >= 1");
    detail::check_initial(initial, cfg);
    const bool rescaled = cfg.equation_kind == EquationKind::rescaled;
    const double p = cfg.p;
    const double theta_init = moment(initial, 2);
    const double theta0 = rescaled ? cfg.theta0 : theta_init;
    const BarenblattSpec spec = barenblatt_spec(p, theta0);
    const double mass0 = integrate(initial);

    EvolveResult out{{}, make_state(initial, cfg)};
    BoundParams bp{0.0, p, theta0};
    double t_phys = 0.0;
    double rate_prev = 0.0;
    auto lambda_of = [&](double tau) { return std::exp(4.0 * p * tau / theta0); };
    auto record = [&](const SolverState& st) {
        TrajectoryRecord r = measure(st.field, p, spec);
        if (rescaled) {
            r.tau = st.time;
            r.time = t_phys;
        } else {
            r.time = st.time;
            r.tau = theta0 / (4.0 * p) * std::log(r.second_moment / theta0);
        }
        if (out.records.empty()) bp.r0 = std::max(r.renyi_rel, 0.0);
        const double tau_b = std::max(r.tau, 0.0);
        r.bound_super = super_bound(tau_b, bp);
        r.bound_exp = exp_reference(tau_b, bp);
        out.records.push_back(r);
        if (observer) observer(r, st);
    };
    if (rescaled) rate_prev = std::pow(lambda_of(0.0), 1.0 + p) / fisher_generalized(initial, p);
    record(out.final_state);

    SolverState& st = out.final_state;
    std::size_t since_record = 0;
    const double t_eps = 1e-12 * std::max(1.0, t_end);
    while (st.time < t_end - t_eps) {
        SolverState next = step(st, cfg, t_end - st.time);
        const double mass = integrate(next.field);
        out.max_mass_drift = std::max(out.max_mass_drift, std::abs(mass - mass0));
        if (rescaled) {
            const double th = moment(next.field, 2);
            out.max_theta_drift = std::max(out.max_theta_drift, std::abs(th - cfg.theta0) / cfg.theta0);
            const double rate = std::pow(lambda_of(next.time), 1.0 + p) / fisher_generalized(next.field, p);
            t_phys += 0.5 * (rate_prev + rate) * next.last_dt;
            rate_prev = rate;
        }
        st = std::move(next);
        if (++since_record >= record_every) {
            since_record = 0;
            record(st);
        }
    }
    if (since_record != 0) record(st);
    return out;
}

} // namespace entroflow
