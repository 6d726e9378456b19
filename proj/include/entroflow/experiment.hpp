#pragma once

#include "entroflow/analysis.hpp"
#include "entroflow/bounds.hpp"
#include "entroflow/rescaling.hpp"
#include "entroflow/solver.hpp"
#include "entroflow/steady_states.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace entroflow {

enum class InitialKind { barenblatt, gaussian, perturbed_barenblatt, self_similar, compact_bump, file };

inline const char* to_string(InitialKind k) {
    switch (k) {
    case InitialKind::barenblatt: return "barenblatt";
    case InitialKind::gaussian: return "gaussian";
    case InitialKind::perturbed_barenblatt: return "perturbed-barenblatt";
    case InitialKind::self_similar: return "self-similar";
    case InitialKind::compact_bump: return "compact-bump";
    case InitialKind::file: return "file";
    }
    return "?";
}

struct InitialCondition {
    InitialKind kind = InitialKind::barenblatt;
    double amplitude = 0.1;
    double wavenumber = 1.0;
    double t_ref = 1.0;
    std::string path; ///< two-column text file (x, u) for InitialKind::file
};

struct ExperimentConfig {
    std::string name = "custom";
    SolverConfig solver;
    double half_width = 4.0;
    std::size_t n_points = 1025;
    InitialCondition initial;
    double t_end = 1.0;
    std::size_t record_every = 10;
    std::optional<double> fit_start; ///< default t_end / 10
    std::optional<double> fit_end;   ///< default t_end
    std::string csv_path;
    std::string json_path;

    Grid grid() const { return Grid(half_width, n_points); }

    void validate() const {
        solver.validate();
        (void)grid();
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::argument, "t-end must be finite and >= 0");
        if (record_every == 0) throw Error(ErrorKind::argument, "record-every must be >= 1");
        if (initial.kind == InitialKind::file && initial.path.empty())
            throw Error(ErrorKind::argument, "ic = file needs ic-path");
        if (initial.kind == InitialKind::self_similar && !(initial.t_ref > 0.0))
            throw Error(ErrorKind::argument, "t-ref must be positive");
    }
};

namespace detail {

inline double parse_real(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v))
        throw Error(ErrorKind::argument, "option '" + std::string(key) + "' expects a finite number, got '" + std::string(text) + "'");
    return v;
}

inline std::size_t parse_count(std::string_view key, std::string_view text) {
    unsigned long long v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end)
        throw Error(ErrorKind::argument, "option '" + std::string(key) + "' expects a non-negative integer, got '" + std::string(text) + "'");
    return static_cast<std::size_t>(v);
}

} // namespace detail

/// Option keys accepted by set_option; CLI flags use the same names with a leading "--".
inline const std::vector<std::string>& option_keys() {
    static const std::vector<std::string> keys = {
        "name", "kind", "p", "theta0", "half-width", "n-points", "dt-init", "dt-min", "dt-max", "newton-tol",
        "newton-max-iters", "positivity-floor", "mobility", "ic", "amplitude", "wavenumber", "t-ref", "ic-path",
        "t-end", "record-every", "fit-start", "fit-end", "csv", "json"};
    return keys;
}

/// Applies one key/value setting. Unknown keys and malformed values raise argument errors.
inline void set_option(ExperimentConfig& c, std::string_view key, std::string_view value) {
    using detail::parse_count;
    using detail::parse_real;
    if (key == "name") c.name = value;
    else if (key == "kind") {
        if (value == "original") c.solver.equation_kind = EquationKind::original;
        else if (value == "rescaled") c.solver.equation_kind = EquationKind::rescaled;
        else throw Error(ErrorKind::argument, "kind must be original or rescaled");
    } else if (key == "p") c.solver.p = parse_real(key, value);
    else if (key == "theta0") c.solver.theta0 = parse_real(key, value);
    else if (key == "half-width") c.half_width = parse_real(key, value);
    else if (key == "n-points") c.n_points = parse_count(key, value);
    else if (key == "dt-init") c.solver.dt_init = parse_real(key, value);
    else if (key == "dt-min") c.solver.dt_min = parse_real(key, value);
    else if (key == "dt-max") c.solver.dt_max = parse_real(key, value);
    else if (key == "newton-tol") c.solver.newton_tol = parse_real(key, value);
    else if (key == "newton-max-iters") c.solver.newton_max_iters = static_cast<int>(parse_count(key, value));
    else if (key == "positivity-floor") c.solver.positivity_floor = parse_real(key, value);
    else if (key == "mobility") {
        if (value == "donor-limited") c.solver.mobility_scheme = MobilityScheme::donor_limited;
        else if (value == "arithmetic") c.solver.mobility_scheme = MobilityScheme::arithmetic;
        else if (value == "harmonic") c.solver.mobility_scheme = MobilityScheme::harmonic;
        else throw Error(ErrorKind::argument, "mobility must be donor-limited, arithmetic or harmonic");
    } else if (key == "ic") {
        bool found = false;
        for (auto k : {InitialKind::barenblatt, InitialKind::gaussian, InitialKind::perturbed_barenblatt,
                       InitialKind::self_similar, InitialKind::compact_bump, InitialKind::file}) {
            if (value == to_string(k)) {
                c.initial.kind = k;
                found = true;
            }
        }
        if (!found) throw Error(ErrorKind::argument, "unknown initial condition '" + std::string(value) + "'");
    } else if (key == "amplitude") c.initial.amplitude = parse_real(key, value);
    else if (key == "wavenumber") c.initial.wavenumber = parse_real(key, value);
    else if (key == "t-ref") c.initial.t_ref = parse_real(key, value);
    else if (key == "ic-path") c.initial.path = value;
    else if (key == "t-end") c.t_end = parse_real(key, value);
    else if (key == "record-every") c.record_every = parse_count(key, value);
    else if (key == "fit-start") c.fit_start = parse_real(key, value);
    else if (key == "fit-end") c.fit_end = parse_real(key, value);
    else if (key == "csv") c.csv_path = value;
    else if (key == "json") c.json_path = value;
    else throw Error(ErrorKind::argument, "unknown option '" + std::string(key) + "'");
}

using Settings = std::vector<std::pair<std::string, std::string>>;

inline void apply_settings(ExperimentConfig& c, const Settings& s) {
    for (const auto& [k, v] : s) set_option(c, k, v);
}

// ---------------------------------------------------------------------------------------------
// Presets

struct Preset {
    std::string name;
    std::string summary;
    Settings settings;
};

inline const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = {
        {"thinfilm-selfsim", "thin film from the exact source solution at t = 1, evolved to t = 2",
         {{"kind", "original"}, {"p", "1.5"}, {"ic", "self-similar"}, {"t-ref", "1"}, {"half-width", "4"},
          {"n-points", "1025"}, {"t-end", "1"}, {"dt-init", "1e-5"}, {"dt-max", "1e-3"}, {"record-every", "10"}}},
        {"thinfilm-compact", "thin film from compactly supported data, long-time decay rates",
         {{"kind", "original"}, {"p", "1.5"}, {"ic", "compact-bump"}, {"half-width", "8"}, {"n-points", "2049"},
          {"t-end", "100"}, {"dt-init", "1e-5"}, {"dt-max", "0.5"}, {"record-every", "20"}, {"fit-start", "10"},
          {"fit-end", "100"}}},
        {"rescaled-perturbed", "rescaled thin film from a perturbed Barenblatt profile",
         {{"kind", "rescaled"}, {"p", "1.5"}, {"ic", "perturbed-barenblatt"}, {"amplitude", "0.1"}, {"half-width", "4"},
          {"n-points", "2049"}, {"t-end", "1"}, {"dt-max", "0.01"}, {"record-every", "10"}}},
        {"rescaled-steady", "rescaled thin film started at its steady state",
         {{"kind", "rescaled"}, {"p", "1.5"}, {"ic", "barenblatt"}, {"half-width", "4"}, {"n-points", "1025"},
          {"t-end", "1"}, {"dt-max", "0.01"}, {"record-every", "10"}}},
        {"dlss-perturbed", "rescaled DLSS equation from a perturbed Gaussian",
         {{"kind", "rescaled"}, {"p", "1"}, {"ic", "perturbed-barenblatt"}, {"amplitude", "0.1"}, {"half-width", "8"},
          {"n-points", "2049"}, {"t-end", "1"}, {"dt-max", "0.01"}, {"record-every", "10"}}},
    };
    return all;
}

inline const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw Error(ErrorKind::argument, "unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------------------------
// Initial data

/// Reads whitespace-separated (x, u) pairs and interpolates them onto `grid` (zero outside).
inline DensityField read_profile(const std::string& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    std::vector<double> xs, us;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        for (char& ch : line)
            if (ch == ',') ch = ' ';
        std::istringstream ls(line);
        double x = 0.0, u = 0.0;
        if (!(ls >> x)) continue;
        if (!(ls >> u)) throw Error(ErrorKind::io, "malformed line in '" + path + "'");
        if (!xs.empty() && !(x > xs.back())) throw Error(ErrorKind::io, "abscissae in '" + path + "' must increase");
        xs.push_back(x);
        us.push_back(u);
    }
    if (xs.size() < 2) throw Error(ErrorKind::io, "'" + path + "' holds fewer than two samples");
    return DensityField::sample(grid, [&](double y) {
        if (y < xs.front() || y > xs.back()) return 0.0;
        const auto it = std::upper_bound(xs.begin(), xs.end(), y);
        const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - xs.begin()), xs.size() - 1);
        const double w = (y - xs[j - 1]) / (xs[j] - xs[j - 1]);
        return (1.0 - w) * us[j - 1] + w * us[j];
    });
}

/// Builds unit-mass initial data. Rescaled runs additionally get second moment theta0.
inline DensityField build_initial(const ExperimentConfig& c) {
    const Grid grid = c.grid();
    const double p = c.solver.p;
    const double theta0 = c.solver.theta0;
    const bool rescaled = c.solver.equation_kind == EquationKind::rescaled;
    auto finish = [&](DensityField f) {
        if (f.values().empty() || !(integrate(f) > 0.0)) throw Error(ErrorKind::degenerate_density, "initial data has no mass");
        for (double v : f.values())
            if (v < 0.0) throw Error(ErrorKind::invalid_field, "initial data must be nonnegative");
        f = f.scaled(1.0 / integrate(f));
        if (!rescaled) return f;
        const DensityField shape = f;
        return detail::sample_with_moment(grid, theta0, [&](double y) { return interpolate(grid, shape.values(), y); });
    };
    switch (c.initial.kind) {
    case InitialKind::barenblatt: return finish(steady_profile(p, theta0, grid).first);
    case InitialKind::gaussian: return finish(gaussian_profile(theta0, grid).first);
    case InitialKind::perturbed_barenblatt: return perturbed_barenblatt(p, theta0, grid, c.initial.amplitude, c.initial.wavenumber);
    case InitialKind::self_similar: {
        if (p == 1.0) return finish(DensityField::sample(grid, [&](double x) { return source_solution(x, c.initial.t_ref, 1.0, {}); }));
        const auto spec = self_similar_spec(p, 1.0);
        detail::require_inside(grid, std::sqrt(source_second_moment(c.initial.t_ref, p, spec) * (2.0 / (p - 1.0) + 3.0)));
        return finish(DensityField::sample(grid, [&](double x) { return source_solution(x, c.initial.t_ref, p, spec); }));
    }
    case InitialKind::compact_bump:
        detail::require_inside(grid, 1.0);
        return finish(DensityField::sample(grid, [](double x) {
            const double s = 1.0 - x * x;
            return s > 0.0 ? s * s * (1.0 + 0.3 * x * x) : 0.0;
        }));
    case InitialKind::file: return finish(read_profile(c.initial.path, grid));
    }
    throw Error(ErrorKind::argument, "unhandled initial condition");
}

// ---------------------------------------------------------------------------------------------
// Serialization

/// 17 significant digits; refuses to emit NaN or infinity.
inline std::string format_real(double v) {
    if (!std::isfinite(v)) throw Error(ErrorKind::numerical_blowup, "refusing to serialize a non-finite value");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr const char* kTrajectoryHeader =
    "t,tau,mass,m1,theta,renyi_rel,nr_rel,boltz_rel,l1_attractor,energy,fisher,kfun,bound_super,bound_exp";

/// Whole table is formatted before anything is written, so a non-finite value leaves no partial output.
inline std::string trajectory_csv(const std::vector<TrajectoryRecord>& records) {
    std::string out = kTrajectoryHeader;
    out += '\n';
    for (const auto& r : records) {
        const double cols[] = {r.time,     r.tau,       r.mass,           r.first_moment,    r.second_moment,
                               r.renyi_rel, r.nr_rel,   r.boltz_rel,      r.l1_to_attractor, r.surface_energy,
                               r.fisher_gen, r.k_functional, r.bound_super, r.bound_exp};
        bool first = true;
        for (double v : cols) {
            if (!first) out += ',';
            out += format_real(v);
            first = false;
        }
        out += '\n';
    }
    return out;
}

inline std::string inequalities_csv(const std::vector<SuiteRow>& rows) {
    std::string out = "density_id,inequality_id,lhs,rhs,gap,holds\n";
    for (const auto& r : rows) {
        out += r.density_id + ',' + r.inequality_id + ',';
        if (r.verdict) {
            out += format_real(r.verdict->lhs) + ',' + format_real(r.verdict->rhs) + ',' + format_real(r.verdict->gap) + ',' +
                   (r.verdict->holds ? "true" : "false");
        } else {
            out += "0,0,0,not-applicable";
        }
        out += '\n';
    }
    return out;
}

struct BoundsRow {
    double tau, bound_super, bound_exp;
};

/// Samples both decay bounds on an equispaced tau grid and checks super <= exp row-wise.
inline std::vector<BoundsRow> bounds_table(const BoundParams& bp, double tau_max, std::size_t samples) {
    if (samples < 2) throw Error(ErrorKind::argument, "bounds need at least 2 samples");
    if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw Error(ErrorKind::argument, "tau-max must be positive");
    std::vector<BoundsRow> rows;
    rows.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const double tau = tau_max * static_cast<double>(i) / static_cast<double>(samples - 1);
        BoundsRow r{tau, super_bound(tau, bp), exp_reference(tau, bp)};
        if (r.bound_super > r.bound_exp + 1e-12)
            throw Error(ErrorKind::contract, "super bound exceeds exponential reference at tau = " + format_real(tau));
        rows.push_back(r);
    }
    return rows;
}

inline std::string bounds_csv(const std::vector<BoundsRow>& rows) {
    std::string out = "tau,bound_super,bound_exp\n";
    for (const auto& r : rows) out += format_real(r.tau) + ',' + format_real(r.bound_super) + ',' + format_real(r.bound_exp) + '\n';
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorKind::io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------------------------
// Runs

/// Records with renyi_rel above bound_super by more than this count as violations.
inline constexpr double kBoundSlack = 1e-4;

struct EvolveSummary {
    std::string name;
    double final_l1 = 0.0;
    double final_renyi_rel = 0.0;
    std::map<std::string, double> fitted_slopes; ///< only columns with enough samples in the fit window
    std::size_t bound_violations = 0;
    double max_mass_drift = 0.0;
    double max_theta_drift = 0.0;
    std::size_t steps = 0;
    std::size_t records = 0;
};

struct EvolveRun {
    EvolveResult result;
    EvolveSummary summary;
};

inline EvolveSummary summarize(const ExperimentConfig& c, const EvolveResult& res) {
    EvolveSummary s;
    s.name = c.name;
    const auto& recs = res.records;
    s.final_l1 = recs.back().l1_to_attractor;
    s.final_renyi_rel = recs.back().renyi_rel;
    s.max_mass_drift = res.max_mass_drift;
    s.max_theta_drift = res.max_theta_drift;
    s.steps = res.final_state.step_count;
    s.records = recs.size();
    for (const auto& r : recs)
        if (r.renyi_rel > r.bound_super + kBoundSlack) ++s.bound_violations;

    const double t_last = recs.back().time;
    const std::pair<double, double> window{c.fit_start.value_or(t_last / 10.0), c.fit_end.value_or(t_last)};
    std::vector<double> ts;
    for (const auto& r : recs) ts.push_back(r.time);
    auto fit = [&](const char* label, auto getter) {
        std::vector<double> vs;
        for (const auto& r : recs) vs.push_back(getter(r));
        try {
            s.fitted_slopes[label] = rate_fit(ts, vs, window);
        } catch (const Error&) {
            // too few positive samples in the window: the slope is simply not reported
        }
    };
    fit("energy", [](const TrajectoryRecord& r) { return r.surface_energy; });
    fit("max", [](const TrajectoryRecord& r) { return r.max_value; });
    fit("l1_attractor", [](const TrajectoryRecord& r) { return r.l1_to_attractor; });
    fit("renyi_rel", [](const TrajectoryRecord& r) { return r.renyi_rel; });
    return s;
}

/// Validates, builds the initial data, evolves and writes the trajectory CSV when a path is set.
inline EvolveRun run_evolve(const ExperimentConfig& c, const RecordObserver& observer = {}) {
    c.validate();
    const DensityField u0 = build_initial(c);
    EvolveRun run{evolve(u0, c.solver, c.t_end, c.record_every, observer), {}};
    const std::string csv = trajectory_csv(run.result.records);
    if (!c.csv_path.empty()) write_text(c.csv_path, csv);
    run.summary = summarize(c, run.result);
    return run;
}

struct RescalingComparisonRow {
    double t, s, tau, l1_nonlocal, l1_classical, renyi_rel;
};

/// Evolves the original thin film and, at every record, measures the distance of the
/// second-moment-preserving rescaling to its Barenblatt profile and of the classical
/// similarity rescaling w(x, s) = e^s u(e^s x, t), t = (e^{5s} - 1)/5, to (1/24)(C - x^2)_+^2.
inline std::vector<RescalingComparisonRow> compare_rescalings(ExperimentConfig c) {
    if (c.solver.p != 1.5) throw Error(ErrorKind::argument, "rescaling comparison is defined for the thin film, p = 3/2");
    c.solver.equation_kind = EquationKind::original;
    c.csv_path.clear();
    const Grid grid = c.grid();
    const auto classical = smyth_hill_spec(1.0);
    const DensityField target = DensityField::sample(grid, [&](double x) { return self_similar_tf(x, 1.0, classical); });
    std::vector<RescalingComparisonRow> rows;
    double theta_init = 0.0;
    BarenblattSpec spec{};
    const RecordObserver obs = [&](const TrajectoryRecord& r, const SolverState& st) {
        if (rows.empty()) {
            theta_init = r.second_moment;
            spec = barenblatt_spec(1.5, theta_init);
        }
        const DensityField v = forward_map(st.field, std::max(r.second_moment, theta_init), theta_init);
        const DensityField b = moment_matched_attractor(v, spec);
        const double s = std::log1p(5.0 * r.time) / 5.0;
        const DensityField w = classical_rescale([&](double) { return st.field; }, s);
        rows.push_back({r.time, s, r.tau, l1_distance(v, b), l1_distance(w, target), r.renyi_rel});
    };
    (void)run_evolve(c, obs);
    return rows;
}

inline std::string comparison_csv(const std::vector<RescalingComparisonRow>& rows) {
    std::string out = "t,s,tau,l1_nonlocal,l1_classical,renyi_rel\n";
    for (const auto& r : rows) {
        out += format_real(r.t) + ',' + format_real(r.s) + ',' + format_real(r.tau) + ',' + format_real(r.l1_nonlocal) + ',' +
               format_real(r.l1_classical) + ',' + format_real(r.renyi_rel) + '\n';
    }
    return out;
}

struct SteadyReport {
    BarenblattSpec spec;
    DensityField profile;
    double mass, theta, sigma_residual, steady_residual, rescaled_rhs_max;
};

/// Steady profile of order p with its quadrature diagnostics.
inline SteadyReport steady_report(double p, double theta0, const Grid& grid) {
    auto [b, spec] = steady_profile(p, theta0, grid);
    SolverConfig cfg;
    cfg.equation_kind = EquationKind::rescaled;
    cfg.p = p;
    cfg.theta0 = theta0;
    double rhs = 0.0;
    const DensityField bn = b.scaled(1.0 / integrate(b));
    for (double v : spatial_operator(bn, cfg)) rhs = std::max(rhs, std::abs(v));
    return {spec, b, integrate(b), moment(b, 2), sigma_fixed_point_residual(b, spec), steady_residual(b, spec), rhs};
}

inline std::string profile_csv(const DensityField& f) {
    std::string out = "y,value\n";
    for (std::size_t i = 0; i < f.size(); ++i) out += format_real(f.grid().node(i)) + ',' + format_real(f[i]) + '\n';
    return out;
}

} // namespace entroflow
