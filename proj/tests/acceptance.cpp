// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// An optional argument names a directory that receives the trajectory CSVs of criteria 4 and 8.
#include "entroflow/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace entroflow;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

ExperimentConfig from_preset(const char* name, const Settings& extra = {}) {
    ExperimentConfig c;
    apply_settings(c, find_preset(name).settings);
    c.name = name;
    apply_settings(c, extra);
    return c;
}

std::filesystem::path csv_dir;

void maybe_write(const std::string& stem, const EvolveRun& run) {
    if (csv_dir.empty()) return;
    write_text((csv_dir / (stem + ".csv")).string(), trajectory_csv(run.result.records));
}

Outcome steady_fixed_point() {
    double worst = 0.0;
    std::string detail;
    for (const char* p : {"1", "1.25", "1.5"}) {
        const char* width = std::string(p) == "1" ? "8" : "4";
        ExperimentConfig c = from_preset("rescaled-steady", {{"p", p}, {"half-width", width}, {"n-points", "2049"}});
        const auto run = run_evolve(c);
        const auto& st = run.result.final_state;
        const auto b = steady_profile(c.solver.p, 1.0, st.field.grid()).first;
        const double l1 = l1_distance(st.field, b);
        worst = std::max(worst, l1);
        detail += " p=" + std::string(p) + ":" + fmt("%.2e", l1);
    }
    return {worst <= 1e-4, "max L1 to B_p after tau=1" + detail};
}

double selfsim_error(std::size_t n) {
    const auto spec = self_similar_spec(1.5, 1.0);
    const double half_width = 2.0 * std::sqrt(smyth_hill_spec(1.0).c);
    const Grid g(half_width, n);
    const double h = g.spacing();
    const auto u1 = DensityField::sample(g, [&](double x) { return source_solution(x, 1.0, 1.5, spec); });
    SolverConfig cfg;
    cfg.p = 1.5;
    cfg.dt_init = cfg.dt_max = 16.0 * h * h;
    cfg.dt_min = 1e-3 * cfg.dt_init;
    const auto res = evolve(u1.scaled(1.0 / integrate(u1)), cfg, 1.0, 1000000);
    const auto exact = DensityField::sample(g, [&](double x) { return source_solution(x, 2.0, 1.5, spec); });
    return l1_distance(res.final_state.field, exact);
}

Outcome selfsim_tracking() {
    const double e1 = selfsim_error(1025), e2 = selfsim_error(2049);
    const double ratio = e1 / e2;
    const bool ok = e1 <= 5e-3 && std::abs(ratio - 4.0) <= 0.3 * 4.0;
    return {ok, "L1 at t=2: n=1025 " + fmt("%.3e", e1) + ", n=2049 " + fmt("%.3e", e2) + ", ratio " + fmt("%.3f", ratio)};
}

Outcome conservation() {
    // fixed dt = 1e-3 over tau or t in [0, 1] gives 10^3 accepted steps per configuration
    const Settings fixed{{"dt-init", "1e-3"}, {"dt-max", "1e-3"}, {"record-every", "100"}};
    std::vector<ExperimentConfig> cs;
    for (const char* p : {"1.25", "1.5"}) {
        auto c = from_preset("rescaled-perturbed", fixed);
        set_option(c, "p", p);
        set_option(c, "half-width", "5");
        cs.push_back(c);
    }
    cs.push_back(from_preset("dlss-perturbed", fixed));
    cs.push_back(from_preset("thinfilm-compact", {{"dt-init", "1e-3"}, {"dt-max", "1e-3"}, {"t-end", "1"}, {"record-every", "100"}}));
    auto dlss_original = from_preset("dlss-perturbed", fixed);
    set_option(dlss_original, "kind", "original");
    cs.push_back(dlss_original);
    double mass = 0.0, theta = 0.0;
    std::size_t min_steps = static_cast<std::size_t>(-1);
    for (const auto& c : cs) {
        const auto run = run_evolve(c);
        mass = std::max(mass, run.result.max_mass_drift);
        theta = std::max(theta, run.result.max_theta_drift);
        min_steps = std::min(min_steps, run.result.final_state.step_count);
    }
    const bool ok = mass <= 1e-10 && theta <= 1e-4 && min_steps >= 1000;
    return {ok, "max mass drift " + fmt("%.2e", mass) + ", max theta drift " + fmt("%.2e", theta) + ", fewest steps " +
                    std::to_string(min_steps)};
}

std::vector<EvolveRun> perturbed_runs;

Outcome monotone_and_bounded() {
    double worst_rise = -1.0, worst_excess = -1.0;
    std::size_t violations = 0;
    for (const char* p : {"1.25", "1.5"}) {
        auto c = from_preset("rescaled-perturbed", {{"p", p}, {"half-width", std::string(p) == "1.25" ? "5" : "4"}});
        auto run = run_evolve(c);
        const auto& rs = run.result.records;
        for (std::size_t k = 0; k < rs.size(); ++k) {
            if (k > 0) worst_rise = std::max(worst_rise, rs[k].renyi_rel - rs[k - 1].renyi_rel);
            worst_excess = std::max(worst_excess, rs[k].renyi_rel - rs[k].bound_super);
        }
        violations += run.summary.bound_violations;
        maybe_write(std::string("criterion4-p") + p, run);
        perturbed_runs.push_back(std::move(run));
    }
    const bool ok = worst_rise <= 1e-8 && worst_excess <= 1e-4 && violations == 0;
    return {ok, "largest rise per record " + fmt("%.2e", worst_rise) + ", largest R - bound " + fmt("%.2e", worst_excess)};
}

Outcome improvement() {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> r0d(1e-6, 5.0), pd(1.0, 1.5), td(0.1, 10.0);
    double margin = INFINITY;
    for (int trial = 0; trial < 20; ++trial) {
        const BoundParams bp{r0d(rng), pd(rng), td(rng)};
        for (int k = 0; k < 1000; ++k) {
            const double tau = 3.0 * bp.theta0 * k / 999.0;
            margin = std::min(margin, exp_reference(tau, bp) - super_bound(tau, bp));
        }
    }
    return {margin >= -1e-12, "smallest exp_reference - super_bound " + fmt("%.3e", margin)};
}

Outcome inequality_suite() {
    const Grid g(8.0, 2049);
    double worst_gap = INFINITY;
    std::size_t rows = 0;
    for (double p : {1.0, 1.25, 1.5}) {
        for (const auto& r : run_inequality_suite(p, 1.0, g)) {
            if (!r.verdict) continue;
            ++rows;
            worst_gap = std::min(worst_gap, r.verdict->gap);
        }
    }
    double villani = 0.0;
    for (double p : {1.0, 1.25, 1.5}) {
        const auto v = villani_check(density_suite(p, 1.0, g).front().field, p);
        villani = std::max(villani, std::abs(v.gap) / v.rhs);
    }
    const bool ok = worst_gap >= -1e-8 && villani <= 5e-3;
    return {ok, std::to_string(rows) + " rows, smallest gap " + fmt("%.3e", worst_gap) + ", Villani equality error " +
                    fmt("%.2e", villani)};
}

std::vector<EvolveRun> dlss_runs;

Outcome dissipation() {
    const double r15 = renyi_dissipation_residual(perturbed_runs.back().result.records, 1.5, 1.0);
    dlss_runs.push_back(run_evolve(from_preset("dlss-perturbed")));
    const double r1 = renyi_dissipation_residual(dlss_runs.back().result.records, 1.0, 1.0);
    return {r15 <= 0.1 && r1 <= 0.1, "residual p=1.5 " + fmt("%.4f", r15) + ", DLSS " + fmt("%.4f", r1)};
}

Outcome algebraic_rates() {
    const auto run = run_evolve(from_preset("thinfilm-compact"));
    maybe_write("criterion8", run);
    const auto& s = run.summary.fitted_slopes;
    auto get = [&](const char* k) { return s.count(k) ? s.at(k) : NAN; };
    const double e = get("energy"), m = get("max"), l = get("l1_attractor");
    const bool ok = std::abs(e + 0.6) <= 0.05 && std::abs(m + 0.2) <= 0.03 && l <= -0.15;
    return {ok, "slopes on [10,100]: energy " + fmt("%.4f", e) + ", max " + fmt("%.4f", m) + ", L1 " + fmt("%.4f", l)};
}

Outcome entropy_ratio() {
    double worst = 0.0;
    for (const auto& run : perturbed_runs) worst = std::max(worst, max_l1_entropy_ratio(run.result.records));
    for (const auto& run : dlss_runs) worst = std::max(worst, max_l1_entropy_ratio(run.result.records));
    return {worst <= 2.0, "largest L1 / sqrt(R) " + fmt("%.4f", worst)};
}

} // namespace

int main(int argc, char** argv) {
    if (argc > 1) {
        csv_dir = argv[1];
        std::filesystem::create_directories(csv_dir);
    }
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"steady-state fixed point", steady_fixed_point},
        {"self-similar tracking", selfsim_tracking},
        {"conservation", conservation},
        {"monotonicity and decay bound", monotone_and_bounded},
        {"bound improvement", improvement},
        {"inequality suite", inequality_suite},
        {"dissipation identity", dissipation},
        {"algebraic rates", algebraic_rates},
        {"L1 versus entropy", entropy_ratio},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("%s criterion %zu (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
