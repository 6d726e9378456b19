#include "entroflow/experiment.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace entroflow;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::size_t count(const std::string& s, char c) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), c)); }

ExperimentConfig small_steady() {
    ExperimentConfig c;
    apply_settings(c, find_preset("rescaled-steady").settings);
    c.n_points = 257;
    c.t_end = 0.05;
    return c;
}

} // namespace

TEST_CASE("set_option parses every key and rejects bad input", "[experiment]") {
    ExperimentConfig c;
    set_option(c, "p", "1.25");
    set_option(c, "kind", "rescaled");
    set_option(c, "n-points", "513");
    set_option(c, "mobility", "harmonic");
    set_option(c, "ic", "perturbed-barenblatt");
    set_option(c, "fit-start", "2");
    CHECK(c.solver.p == 1.25);
    CHECK(c.solver.equation_kind == EquationKind::rescaled);
    CHECK(c.n_points == 513);
    CHECK(c.solver.mobility_scheme == MobilityScheme::harmonic);
    CHECK(c.initial.kind == InitialKind::perturbed_barenblatt);
    CHECK(c.fit_start == 2.0);
    CHECK_THROWS_AS(set_option(c, "p", "abc"), Error);
    CHECK_THROWS_AS(set_option(c, "p", "1.5x"), Error);
    CHECK_THROWS_AS(set_option(c, "p", "nan"), Error);
    CHECK_THROWS_AS(set_option(c, "n-points", "-3"), Error);
    CHECK_THROWS_AS(set_option(c, "kind", "sideways"), Error);
    CHECK_THROWS_AS(set_option(c, "ic", "triangle"), Error);
    CHECK_THROWS_AS(set_option(c, "bogus", "1"), Error);
    for (const auto& key : option_keys()) {
        ExperimentConfig d;
        // every advertised key is accepted by set_option with some value
        const std::string value = key == "kind" ? "original" : key == "mobility" ? "arithmetic" : key == "ic" ? "gaussian" : "1";
        CHECK_NOTHROW(set_option(d, key, value));
    }
}

TEST_CASE("order outside the admissible range names the interval", "[experiment]") {
    ExperimentConfig c;
    set_option(c, "p", "2");
    try {
        c.validate();
        FAIL("expected an argument error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::argument);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("[1, 3/2]"));
    }
}

TEST_CASE("presets are complete and valid", "[experiment]") {
    for (const char* name : {"thinfilm-selfsim", "thinfilm-compact", "rescaled-perturbed", "rescaled-steady", "dlss-perturbed"}) {
        ExperimentConfig c;
        apply_settings(c, find_preset(name).settings);
        INFO(name);
        CHECK_NOTHROW(c.validate());
        const auto u0 = build_initial(c);
        CHECK_THAT(integrate(u0), WithinAbs(1.0, 1e-12));
        if (c.solver.equation_kind == EquationKind::rescaled) CHECK_THAT(moment(u0, 2), WithinAbs(c.solver.theta0, 1e-12));
    }
    CHECK_THROWS_AS(find_preset("nope"), Error);
}

TEST_CASE("format_real", "[experiment]") {
    CHECK(format_real(0.1) == "0.10000000000000001");
    CHECK(format_real(1.0) == "1");
    CHECK(std::stod(format_real(std::numbers::pi)) == std::numbers::pi);
    CHECK_THROWS_AS(format_real(std::numeric_limits<double>::quiet_NaN()), Error);
    CHECK_THROWS_AS(format_real(std::numeric_limits<double>::infinity()), Error);
}

TEST_CASE("trajectory CSV layout", "[experiment]") {
    const auto run = run_evolve(small_steady());
    const auto lines = lines_of(trajectory_csv(run.result.records));
    REQUIRE(lines.size() == run.result.records.size() + 1);
    CHECK(lines[0] == "t,tau,mass,m1,theta,renyi_rel,nr_rel,boltz_rel,l1_attractor,energy,fisher,kfun,bound_super,bound_exp");
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(count(lines[i], ',') == 13);
    CHECK(lines[1].rfind("0,0,1", 0) == 0);
}

TEST_CASE("trajectory CSV refuses non-finite values", "[experiment]") {
    std::vector<TrajectoryRecord> rs(2);
    rs[1].fisher_gen = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(trajectory_csv(rs), Error);
}

TEST_CASE("runs are deterministic", "[experiment]") {
    const auto a = run_evolve(small_steady());
    const auto b = run_evolve(small_steady());
    CHECK(trajectory_csv(a.result.records) == trajectory_csv(b.result.records));
}

TEST_CASE("evolve summary", "[experiment]") {
    const auto run = run_evolve(small_steady());
    CHECK(run.summary.name == "custom");
    CHECK(run.summary.bound_violations == 0);
    CHECK(run.summary.records == run.result.records.size());
    CHECK(run.summary.max_mass_drift <= 1e-10);
    CHECK(run.summary.final_renyi_rel <= 1e-5);
}

TEST_CASE("bounds table", "[experiment]") {
    const auto rows = bounds_table({0.5, 1.5, 1.0}, 1.0, 11);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0].tau == 0.0);
    CHECK(rows[10].tau == 1.0);
    CHECK(rows[0].bound_super == 0.5);
    for (const auto& r : rows) CHECK(r.bound_super <= r.bound_exp + 1e-12);
    const auto lines = lines_of(bounds_csv(rows));
    CHECK(lines[0] == "tau,bound_super,bound_exp");
    CHECK(lines.size() == 12);
    CHECK_THROWS_AS(bounds_table({0.5, 1.5, 1.0}, 1.0, 1), Error);
    CHECK_THROWS_AS(bounds_table({0.5, 1.5, 1.0}, -1.0, 5), Error);
}

TEST_CASE("inequalities CSV", "[experiment]") {
    const auto rows = run_inequality_suite(1.0, 1.0, Grid(8.0, 1025));
    const auto lines = lines_of(inequalities_csv(rows));
    CHECK(lines[0] == "density_id,inequality_id,lhs,rhs,gap,holds");
    CHECK(lines.size() == rows.size() + 1);
    std::size_t skipped = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        CHECK(count(lines[i], ',') == 5);
        if (lines[i].ends_with("not-applicable")) ++skipped;
    }
    CHECK(skipped == 12);
}

TEST_CASE("initial data from a file", "[experiment]") {
    const auto path = std::filesystem::temp_directory_path() / "entroflow_profile_test.txt";
    {
        std::ofstream out(path);
        out << "# x u\n";
        for (int i = -40; i <= 40; ++i) {
            const double x = i / 10.0;
            out << x << ", " << std::exp(-x * x) << '\n';
        }
    }
    ExperimentConfig c;
    set_option(c, "ic", "file");
    set_option(c, "ic-path", path.string());
    set_option(c, "kind", "rescaled");
    set_option(c, "p", "1");
    set_option(c, "half-width", "8");
    const auto u0 = build_initial(c);
    CHECK_THAT(integrate(u0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(moment(u0, 2), WithinAbs(1.0, 1e-12));
    std::filesystem::remove(path);
    try {
        (void)build_initial(c);
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
    ExperimentConfig d;
    set_option(d, "ic", "file");
    CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("rescaling comparison", "[experiment]") {
    ExperimentConfig c;
    apply_settings(c, find_preset("thinfilm-selfsim").settings);
    c.t_end = 0.2;
    const auto rows = compare_rescalings(c);
    REQUIRE(rows.size() >= 2);
    for (const auto& r : rows) CHECK(r.l1_nonlocal <= 1e-3);
    CHECK(rows.back().l1_classical < rows.front().l1_classical);
    CHECK(lines_of(comparison_csv(rows))[0] == "t,s,tau,l1_nonlocal,l1_classical,renyi_rel");
}

TEST_CASE("steady report", "[experiment]") {
    const auto rep = steady_report(1.5, 1.0, Grid(4.0, 1025));
    CHECK_THAT(rep.mass, WithinAbs(1.0, 1e-5));
    CHECK(rep.sigma_residual <= 1e-6 * rep.spec.sigma);
    CHECK(lines_of(profile_csv(rep.profile)).size() == 1026);
}
