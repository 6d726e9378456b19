// Checks the files written by the cli_* tests and a few invocations that need output inspection.
#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path out_dir{ENTROFLOW_CLI_OUT};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

// Runs the CLI with stdout and stderr captured to files; returns the exit status.
int run_cli(const std::string& args, const std::string& tag) {
    const std::string cmd = std::string("\"") + ENTROFLOW_CLI + "\" " + args + " >\"" + (out_dir / (tag + ".out")).string() +
                            "\" 2>\"" + (out_dir / (tag + ".err")).string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

constexpr const char* kHeader = "t,tau,mass,m1,theta,renyi_rel,nr_rel,boltz_rel,l1_attractor,energy,fisher,kfun,bound_super,bound_exp";

} // namespace

TEST_CASE("bounds CSV", "[cli]") {
    const auto lines = lines_of(out_dir / "bounds.csv");
    REQUIRE(lines.size() == 12);
    CHECK(lines[0] == "tau,bound_super,bound_exp");
    CHECK(lines[1] == "0,0.5,0.5");
}

TEST_CASE("self-similar preset outputs", "[cli]") {
    const auto lines = lines_of(out_dir / "selfsim.csv");
    REQUIRE(lines.size() > 2);
    CHECK(lines[0] == kHeader);
    for (const auto& l : lines) CHECK(l.find("nan") == std::string::npos);
    const auto j = json::parse(slurp(out_dir / "selfsim.json"));
    CHECK(j.at("status") == "ok");
    CHECK(j.at("name") == "thinfilm-selfsim");
    CHECK(j.at("bound_violations") == 0);
    CHECK(j.at("records").get<std::size_t>() == lines.size() - 1);
}

TEST_CASE("steady rescaled run stays at the attractor", "[cli]") {
    const auto j = json::parse(slurp(out_dir / "steady.json"));
    CHECK(j.at("final_renyi_rel").get<double>() <= 1e-5);
    CHECK(j.at("max_mass_drift").get<double>() <= 1e-10);
    CHECK(j.at("max_theta_drift").get<double>() <= 1e-4);
}

TEST_CASE("inequality CSVs", "[cli]") {
    const auto lines = lines_of(out_dir / "ineq.csv");
    REQUIRE(lines.size() == 43);
    CHECK(lines[0] == "density_id,inequality_id,lhs,rhs,gap,holds");
    for (std::size_t i = 1; i < lines.size(); ++i) CHECK(lines[i].ends_with(",true"));
    std::size_t na = 0;
    for (const auto& l : lines_of(out_dir / "ineq_p1.csv"))
        if (l.ends_with(",not-applicable")) ++na;
    CHECK(na == 12);
}

TEST_CASE("sweep writes one CSV and JSON per value", "[cli]") {
    for (const char* v : {"1.25", "1.5"}) {
        const fs::path stem = out_dir / "sweep" / (std::string("rescaled-steady-p-") + v);
        CHECK(fs::exists(stem.string() + ".csv"));
        const auto j = json::parse(slurp(stem.string() + ".json"));
        CHECK(j.at("status") == "ok");
    }
}

TEST_CASE("invalid order reports the admissible interval", "[cli]") {
    CHECK(run_cli("evolve --p 2", "bad_p") == 2);
    CHECK(slurp(out_dir / "bad_p.err").find("[1, 3/2]") != std::string::npos);
}

TEST_CASE("config file values sit between preset and flags", "[cli]") {
    const fs::path cfg = out_dir / "layered.toml";
    {
        std::ofstream out(cfg);
        out << "# comment\npreset = \"rescaled-steady\"\nn-points = 257\nt-end = 0.5\n";
    }
    const fs::path json_path = out_dir / "layered.json";
    REQUIRE(run_cli("evolve --config \"" + cfg.string() + "\" --t-end 0.02 --csv \"" + (out_dir / "layered.csv").string() +
                        "\" --json \"" + json_path.string() + "\"",
                    "layered") == 0);
    const auto j = json::parse(slurp(json_path));
    CHECK(j.at("name") == "rescaled-steady");
    const auto lines = lines_of(out_dir / "layered.csv");
    const std::string last = lines.back();
    CHECK(last.substr(last.find(',') + 1).rfind("0.02", 0) == 0);
}

TEST_CASE("evolve without a CSV path streams the trajectory", "[cli]") {
    REQUIRE(run_cli("evolve --preset rescaled-steady --n-points 129 --half-width 4 --t-end 0.01", "stream") == 0);
    const auto lines = lines_of(out_dir / "stream.out");
    REQUIRE(lines.size() >= 2);
    CHECK(lines[0] == kHeader);
}

TEST_CASE("runtime failures exit with 1 and write an error summary", "[cli]") {
    // dt_min above every step the solver can take forces a step failure
    const fs::path json_path = out_dir / "fail.json";
    const int code = run_cli("evolve --preset rescaled-perturbed --n-points 257 --dt-init 1 --dt-min 1 --dt-max 1 "
                             "--newton-max-iters 1 --t-end 5 --csv \"" + (out_dir / "fail.csv").string() + "\" --json \"" +
                                 json_path.string() + "\"",
                             "fail");
    CHECK(code == 1);
    const auto j = json::parse(slurp(json_path));
    CHECK(j.at("status") == "error");
}

TEST_CASE("thread cap must be a positive integer", "[cli]") {
    CHECK(run_cli("presets", "presets") == 0);
    CHECK(slurp(out_dir / "presets.out").find("thinfilm-compact") != std::string::npos);
    const std::string cmd = std::string("ENTROFLOW_THREADS=abc \"") + ENTROFLOW_CLI + "\" sweep --preset rescaled-steady --n-points 129 "
                            "--t-end 0.01 --param p --values 1.5 --out-dir \"" + (out_dir / "sweep_bad").string() + "\" >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
}
