// Command-line front end: evolve, steady, bounds, inequalities, compare-rescalings, sweep.

#include "entroflow/experiment.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using entroflow::Error;
using entroflow::ErrorKind;
using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

int exit_code_for(ErrorKind k) {
    switch (k) {
    case ErrorKind::numerical_blowup:
    case ErrorKind::step_failure:
    case ErrorKind::io: return kExitRuntime;
    default: return kExitValidation;
    }
}

json error_json(ErrorKind kind, const std::string& message) {
    return json{{"status", "error"}, {"kind", entroflow::to_string(kind)}, {"message", message}};
}

json summary_json(const entroflow::EvolveSummary& s) {
    json slopes = json::object();
    for (const auto& [k, v] : s.fitted_slopes) slopes[k] = v;
    return json{{"status", "ok"},
                {"name", s.name},
                {"final_l1", s.final_l1},
                {"final_renyi_rel", s.final_renyi_rel},
                {"fitted_slopes", slopes},
                {"bound_violations", s.bound_violations},
                {"max_mass_drift", s.max_mass_drift},
                {"max_theta_drift", s.max_theta_drift},
                {"steps", s.steps},
                {"records", s.records}};
}

void write_json(const std::string& path, const json& j) { entroflow::write_text(path, j.dump(2) + "\n"); }

/// Experiment options layered as preset < config file < explicit flags.
struct ExperimentOptions {
    std::string preset;
    std::string config_path;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> handles;

    void attach(CLI::App* app) {
        app->add_option("--preset", preset, "embedded preset name (see `entroflow presets`)");
        app->add_option("--config", config_path, "flat key = value file; keys are the flag names")->check(CLI::ExistingFile);
        for (const auto& key : entroflow::option_keys()) handles[key] = app->add_option("--" + key, flags[key]);
    }

    entroflow::Settings settings() const {
        entroflow::Settings out;
        std::string preset_name = preset;
        entroflow::Settings file_items;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw Error(ErrorKind::io, "cannot open '" + config_path + "'");
            for (const auto& item : CLI::ConfigTOML().from_config(in)) {
                if (item.inputs.empty()) continue;
                std::string value = item.inputs.front();
                for (std::size_t i = 1; i < item.inputs.size(); ++i) value += "," + item.inputs[i];
                if (item.name == "preset") {
                    if (preset.empty()) preset_name = value;
                } else {
                    file_items.emplace_back(item.name, value);
                }
            }
        }
        if (!preset_name.empty()) out = entroflow::find_preset(preset_name).settings;
        if (!preset_name.empty()) out.emplace_back("name", preset_name);
        out.insert(out.end(), file_items.begin(), file_items.end());
        for (const auto& key : entroflow::option_keys()) {
            if (handles.at(key)->count() > 0) out.emplace_back(key, flags.at(key));
        }
        return out;
    }

    entroflow::ExperimentConfig build() const {
        entroflow::ExperimentConfig c;
        entroflow::apply_settings(c, settings());
        c.validate();
        return c;
    }
};

std::size_t worker_cap(std::size_t jobs) {
    std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ENTROFLOW_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) cap = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            throw Error(ErrorKind::argument, "ENTROFLOW_THREADS must be a positive integer");
        }
    }
    return std::max<std::size_t>(1, std::min(cap, jobs));
}

int cmd_evolve(const ExperimentOptions& opts) {
    entroflow::ExperimentConfig c;
    try {
        c = opts.build();
        const auto run = entroflow::run_evolve(c);
        const json s = summary_json(run.summary);
        if (!c.json_path.empty()) write_json(c.json_path, s);
        if (c.csv_path.empty()) std::cout << entroflow::trajectory_csv(run.result.records);
        else std::cout << s.dump(2) << "\n";
        return kExitOk;
    } catch (const Error& e) {
        const json j = error_json(e.kind(), e.what());
        if (!c.json_path.empty()) {
            try {
                write_json(c.json_path, j);
            } catch (const Error&) {
            }
        }
        std::cerr << j.dump(2) << "\n";
        return exit_code_for(e.kind());
    }
}

struct SweepOptions {
    std::string param;
    std::vector<std::string> values;
    std::string out_dir = ".";
};

int cmd_sweep(const ExperimentOptions& opts, const SweepOptions& sw) {
    const auto& keys = entroflow::option_keys();
    if (std::find(keys.begin(), keys.end(), sw.param) == keys.end())
        throw Error(ErrorKind::argument, "unknown sweep parameter '" + sw.param + "'");
    if (sw.values.empty()) throw Error(ErrorKind::argument, "sweep needs at least one value");
    std::filesystem::create_directories(sw.out_dir);

    // Build every config up front so validation failures surface before any run starts.
    std::vector<entroflow::ExperimentConfig> configs;
    for (const auto& v : sw.values) {
        auto settings = opts.settings();
        settings.emplace_back(sw.param, v);
        entroflow::ExperimentConfig c;
        entroflow::apply_settings(c, settings);
        const std::string stem = c.name + "-" + sw.param + "-" + v;
        c.csv_path = (std::filesystem::path(sw.out_dir) / (stem + ".csv")).string();
        c.json_path = (std::filesystem::path(sw.out_dir) / (stem + ".json")).string();
        c.validate();
        configs.push_back(std::move(c));
    }

    std::vector<int> codes(configs.size(), kExitOk);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            const auto& c = configs[i];
            json j;
            try {
                j = summary_json(entroflow::run_evolve(c).summary);
            } catch (const Error& e) {
                j = error_json(e.kind(), e.what());
                codes[i] = exit_code_for(e.kind());
            }
            try {
                write_json(c.json_path, j);
            } catch (const Error&) {
                codes[i] = kExitRuntime;
            }
            std::lock_guard lock(log_mutex);
            std::cerr << c.csv_path << ": " << (codes[i] == kExitOk ? "ok" : "failed") << "\n";
        }
    };
    std::vector<std::jthread> pool;
    const std::size_t n = worker_cap(configs.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    pool.clear();
    return *std::max_element(codes.begin(), codes.end());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"entroflow: entropy methods for thin-film and DLSS type equations"};
    app.require_subcommand(1);

    ExperimentOptions evolve_opts, compare_opts, sweep_opts;
    auto* evolve = app.add_subcommand("evolve", "run one experiment, write trajectory CSV and JSON summary");
    evolve_opts.attach(evolve);

    double p = 1.5, theta0 = 1.0, half_width = 4.0, r0 = 0.0, tau_max = 1.0;
    std::size_t n_points = 1025, samples = 101;
    std::string csv_path;

    auto* steady = app.add_subcommand("steady", "steady profile and its residuals");
    steady->add_option("--p", p)->capture_default_str();
    steady->add_option("--theta0", theta0)->capture_default_str();
    steady->add_option("--half-width", half_width)->capture_default_str();
    steady->add_option("--n-points", n_points)->capture_default_str();
    steady->add_option("--csv", csv_path, "profile table y,value");

    auto* bounds = app.add_subcommand("bounds", "closed-form decay bounds on a tau grid");
    bounds->add_option("--r0", r0)->required();
    bounds->add_option("--p", p)->capture_default_str();
    bounds->add_option("--theta0", theta0)->capture_default_str();
    bounds->add_option("--tau-max", tau_max)->capture_default_str();
    bounds->add_option("--samples", samples)->capture_default_str();
    bounds->add_option("--csv", csv_path);

    double ineq_half_width = 8.0;
    std::size_t ineq_points = 2049;
    auto* ineq = app.add_subcommand("inequalities", "functional inequality suite on six densities");
    ineq->add_option("--p", p)->capture_default_str();
    ineq->add_option("--theta0", theta0)->capture_default_str();
    ineq->add_option("--half-width", ineq_half_width)->capture_default_str();
    ineq->add_option("--n-points", ineq_points)->capture_default_str();
    ineq->add_option("--csv", csv_path);

    auto* compare = app.add_subcommand("compare-rescalings", "nonlocal versus classical rescaling of a thin-film run");
    compare_opts.attach(compare);

    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "run one parameter over several values on a worker pool");
    sweep_opts.attach(sweep);
    sweep->add_option("--param", sw.param, "option key to vary")->required();
    sweep->add_option("--values", sw.values, "comma separated values")->required()->delimiter(',');
    sweep->add_option("--out-dir", sw.out_dir)->capture_default_str();

    auto* list = app.add_subcommand("presets", "list embedded presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (evolve->parsed()) return cmd_evolve(evolve_opts);
        if (steady->parsed()) {
            const auto rep = entroflow::steady_report(p, theta0, entroflow::Grid(half_width, n_points));
            if (!csv_path.empty()) entroflow::write_text(csv_path, entroflow::profile_csv(rep.profile));
            const json j{{"status", "ok"},          {"p", p},
                         {"theta0", theta0},        {"sigma", rep.spec.sigma},
                         {"c_p", rep.spec.c_p},     {"support_radius", std::isfinite(rep.spec.support_radius) ? json(rep.spec.support_radius) : json(nullptr)},
                         {"mass", rep.mass},        {"theta", rep.theta},
                         {"sigma_residual", rep.sigma_residual}, {"steady_residual", rep.steady_residual},
                         {"rescaled_rhs_max", rep.rescaled_rhs_max}};
            std::cout << j.dump(2) << "\n";
            return kExitOk;
        }
        if (bounds->parsed()) {
            const auto csv = entroflow::bounds_csv(entroflow::bounds_table({r0, p, theta0}, tau_max, samples));
            if (csv_path.empty()) std::cout << csv;
            else entroflow::write_text(csv_path, csv);
            return kExitOk;
        }
        if (ineq->parsed()) {
            (void)entroflow::ModelParams{p, theta0};
            const auto rows = entroflow::run_inequality_suite(p, theta0, entroflow::Grid(ineq_half_width, ineq_points));
            const auto csv = entroflow::inequalities_csv(rows);
            std::size_t failed = 0;
            for (const auto& r : rows)
                if (r.verdict && !r.verdict->holds) ++failed;
            if (csv_path.empty()) std::cout << csv;
            else entroflow::write_text(csv_path, csv);
            std::cerr << "suite v" << entroflow::kDensitySuiteVersion << ": " << rows.size() << " rows, " << failed << " violated\n";
            return kExitOk;
        }
        if (compare->parsed()) {
            auto settings = compare_opts.settings();
            entroflow::ExperimentConfig c;
            if (compare_opts.preset.empty() && compare_opts.config_path.empty())
                entroflow::apply_settings(c, entroflow::find_preset("thinfilm-selfsim").settings);
            entroflow::apply_settings(c, settings);
            const std::string out = c.csv_path;
            const auto csv = entroflow::comparison_csv(entroflow::compare_rescalings(c));
            if (out.empty()) std::cout << csv;
            else entroflow::write_text(out, csv);
            return kExitOk;
        }
        if (sweep->parsed()) return cmd_sweep(sweep_opts, sw);
        if (list->parsed()) {
            for (const auto& pr : entroflow::presets()) std::cout << pr.name << "  " << pr.summary << "\n";
            return kExitOk;
        }
    } catch (const Error& e) {
        std::cerr << error_json(e.kind(), e.what()).dump(2) << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << error_json(ErrorKind::io, e.what()).dump(2) << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}
