// Command-line front end: runs the detection pipeline on report files,
// reproduces the intersection experiments, and drives the broker simulator.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sltrust/broker.hpp"
#include "sltrust/misbehavior.hpp"
#include "sltrust/scenarios.hpp"
#include "sltrust/serialize.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitMisbehavior = 10;

using sltrust::json;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw sltrust::ConfigError("cannot open '" + path + "'");
    }
    json j;
    in >> j;
    return j;
}

struct ManifestWriter {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
    std::vector<std::string> artifacts;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write() const {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
        const json manifest{{"command", command},
                            {"config", config_path},
                            {"seed", seed},
                            {"out_dir", out_dir.string()},
                            {"tool_version", kVersion},
                            {"duration_ms", elapsed},
                            {"artifacts", artifacts}};
        sltrust::atomic_write(out_dir / "manifest.json", manifest.dump(2) + "\n");
    }
};

std::vector<double> theta_grid(double lo, double hi, double step) {
    if (step <= 0.0 || hi < lo) {
        throw sltrust::ConfigError("invalid theta range");
    }
    std::vector<double> grid;
    for (double t = lo; t <= hi + 1e-12; t += step) {
        grid.push_back(t);
    }
    return grid;
}

int cmd_detect(const std::string& reports_path, const std::string& trust_path, double theta,
               bool revise, const std::string& out_path) {
    const auto reports = sltrust::reports_from_json(load_json_file(reports_path));
    sltrust::TrustStore store;
    sltrust::DetectOptions opts;
    if (!trust_path.empty()) {
        std::ifstream in(trust_path);
        if (!in) {
            throw sltrust::ConfigError("cannot open '" + trust_path + "'");
        }
        store = sltrust::trust_store_from_jsonl(in);
        opts.trust = &store;
        opts.use_store_reliability = true;
        opts.revise = revise;
    }
    const auto result = sltrust::detect(reports, theta, opts, &store);
    const std::string payload = sltrust::to_json(result).dump(2) + "\n";
    std::cout << payload;
    if (!out_path.empty()) {
        sltrust::atomic_write(out_path, payload);
    }
    return result.misbehaving.empty() ? kExitOk : kExitMisbehavior;
}

int cmd_intersection(int scenario, double theta, unsigned runs, std::uint64_t seed,
                     const std::string& out_dir) {
    ManifestWriter manifest{"intersection", "", seed, out_dir};
    std::filesystem::create_directories(out_dir);
    const auto rates = sltrust::run_intersection(scenario, theta, runs, seed);
    std::ostringstream csv;
    if (scenario == 1) {
        csv << "theta,p_all_honest\n" << theta << ',' << rates.all_honest_correct << "\n";
    } else if (scenario == 2) {
        csv << "theta,tp,fp\n" << theta << ',' << rates.tp << ',' << rates.fp << "\n";
    } else {
        csv << "theta,p_detected,p_at_least_one,p_wrong_accusation\n"
            << theta << ',' << rates.detected << ',' << rates.at_least_one << ','
            << rates.wrong_accusation << "\n";
    }
    sltrust::atomic_write(std::filesystem::path(out_dir) / "intersection.csv", csv.str());
    manifest.artifacts.push_back("intersection.csv");
    manifest.write();
    return kExitOk;
}

int cmd_sweep(double lo, double hi, double step, unsigned runs, std::uint64_t seed,
              const std::string& out_dir, const std::string& format) {
    ManifestWriter manifest{"sweep", "", seed, out_dir};
    std::filesystem::create_directories(out_dir);
    const auto grid = theta_grid(lo, hi, step);
    const auto result = sltrust::threshold_sweep(grid, runs, seed);
    if (format == "json") {
        json rows = json::array();
        for (const auto& row : result.rows) {
            rows.push_back(json{{"theta", row.theta},
                                {"p_detected", row.p_detected},
                                {"p_at_least_one", row.p_at_least_one},
                                {"p_wrong_accusation", row.p_wrong_accusation},
                                {"p_all_honest", row.p_all_honest}});
        }
        sltrust::atomic_write(std::filesystem::path(out_dir) / "sweep.json",
                              json{{"runs", result.runs}, {"seed", result.seed}, {"rows", rows}}
                                      .dump(2) +
                                  "\n");
        manifest.artifacts.push_back("sweep.json");
    } else {
        sltrust::atomic_write(std::filesystem::path(out_dir) / "sweep.csv",
                              sltrust::sweep_to_csv(result));
        manifest.artifacts.push_back("sweep.csv");
    }
    manifest.write();
    return kExitOk;
}

int cmd_roc(double lo, double hi, double step, unsigned runs, std::uint64_t seed,
            const std::string& out_dir, const std::string& faults_arg) {
    ManifestWriter manifest{"roc", "", seed, out_dir};
    std::filesystem::create_directories(out_dir);
    std::vector<std::pair<double, double>> faults;
    if (faults_arg.empty()) {
        faults = {{0.7, 0.75}, {0.8, 0.75}, {0.9, 0.75}, {1.0, 0.75}};
    } else {
        std::stringstream ss(faults_arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                throw sltrust::ConfigError("fault entries look like mu:sigma");
            }
            faults.emplace_back(std::stod(item.substr(0, colon)),
                                std::stod(item.substr(colon + 1)));
        }
    }
    const auto grid = theta_grid(lo, hi, step);
    const auto result = sltrust::roc_sweep(faults, grid, runs, seed);
    sltrust::atomic_write(std::filesystem::path(out_dir) / "roc.csv",
                          sltrust::roc_to_csv(result));
    manifest.artifacts.push_back("roc.csv");
    manifest.write();
    return kExitOk;
}

int cmd_scale(unsigned reports_per_cell, std::uint64_t seed, const std::string& out_dir) {
    ManifestWriter manifest{"scale", "", seed, out_dir};
    std::filesystem::create_directories(out_dir);
    const std::vector<double> error_rates{0.0, 0.05, 0.10, 0.15, 0.20};
    const std::vector<double> thetas{0.05, 0.10, 0.15, 0.20, 0.25, 0.30};
    const auto result = sltrust::large_scale_synthetic(sltrust::LargeScaleConfig{}, error_rates,
                                                       thetas, reports_per_cell, seed);
    sltrust::atomic_write(std::filesystem::path(out_dir) / "scale.csv",
                          sltrust::scale_to_csv(result));
    manifest.artifacts.push_back("scale.csv");
    manifest.write();
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::int64_t seed_override) {
    auto cfg = sltrust::sim_config_from_json(load_json_file(config_path));
    if (seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed_override);
    }
    ManifestWriter manifest{"simulate", config_path, cfg.seed, out_dir};
    std::filesystem::create_directories(out_dir);
    const auto trace = sltrust::run_cycles(cfg);
    sltrust::atomic_write(std::filesystem::path(out_dir) / "trace.jsonl",
                          sltrust::trace_to_jsonl(trace));
    sltrust::atomic_write(std::filesystem::path(out_dir) / "trust.jsonl",
                          sltrust::trust_store_to_jsonl(trace.final_trust));
    manifest.artifacts = {"trace.jsonl", "trust.jsonl"};
    manifest.write();
    return kExitOk;
}

int cmd_replay(int scenario, double theta, std::uint64_t seed, unsigned run_index,
               const std::string& out_path) {
    const auto replay = sltrust::replay_intersection(scenario, theta, seed, run_index);
    const std::string payload = sltrust::to_json(replay).dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << payload;
    } else {
        sltrust::atomic_write(out_path, payload);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subjective-logic trust management and misbehavior detection toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // detect
    std::string reports_path;
    std::string trust_path;
    std::string detect_out;
    double detect_theta = 0.15;
    bool detect_revise = false;
    auto* detect_cmd = app.add_subcommand("detect", "Classify a report file");
    detect_cmd->add_option("--reports", reports_path, "Report JSON file")->required();
    detect_cmd->add_option("--trust", trust_path, "Trust store JSONL file");
    detect_cmd->add_option("--theta", detect_theta, "Conflict threshold");
    detect_cmd->add_flag("--revise", detect_revise, "Apply trust revision to the store");
    detect_cmd->add_option("--out", detect_out, "Also write the verdict JSON here");

    // shared experiment flags
    int scenario = 3;
    double theta = 0.15;
    double theta_min = 0.10;
    double theta_max = 0.30;
    double theta_step = 0.01;
    unsigned runs = 1000;
    std::uint64_t seed = 42;
    unsigned run_index = 0;
    std::string out_dir = "out";
    std::string out_file;
    std::string format = "csv";
    std::string faults_arg;
    unsigned reports_per_cell = 10000;

    auto* inter_cmd = app.add_subcommand("intersection", "Run one intersection scenario");
    inter_cmd->add_option("--scenario", scenario, "1, 2 or 3")->check(CLI::Range(1, 3));
    inter_cmd->add_option("--theta", theta, "Conflict threshold");
    inter_cmd->add_option("--runs", runs, "Monte-Carlo runs")->check(CLI::PositiveNumber);
    inter_cmd->add_option("--seed", seed, "Master seed");
    inter_cmd->add_option("--out", out_dir, "Output directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "Threshold sweep (scenarios 1 and 3)");
    sweep_cmd->add_option("--theta-min", theta_min, "Grid start");
    sweep_cmd->add_option("--theta-max", theta_max, "Grid end");
    sweep_cmd->add_option("--theta-step", theta_step, "Grid step");
    sweep_cmd->add_option("--runs", runs, "Monte-Carlo runs")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", seed, "Master seed");
    sweep_cmd->add_option("--out", out_dir, "Output directory");
    sweep_cmd->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* roc_cmd = app.add_subcommand("roc", "ROC sweep for the faulty-RSU scenario");
    roc_cmd->add_option("--theta-min", theta_min, "Grid start");
    roc_cmd->add_option("--theta-max", theta_max, "Grid end");
    roc_cmd->add_option("--theta-step", theta_step, "Grid step");
    roc_cmd->add_option("--runs", runs, "Monte-Carlo runs per fault")->check(CLI::PositiveNumber);
    roc_cmd->add_option("--seed", seed, "Master seed");
    roc_cmd->add_option("--out", out_dir, "Output directory");
    roc_cmd->add_option("--faults", faults_arg, "Comma list of mu:sigma fault estimates");

    auto* scale_cmd = app.add_subcommand("scale", "Synthetic large-scale grid");
    scale_cmd->add_option("--reports-per-cell", reports_per_cell, "Agent reports per grid cell")
        ->check(CLI::PositiveNumber);
    scale_cmd->add_option("--seed", seed, "Master seed");
    scale_cmd->add_option("--out", out_dir, "Output directory");

    std::string config_path;
    std::int64_t seed_override = -1;
    auto* sim_cmd = app.add_subcommand("simulate", "Run the broker simulation from a config");
    sim_cmd->add_option("--config", config_path, "Scenario config JSON")->required();
    sim_cmd->add_option("--out", out_dir, "Output directory");
    sim_cmd->add_option("--seed", seed_override, "Override the config seed");

    auto* replay_cmd = app.add_subcommand("replay", "Emit the JSON trace of a single run");
    replay_cmd->add_option("--scenario", scenario, "1, 2 or 3")->check(CLI::Range(1, 3));
    replay_cmd->add_option("--theta", theta, "Conflict threshold");
    replay_cmd->add_option("--seed", seed, "Master seed");
    replay_cmd->add_option("--run-index", run_index, "Run index within the seed");
    replay_cmd->add_option("--out", out_file, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion" ? kExitOk
                                                                                 : kExitUsage;
    }

    try {
        if (detect_cmd->parsed()) {
            return cmd_detect(reports_path, trust_path, detect_theta, detect_revise, detect_out);
        }
        if (inter_cmd->parsed()) {
            return cmd_intersection(scenario, theta, runs, seed, out_dir);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(theta_min, theta_max, theta_step, runs, seed, out_dir, format);
        }
        if (roc_cmd->parsed()) {
            return cmd_roc(theta_min, theta_max, theta_step, runs, seed, out_dir, faults_arg);
        }
        if (scale_cmd->parsed()) {
            return cmd_scale(reports_per_cell, seed, out_dir);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(config_path, out_dir, seed_override);
        }
        if (replay_cmd->parsed()) {
            return cmd_replay(scenario, theta, seed, run_index, out_file);
        }
    } catch (const sltrust::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "error: JSON: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
