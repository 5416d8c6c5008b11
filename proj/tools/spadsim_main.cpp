// Experiment runner: loads a config describing detector, controller, source
// and experiment; executes runs or sweeps; writes CSV results, run manifests
// and (optionally) FSM traces. Exit codes: 0 success, 1 runtime fault,
// 2 parse error, 3 validation error, 4 calibration non-convergence.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spadsim/analysis.hpp"
#include "spadsim/calibrate.hpp"
#include "spadsim/config.hpp"
#include "spadsim/errors.hpp"
#include "spadsim/event_engine.hpp"
#include "spadsim/version.hpp"

namespace {

namespace fs = std::filesystem;
using namespace spadsim;

constexpr int kExitRuntime = 1;
constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitCalibration = 4;

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << contents;
}

struct RunArtifacts {
    std::vector<std::string> files;
};

void write_manifest(const fs::path& dir, const ExperimentConfig& config,
                    const std::string& digest, double wall_seconds,
                    const RunArtifacts& artifacts) {
    std::string m;
    m += "version=" + std::string(kVersion) + "\n";
    m += "config_digest=" + digest + "\n";
    m += "seed=" + std::to_string(config.seed) + "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", config.duration_s);
    m += "duration_s=" + std::string(buf) + "\n";
    std::snprintf(buf, sizeof(buf), "%.3f", wall_seconds);
    m += "wall_time_s=" + std::string(buf) + "\n";
    for (const std::string& f : artifacts.files) m += "output=" + f + "\n";
    write_file(dir / "run_manifest.txt", m);
}

int do_run(const std::string& config_path, std::optional<std::uint64_t> seed,
           std::optional<std::string> out_dir, bool dry_run, bool trace_fsm) {
    ExperimentConfig config;
    try {
        config = load_config(config_path);
    } catch (const ConfigError& e) {
        // Distinguish file/JSON syntax problems from schema/validation ones.
        const std::string what = e.what();
        std::cerr << what << "\n";
        return (what.find("parse error") != std::string::npos ||
                what.find("cannot open") != std::string::npos)
                   ? kExitParse
                   : kExitValidation;
    }
    if (seed) config.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;

    const std::string digest = config_digest(config);
    if (dry_run) {
        std::cout << config_to_json(config);
        std::cout << "config_digest=" << digest << "\n";
        return 0;
    }

    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(config.out_dir);
    RunArtifacts artifacts;

    if (config.experiment == ExperimentKind::single_run) {
        EngineOptions options;
        options.traps_enabled = config.traps_enabled;
        std::ofstream trace_out;
        if (trace_fsm) {
            const fs::path trace_path = fs::path(config.out_dir) / "fsm_trace.csv";
            trace_out.open(trace_path, std::ios::binary);
            trace_out << "t,phase_from,phase_to,event,actions\n";
            options.trace = [&trace_out](const TransitionRecord& tr) {
                trace_out << format_seconds(tr.t) << ',' << to_string(tr.from)
                          << ',' << to_string(tr.to) << ',' << to_string(tr.event)
                          << ",\"" << tr.actions << "\"\n";
            };
            artifacts.files.push_back("fsm_trace.csv");
        }
        EventLog log = run(config.source, config.detector, config.quench,
                           make_clock(config.duration_s, config.seed), options);
        log.meta.config_digest = digest;
        write_file(fs::path(config.out_dir) / "events.csv", event_log_csv(log));
        write_file(fs::path(config.out_dir) / "events.meta", event_log_meta(log));
        artifacts.files.push_back("events.csv");
        artifacts.files.push_back("events.meta");
    } else {
        SweepConditions conditions;
        conditions.detector = config.detector;
        conditions.quench = config.quench;
        conditions.source = config.source;
        conditions.duration_s = config.duration_s;
        conditions.seed = config.seed;
        conditions.traps_enabled = config.traps_enabled;

        SweepResult sweep;
        std::string name;
        if (config.experiment == ExperimentKind::sweep_dead_time) {
            sweep = sweep_dead_time(conditions, config.sweep_points);
            name = "sweep_dead_time_" + digest + ".csv";
        } else {
            sweep = sweep_bias(conditions, config.sweep_points);
            name = "sweep_bias_" + digest + ".csv";
        }
        std::string csv = sweep_csv(sweep);
        csv += "# config_digest=" + digest + "\n";
        write_file(fs::path(config.out_dir) / name, csv);
        artifacts.files.push_back(name);
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    write_manifest(config.out_dir, config, digest, wall, artifacts);
    return 0;
}

int do_calibrate(const std::string& targets_path, const std::string& config_path,
                 std::optional<std::uint64_t> seed,
                 std::optional<std::string> out_dir) {
    ExperimentConfig config;
    CalibrationSpec spec;
    try {
        config = load_config(config_path);
        spec = load_calibration_spec(targets_path);
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        std::cerr << what << "\n";
        return (what.find("parse error") != std::string::npos ||
                what.find("cannot open") != std::string::npos)
                   ? kExitParse
                   : kExitValidation;
    }
    if (seed) config.seed = *seed;
    if (out_dir) config.out_dir = *out_dir;

    const CalibrationResult result = calibrate(spec, config);
    fs::create_directories(config.out_dir);
    write_file(fs::path(config.out_dir) / "calibrated_detector.json",
               calibration_params_json(result.params));
    const std::string report = calibration_report(spec, result);
    write_file(fs::path(config.out_dir) / "calibration_report.txt", report);
    std::cout << report;
    return result.converged ? 0 : kExitCalibration;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spadsim: actively quenched single-photon APD simulator"};
    app.set_version_flag("--version", kVersion);

    std::string config_path;
    std::string targets_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool dry_run = false;
    bool trace_fsm = false;

    CLI::App* run_cmd = app.add_subcommand("run", "execute an experiment config");
    run_cmd->add_option("config", config_path, "experiment config (JSON)")
        ->required();
    run_cmd->add_option("--seed", seed, "override the config seed");
    run_cmd->add_option("--out", out_dir, "override the output directory");
    run_cmd->add_flag("--dry-run", dry_run,
                      "validate, print the resolved config, write nothing");
    run_cmd->add_flag("--trace-fsm", trace_fsm,
                      "export the controller transition trace (single_run)");

    CLI::App* cal_cmd =
        app.add_subcommand("calibrate", "fit detector parameters to targets");
    cal_cmd->add_option("targets", targets_path, "calibration targets (JSON)")
        ->required();
    cal_cmd->add_option("config", config_path, "experiment config (JSON)")
        ->required();
    cal_cmd->add_option("--seed", seed, "override the config seed");
    cal_cmd->add_option("--out", out_dir, "override the output directory");

    app.require_subcommand(1);
    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return do_run(config_path, seed, out_dir, dry_run, trace_fsm);
        return do_calibrate(targets_path, config_path, seed, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "runtime fault: " << e.what() << "\n";
        return kExitRuntime;
    }
}
