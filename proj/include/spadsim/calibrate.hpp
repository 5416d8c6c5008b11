#ifndef SPADSIM_CALIBRATE_HPP
#define SPADSIM_CALIBRATE_HPP

#include <string>
#include <vector>

#include "spadsim/config.hpp"

namespace spadsim {

/// One calibration target: an observable, the value to hit, and the
/// acceptable miss. Afterpulse targets may pin their own dead-time.
struct CalibrationTarget {
    std::string observable; // "eta_q" | "noise" | "afterpulse"
    double value = 0.0;
    double tolerance = 0.0;
    double tau_d = 0.0; // seconds; 0 = use the base config's dead-time
};

struct CalibrationSpec {
    std::vector<CalibrationTarget> targets;
    // Free parameters, by DetectorParams field name. Defaults to the full
    // calibration set.
    std::vector<std::string> search = {"eta_slope",        "dark_n0",
                                       "dark_slope",       "trap_fill_per_ns",
                                       "tau_trap_ref",     "p_trigger"};
    double eval_duration_s = 20.0; // simulated seconds per objective run
    int max_sweeps = 16;           // coordinate-descent sweeps over the set
};

struct CalibrationResult {
    DetectorParams params;
    std::vector<double> achieved;  // observable values under params
    std::vector<double> residuals; // achieved - target, per target
    bool converged = false;        // every |residual| <= tolerance
    int evaluations = 0;
    double loss = 0.0; // sum of squared relative misses
};

/// Parse a targets file (JSON): {"targets": [...], "search": [...],
/// "eval_duration": s, "max_sweeps": k}.
CalibrationSpec load_calibration_spec(const std::string& path);
CalibrationSpec parse_calibration_spec(const std::string& json_text);

/// Evaluate the target observables under the given parameters. Simulation
/// seeds are fixed per target, so the objective is deterministic in params.
std::vector<double> evaluate_observables(const std::vector<CalibrationTarget>& targets,
                                         const DetectorParams& params,
                                         const ExperimentConfig& base,
                                         double eval_duration_s);

/// Deterministic coordinate descent over the named parameters, minimizing the
/// sum of squared relative misses. An empty target list returns the input
/// unchanged and converged.
CalibrationResult calibrate(const CalibrationSpec& spec,
                            const ExperimentConfig& base);

/// Calibrated detector block as JSON (same keys as the config schema).
std::string calibration_params_json(const DetectorParams& params);

/// Human-readable residual report, one line per target.
std::string calibration_report(const CalibrationSpec& spec,
                               const CalibrationResult& result);

} // namespace spadsim

#endif
