#ifndef SPADSIM_CONFIG_HPP
#define SPADSIM_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spadsim/apd_model.hpp"
#include "spadsim/photon_source.hpp"
#include "spadsim/quench_fsm.hpp"

namespace spadsim {

enum class ExperimentKind { single_run, sweep_dead_time, sweep_bias };

/// Full experiment description as loaded from a config file. The schema is
/// strict: any unknown key fails validation with the offending key named, so
/// typos cannot silently fall back to defaults.
struct ExperimentConfig {
    DetectorParams detector;
    QuenchConfig quench;
    PhotonStream source;
    ExperimentKind experiment = ExperimentKind::single_run;
    std::vector<double> sweep_points;
    double duration_s = 1.0;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool traps_enabled = true;

    void validate() const; // throws ConfigError
};

/// Parse a config from JSON text. Throws ConfigError with line/field
/// diagnostics on malformed input or unknown keys.
ExperimentConfig parse_config(const std::string& json_text);

/// Load and parse a config file.
ExperimentConfig load_config(const std::string& path);

/// Render the resolved config back to canonical JSON text.
std::string config_to_json(const ExperimentConfig& config);

/// Stable hash of the canonicalized config, recorded in every output file.
std::string config_digest(const ExperimentConfig& config);

} // namespace spadsim

#endif
