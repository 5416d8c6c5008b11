#include "spadsim/apd_model.hpp"

#include <algorithm>
#include <cmath>

#include "spadsim/errors.hpp"

namespace spadsim {

namespace {
constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493; // 1 / (2 sqrt(2 ln 2))
}

void DetectorParams::validate() const {
    if (v_breakdown <= 0.0) throw ConfigError("detector: v_breakdown must be > 0");
    if (eta_max < 0.0 || eta_max > 1.0)
        throw ConfigError("detector: eta_max must lie in [0, 1]");
    if (eta_slope <= 0.0) throw ConfigError("detector: eta_slope must be > 0");
    if (dark_n0 < 0.0) throw ConfigError("detector: dark_n0 must be >= 0");
    if (dark_slope < 0.0) throw ConfigError("detector: dark_slope must be >= 0");
    if (dark_activation < 0.0)
        throw ConfigError("detector: dark_activation must be >= 0");
    if (temperature <= 0.0) throw ConfigError("detector: temperature must be > 0");
    if (trap_fill_per_ns < 0.0)
        throw ConfigError("detector: trap_fill_per_ns must be >= 0");
    if (tau_trap_ref <= 0.0) throw ConfigError("detector: tau_trap_ref must be > 0");
    if (trap_activation < 0.0)
        throw ConfigError("detector: trap_activation must be >= 0");
    if (p_trigger < 0.0 || p_trigger > 1.0)
        throw ConfigError("detector: p_trigger must lie in [0, 1]");
    if (jitter_fwhm < 0.0) throw ConfigError("detector: jitter_fwhm must be >= 0");
}

double detection_probability(double v_bias, const DetectorParams& params) {
    if (v_bias <= params.v_breakdown) return 0.0;
    const double excess = v_bias - params.v_breakdown;
    return params.eta_max * (1.0 - std::exp(-params.eta_slope * excess));
}

double dark_rate(double v_bias, double temperature, const DetectorParams& params) {
    const double excess = v_bias - params.v_breakdown;
    const double bias_factor = std::exp(params.dark_slope * excess);
    const double arrhenius = std::exp(
        -params.dark_activation * (1.0 / temperature - 1.0 / kReferenceTemperature));
    return params.dark_n0 * bias_factor * arrhenius;
}

double tau_trap(double temperature, const DetectorParams& params) {
    return params.tau_trap_ref *
           std::exp(params.trap_activation *
                    (1.0 / temperature - 1.0 / kReferenceTemperature));
}

void fill_traps(picos avalanche_duration, TrapState& state,
                const DetectorParams& params, picos now, std::mt19937_64& rng) {
    if (avalanche_duration <= 0 || params.trap_fill_per_ns <= 0.0) return;
    const double lambda =
        params.trap_fill_per_ns * picos_to_nanoseconds(avalanche_duration);
    const std::uint64_t count = sample_poisson(rng, lambda);
    const double tau = tau_trap(params.temperature, params);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double delay_s = sample_exponential(rng, tau);
        picos delay = seconds_to_picos(delay_s);
        if (delay < 1) delay = 1; // release strictly after the avalanche
        state.add_release(now + delay);
    }
}

std::optional<picos> next_trap_release(const TrapState& state, picos after) {
    return state.next_release_after(after);
}

double sample_jitter(const DetectorParams& params, std::mt19937_64& rng) {
    if (params.jitter_fwhm <= 0.0) return 0.0;
    const double sigma = params.jitter_fwhm * kFwhmToSigma;
    const double z = sample_standard_normal(rng);
    return sigma * std::clamp(z, -6.0, 6.0);
}

} // namespace spadsim
