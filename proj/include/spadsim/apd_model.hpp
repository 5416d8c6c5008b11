#ifndef SPADSIM_APD_MODEL_HPP
#define SPADSIM_APD_MODEL_HPP

#include <cstddef>
#include <optional>
#include <set>

#include "spadsim/rng.hpp"
#include "spadsim/time_ps.hpp"

namespace spadsim {

inline constexpr double kReferenceTemperature = 223.0; // kelvin

/// Physical parameters of the InGaAs/InP diode. The efficiency and dark-count
/// curves are parametric stand-ins for the measured device characteristics;
/// their coefficients are calibration outputs, not device datasheet values.
struct DetectorParams {
    double v_breakdown = 52.0;     // volts
    double eta_max = 0.35;         // saturation detection probability
    double eta_slope = 0.6372;     // 1/volt, rise of the efficiency curve
    double dark_n0 = 1135.0;       // counts/s at breakdown, reference temperature
    double dark_slope = 0.9;       // 1/volt, exponential rise with excess bias
    double dark_activation = 3000.0; // kelvin, Arrhenius factor of the dark rate
    double temperature = kReferenceTemperature; // kelvin, operating point
    double trap_fill_per_ns = 2.47; // expected trapped carriers per ns of avalanche
    double tau_trap_ref = 4.8e-6;  // seconds, detrapping constant at 223 K
    double trap_activation = 2000.0; // kelvin, Arrhenius factor of detrapping
    double p_trigger = 0.6;        // probability a released carrier fires while armed
    double jitter_fwhm = 400e-12;  // seconds, FWHM of the recorded-time spread

    void validate() const; // throws ConfigError on out-of-range parameters
};

/// Bias level seen by the diode. v_ref sits just below breakdown, so the
/// detection probability there is exactly zero.
enum class BiasKind { v_ref, v_on };

struct BiasLevel {
    BiasKind level = BiasKind::v_ref;
    double v_excess = 0.0; // v_on - v_breakdown, meaningful only at v_on
};

/// Single-photon detection probability at the given bias: zero at or below
/// breakdown, then a saturating exponential in the excess bias.
double detection_probability(double v_bias, const DetectorParams& params);

/// Dark-count rate at the given bias and temperature. Exponential in excess
/// bias with an Arrhenius temperature factor referenced to 223 K: cooling
/// lowers the rate, extra bias raises it.
double dark_rate(double v_bias, double temperature, const DetectorParams& params);

/// Detrapping time constant at the given temperature. Cooling slows the
/// release of trapped carriers (and so raises the afterpulse contribution).
double tau_trap(double temperature, const DetectorParams& params);

/// Trapped-carrier bookkeeping: the multiset of scheduled release times.
class TrapState {
public:
    bool empty() const { return releases_.empty(); }
    std::size_t occupied() const { return releases_.size(); }

    void add_release(picos t) { releases_.insert(t); }

    /// Earliest release strictly after `after`, if any.
    std::optional<picos> next_release_after(picos after) const {
        auto it = releases_.upper_bound(after);
        if (it == releases_.end()) return std::nullopt;
        return *it;
    }

    /// Remove one trap scheduled for exactly `t` (its carrier was released).
    void consume(picos t) {
        auto it = releases_.find(t);
        if (it != releases_.end()) releases_.erase(it);
    }

private:
    std::multiset<picos> releases_;
};

/// Populate traps after an avalanche. The number of new traps is Poisson in
/// the avalanche duration (the carrier flow proxy); each release time is the
/// avalanche time plus an exponential detrapping delay.
void fill_traps(picos avalanche_duration, TrapState& state,
                const DetectorParams& params, picos now, std::mt19937_64& rng);

/// Free function mirror of TrapState::next_release_after.
std::optional<picos> next_trap_release(const TrapState& state, picos after);

/// Gaussian timing jitter with FWHM params.jitter_fwhm, mean zero, clipped at
/// six sigma. Added to the physical avalanche time to form the recorded time.
double sample_jitter(const DetectorParams& params, std::mt19937_64& rng);

} // namespace spadsim

#endif
