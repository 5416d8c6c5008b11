#ifndef SPADSIM_PHOTON_SOURCE_HPP
#define SPADSIM_PHOTON_SOURCE_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "spadsim/rng.hpp"
#include "spadsim/time_ps.hpp"

namespace spadsim {

enum class SourceKind { cw, pulsed, dark };

enum class PulseEnvelope { delta, gaussian };

/// Optical input description. The calibrated attenuator of the measurement
/// setup is absorbed into rate_n / mean_photons_per_pulse; a closed shutter
/// removes the light without touching the detector's dark-count generation.
struct PhotonStream {
    SourceKind kind = SourceKind::dark;
    double rate_n = 0.0;                 // photons per second (cw)
    double f_trig = 0.0;                 // pulses per second (pulsed)
    double mean_photons_per_pulse = 0.0; // Poissonian photon number (pulsed)
    PulseEnvelope envelope = PulseEnvelope::delta;
    double envelope_fwhm = 0.0;          // seconds; used by the gaussian envelope
    bool shutter_open = true;

    /// Mean photons per second reaching the detector, shutter included.
    double mean_rate() const {
        if (!shutter_open) return 0.0;
        switch (kind) {
            case SourceKind::cw: return rate_n;
            case SourceKind::pulsed: return f_trig * mean_photons_per_pulse;
            case SourceKind::dark: return 0.0;
        }
        return 0.0;
    }
};

PhotonStream make_cw_source(double rate_n);
PhotonStream make_pulsed_source(double f_trig, double mean_photons_per_pulse);
PhotonStream make_dark_source();
PhotonStream set_shutter(PhotonStream stream, bool open);

/// Run clock: duration of the observation window plus the root RNG seed.
/// Every emitted timestamp lies in [0, duration).
struct SimClock {
    picos duration = 0;
    std::uint64_t seed = 0;
};

inline SimClock make_clock(double duration_s, std::uint64_t seed) {
    return SimClock{seconds_to_picos(duration_s), seed};
}

/// Pull-based generator of photon arrival times for one run. Arrivals are
/// non-decreasing; exhausted streams return nullopt. A cw stream is a
/// homogeneous Poisson process; a pulsed stream drops a Poisson-distributed
/// photon count on each trigger epoch, spread by the pulse envelope.
class ArrivalStream {
public:
    ArrivalStream(const PhotonStream& stream, const SimClock& clock);

    std::optional<picos> next();

    /// Photons handed out so far (arrivals inside [0, duration)).
    std::uint64_t generated() const { return generated_; }

private:
    void refill_pulse();

    PhotonStream stream_;
    picos duration_;
    std::mt19937_64 rng_;
    bool exhausted_ = false;
    double next_cw_s_ = 0.0;
    std::uint64_t pulse_index_ = 0;
    std::vector<picos> pulse_buffer_; // sorted arrivals of the current pulse
    std::size_t pulse_pos_ = 0;
    std::uint64_t generated_ = 0;
};

} // namespace spadsim

#endif
