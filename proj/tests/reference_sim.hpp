#ifndef SPADSIM_TESTS_REFERENCE_SIM_HPP
#define SPADSIM_TESTS_REFERENCE_SIM_HPP

// Brute-force 1 ns time-stepped reference simulator. Re-implements the
// counting semantics (arming, gating, quench latency, dead-time, reset gate,
// trap releases) by walking the clock nanosecond by nanosecond, independently
// of the event engine's merge logic. Fed with the same candidate lists and
// RNG substreams as the engine, any disagreement beyond grid-resolution
// effects flags a scheduling bug.

#include <cstdint>
#include <set>
#include <vector>

#include "spadsim/apd_model.hpp"
#include "spadsim/photon_source.hpp"
#include "spadsim/quench_fsm.hpp"
#include "spadsim/rng.hpp"
#include "spadsim/time_ps.hpp"

namespace testutil {

struct ReferenceCounts {
    std::uint64_t photon = 0;
    std::uint64_t dark = 0;
    std::uint64_t afterpulse = 0;
    std::uint64_t total() const { return photon + dark + afterpulse; }
};

inline ReferenceCounts reference_simulate(
    const std::vector<spadsim::picos>& photon_arrivals,
    const std::vector<spadsim::picos>& dark_arrivals,
    const spadsim::DetectorParams& det, const spadsim::QuenchConfig& quench,
    const spadsim::SimClock& clock) {
    using namespace spadsim;
    using int64 = std::int64_t;

    const int64 duration = clock.duration / kPicosPerNanosecond;
    const int64 latency = quench.quench_latency / kPicosPerNanosecond;
    const bool gated = quench.mode == QuenchMode::gated;
    const int64 period = gated ? quench.period() / kPicosPerNanosecond : 0;
    const int64 width = gated ? quench.gate_width / kPicosPerNanosecond : 0;
    const int64 dead = gated ? 0 : quench.dead_time / kPicosPerNanosecond;

    const double eta = detection_probability(quench.v_on, det);
    const double tau_release = tau_trap(det.temperature, det);
    const double fill_lambda =
        det.trap_fill_per_ns * static_cast<double>(latency);

    auto detect_rng = make_substream(clock.seed, StreamId::detect);
    auto trap_rng = make_substream(clock.seed, StreamId::traps);
    auto afterpulse_rng = make_substream(clock.seed, StreamId::afterpulse);

    // Candidate lists floored onto the grid. Flooring preserves every
    // ">= boundary" relation against the integer-ns control boundaries.
    std::vector<int64> photons(photon_arrivals.size());
    for (std::size_t i = 0; i < photons.size(); ++i)
        photons[i] = photon_arrivals[i] / kPicosPerNanosecond;
    std::vector<int64> darks(dark_arrivals.size());
    for (std::size_t i = 0; i < darks.size(); ++i)
        darks[i] = dark_arrivals[i] / kPicosPerNanosecond;

    enum class Phase { idle, armed, avalanching, dead };
    Phase phase = gated ? Phase::idle : Phase::armed;
    bool reset_seen = false;  // gated dead phase: reset trigger consumed
    int64 quench_at = -1;
    int64 rearm_at = -1;
    int64 next_rise = 0;
    int64 next_fall = width;

    std::multiset<int64> releases;
    std::size_t photon_pos = 0;
    std::size_t dark_pos = 0;
    ReferenceCounts counts;

    auto detect = [&](int64 t, int which) {
        if (which == 0) ++counts.photon;
        if (which == 1) ++counts.dark;
        if (which == 2) ++counts.afterpulse;
        phase = Phase::avalanching;
        quench_at = t + latency;
        if (det.trap_fill_per_ns > 0.0) {
            const std::uint64_t k = sample_poisson(trap_rng, fill_lambda);
            for (std::uint64_t i = 0; i < k; ++i) {
                const double delay_s = sample_exponential(trap_rng, tau_release);
                picos delay_ps = seconds_to_picos(delay_s);
                if (delay_ps < 1) delay_ps = 1;
                releases.insert(t + delay_ps / kPicosPerNanosecond);
            }
        }
    };

    for (int64 t = 0; t < duration; ++t) {
        // Control transitions first, in the engine's priority order.
        if (phase == Phase::avalanching && t == quench_at) {
            phase = Phase::dead;
            reset_seen = false;
            if (!gated) rearm_at = t + dead;
        }
        if (!gated && phase == Phase::dead && t == rearm_at) phase = Phase::armed;
        if (gated && t == next_rise) {
            if (phase == Phase::idle) {
                phase = Phase::armed;
            } else if (phase == Phase::dead) {
                if (reset_seen)
                    phase = Phase::armed;
                else
                    reset_seen = true;
            }
            next_rise += period;
        }
        if (gated && t == next_fall) {
            if (phase == Phase::armed) phase = Phase::idle;
            next_fall += period;
        }

        // Candidates due at this tick: photons, then darks, then releases.
        while (photon_pos < photons.size() && photons[photon_pos] == t) {
            ++photon_pos;
            const double u = uniform01(detect_rng);
            if (phase == Phase::armed && u < eta) detect(t, 0);
        }
        while (dark_pos < darks.size() && darks[dark_pos] == t) {
            ++dark_pos;
            if (phase == Phase::armed) detect(t, 1);
        }
        while (!releases.empty() && *releases.begin() <= t) {
            releases.erase(releases.begin());
            const double u = uniform01(afterpulse_rng);
            if (phase == Phase::armed && u < det.p_trigger) detect(t, 2);
        }
    }
    return counts;
}

} // namespace testutil

#endif
