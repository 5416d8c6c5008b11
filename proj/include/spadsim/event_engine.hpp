#ifndef SPADSIM_EVENT_ENGINE_HPP
#define SPADSIM_EVENT_ENGINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spadsim/apd_model.hpp"
#include "spadsim/photon_source.hpp"
#include "spadsim/quench_fsm.hpp"
#include "spadsim/time_ps.hpp"

namespace spadsim {

enum class Cause { photon = 0, dark = 1, afterpulse = 2 };

const char* to_string(Cause cause);

/// One detection. t_physical is the avalanche start, t_recorded adds the
/// timing jitter (clipped at six sigma). arm_cycle counts the arming that was
/// active when the avalanche fired; no two records share an arm cycle.
struct DetectionRecord {
    picos t_physical = 0;
    picos t_recorded = 0;
    Cause cause = Cause::photon;
    std::uint64_t arm_cycle = 0;
};

/// Per-run bookkeeping. The conservation identities hold exactly:
/// photons_generated = photon detections + photons_lost_unarmed +
/// photons_lost_bernoulli, and traps_filled = releases_consumed +
/// traps_remaining.
struct RunMeta {
    std::uint64_t seed = 0;
    picos duration = 0;
    std::string config_digest;

    std::uint64_t detections_photon = 0;
    std::uint64_t detections_dark = 0;
    std::uint64_t detections_afterpulse = 0;

    std::uint64_t photons_generated = 0;
    std::uint64_t photons_lost_unarmed = 0;
    std::uint64_t photons_lost_bernoulli = 0;
    std::uint64_t darks_generated = 0;
    std::uint64_t darks_lost_unarmed = 0;
    std::uint64_t releases_consumed = 0;
    std::uint64_t releases_lost_unarmed = 0;
    std::uint64_t releases_lost_bernoulli = 0;
    std::uint64_t traps_filled = 0;
    std::uint64_t traps_remaining = 0;

    picos armed_time = 0;
    std::uint64_t arm_count = 0;

    std::uint64_t total_detections() const {
        return detections_photon + detections_dark + detections_afterpulse;
    }
    double armed_seconds() const { return picos_to_seconds(armed_time); }
    double duration_seconds() const { return picos_to_seconds(duration); }
};

struct EventLog {
    std::vector<DetectionRecord> records;
    RunMeta meta;
};

/// FSM transition observation, for trace export and FSM-level tests.
struct TransitionRecord {
    picos t = 0;
    FsmPhase from = FsmPhase::idle_ref;
    FsmPhase to = FsmPhase::idle_ref;
    FsmEventKind event = FsmEventKind::rearm;
    std::string actions; // ';'-joined action descriptions
};

using TraceSink = std::function<void(const TransitionRecord&)>;

struct EngineOptions {
    TraceSink trace;                 // optional per-transition observer
    bool traps_enabled = true;       // false: afterpulse model fully off
    bool store_records = true;       // false: tallies only (large sweeps)
};

/// Execute one run: photon arrivals, dark counts, trap releases and gate
/// edges are merged in time order and fed through the quench controller.
/// Pure function of its arguments; reruns are bit-identical.
EventLog run(const PhotonStream& source, const DetectorParams& det,
             const QuenchConfig& quench, const SimClock& clock,
             const EngineOptions& options = {});

/// Same engine, but photon candidates are taken from an explicit pre-sorted
/// arrival list instead of the stream generator. Used by reference-simulator
/// comparisons that must feed identical inputs to two implementations.
EventLog run_with_arrivals(const std::vector<picos>& photon_arrivals,
                           const DetectorParams& det, const QuenchConfig& quench,
                           const SimClock& clock,
                           const EngineOptions& options = {});

/// Replay variant that also takes the dark-count arrivals as an explicit
/// list, bypassing both generators.
EventLog run_with_arrivals(const std::vector<picos>& photon_arrivals,
                           const std::vector<picos>& dark_arrivals,
                           const DetectorParams& det, const QuenchConfig& quench,
                           const SimClock& clock,
                           const EngineOptions& options = {});

// ---------------------------------------------------------------------------
// Generic k-way merge of timestamped streams.

struct TimedEvent {
    picos t = 0;
    int source = 0;         // index of the generator that produced it
    std::uint64_t tag = 0;  // caller-defined payload
};

using EventGenerator = std::function<std::optional<TimedEvent>()>;

/// Merge pull-based generators (each yielding non-decreasing timestamps) into
/// one globally non-decreasing sequence. Ties are resolved by generator index,
/// so the order is stable across reruns. A generator stepping backwards in
/// time is an engine fault.
std::vector<TimedEvent> merge_streams(std::vector<EventGenerator> generators);

// ---------------------------------------------------------------------------
// Stable export formats (covered by golden-file tests).

/// CSV with header `t_recorded_s,t_physical_s,cause`.
std::string event_log_csv(const EventLog& log);

/// Sidecar key-value block with the run metadata and tallies.
std::string event_log_meta(const EventLog& log);

} // namespace spadsim

#endif
