#ifndef SPADSIM_QUENCH_FSM_HPP
#define SPADSIM_QUENCH_FSM_HPP

#include <string>
#include <utility>
#include <vector>

#include "spadsim/time_ps.hpp"

namespace spadsim {

enum class QuenchMode { gated, free_running };

/// Controller configuration. In gated mode the dead-time is fixed by the
/// trigger: the pulse after a detection serves as reset for the logic, so
/// exactly two trigger periods elapse before the next arming gate
/// (dead_time = 2 / f_trig). In free-running mode the dead-time is set
/// directly by the external control.
struct QuenchConfig {
    QuenchMode mode = QuenchMode::free_running;
    double f_trig = 0.0;           // Hz, gated mode
    picos gate_width = 0;          // gated mode
    picos dead_time = 0;           // free-running mode (gated: derived)
    picos quench_latency = 5 * kPicosPerNanosecond; // sense-to-quench feedback
    double v_on = 52.5;            // volts, armed bias
    double v_ref = 51.5;           // volts, holding bias just below breakdown

    picos period() const { return seconds_to_picos(1.0 / f_trig); }

    /// Effective dead-time: 2 / f_trig when gated, the configured value
    /// otherwise.
    picos effective_dead_time() const {
        return mode == QuenchMode::gated ? 2 * period() : dead_time;
    }

    void validate(double v_breakdown) const; // throws ConfigError
};

enum class FsmPhase { idle_ref, armed, avalanching, dead };

/// Controller state. sw0_closed means the diode is clamped to v_ref. In the
/// gated dead phase, sw1_pulse_pending records that the reset trigger has
/// been consumed, so the next gate rise fires the SW1 charge pulse and
/// re-arms.
struct FsmState {
    FsmPhase phase = FsmPhase::idle_ref;
    picos phase_entered_at = 0;
    bool sw0_closed = true;
    bool sw1_pulse_pending = false;
};

enum class FsmEventKind {
    gate_rise,
    gate_fall,
    avalanche_sensed,
    quench_complete,
    dead_time_elapsed,
    rearm,
};

struct FsmEvent {
    FsmEventKind kind = FsmEventKind::rearm;
    picos t = 0;
};

enum class ActionKind { emit_detection, schedule_event, set_bias };

struct Action {
    ActionKind kind = ActionKind::emit_detection;
    FsmEventKind event = FsmEventKind::quench_complete; // schedule_event payload
    picos t = 0;                                        // schedule_event payload
    bool bias_on = false;                               // set_bias payload
};

using TransitionResult = std::pair<FsmState, std::vector<Action>>;

/// Total transition function of the controller. Events must arrive in
/// non-decreasing time order; an event older than the current phase entry is
/// an engine fault. Avalanches sensed while not armed and gate edges that
/// have no effect in the current phase are no-ops.
TransitionResult transition(const FsmState& state, const FsmEvent& event,
                            const QuenchConfig& config);

/// Gate edge schedule for a gated run: rise at k / f_trig, fall at
/// k / f_trig + gate_width, keeping every edge whose timestamp is < duration.
std::vector<FsmEvent> gated_schedule(double f_trig, picos gate_width,
                                     picos duration);

/// The rearm event ending a free-running dead phase. Calling this in any
/// phase other than dead is an engine fault.
FsmEvent free_running_rearm(const FsmState& state, const QuenchConfig& config);

const char* to_string(FsmPhase phase);
const char* to_string(FsmEventKind kind);
std::string to_string(const Action& action);

} // namespace spadsim

#endif
