#include "spadsim/quench_fsm.hpp"

#include <cmath>

#include "spadsim/errors.hpp"

namespace spadsim {

void QuenchConfig::validate(double v_breakdown) const {
    if (!(v_ref < v_breakdown))
        throw ConfigError("quench: v_ref must be below the breakdown voltage");
    if (!(v_breakdown < v_on))
        throw ConfigError("quench: v_on must be above the breakdown voltage");
    if (quench_latency <= 0) throw ConfigError("quench: quench_latency must be > 0");
    if (mode == QuenchMode::gated) {
        if (f_trig <= 0.0 || !std::isfinite(f_trig))
            throw ConfigError("quench: gated mode requires f_trig > 0");
        if (gate_width <= 0) throw ConfigError("quench: gate_width must be > 0");
        if (gate_width >= period())
            throw ConfigError("quench: gate_width must be below the trigger period");
    } else {
        if (dead_time <= 0)
            throw ConfigError("quench: free-running mode requires dead_time > 0");
    }
}

namespace {

Action emit_detection_action() {
    Action a;
    a.kind = ActionKind::emit_detection;
    return a;
}

Action schedule_action(FsmEventKind event, picos t) {
    Action a;
    a.kind = ActionKind::schedule_event;
    a.event = event;
    a.t = t;
    return a;
}

Action bias_action(bool on) {
    Action a;
    a.kind = ActionKind::set_bias;
    a.bias_on = on;
    return a;
}

FsmState enter(FsmPhase phase, picos t, bool sw0_closed, bool sw1_pending = false) {
    FsmState s;
    s.phase = phase;
    s.phase_entered_at = t;
    s.sw0_closed = sw0_closed;
    s.sw1_pulse_pending = sw1_pending;
    return s;
}

} // namespace

TransitionResult transition(const FsmState& state, const FsmEvent& event,
                            const QuenchConfig& config) {
    if (event.t < state.phase_entered_at)
        throw EngineFault("fsm: event older than the current phase");

    std::vector<Action> actions;
    FsmState next = state;

    switch (state.phase) {
        case FsmPhase::idle_ref:
            switch (event.kind) {
                case FsmEventKind::gate_rise:
                    if (config.mode == QuenchMode::gated) {
                        next = enter(FsmPhase::armed, event.t, false);
                        actions.push_back(bias_action(true));
                    }
                    break;
                case FsmEventKind::rearm:
                case FsmEventKind::dead_time_elapsed:
                    // Free-running bootstrap: the external control arms once.
                    if (config.mode == QuenchMode::free_running) {
                        next = enter(FsmPhase::armed, event.t, false);
                        actions.push_back(bias_action(true));
                    }
                    break;
                default:
                    break; // no avalanche is possible below breakdown
            }
            break;

        case FsmPhase::armed:
            switch (event.kind) {
                case FsmEventKind::avalanche_sensed:
                    next = enter(FsmPhase::avalanching, event.t, false);
                    actions.push_back(emit_detection_action());
                    actions.push_back(schedule_action(
                        FsmEventKind::quench_complete,
                        event.t + config.quench_latency));
                    break;
                case FsmEventKind::gate_fall:
                    if (config.mode == QuenchMode::gated) {
                        next = enter(FsmPhase::idle_ref, event.t, true);
                        actions.push_back(bias_action(false));
                    }
                    break;
                default:
                    break;
            }
            break;

        case FsmPhase::avalanching:
            switch (event.kind) {
                case FsmEventKind::quench_complete:
                    next = enter(FsmPhase::dead, event.t, true);
                    actions.push_back(bias_action(false));
                    if (config.mode == QuenchMode::free_running) {
                        actions.push_back(schedule_action(
                            FsmEventKind::dead_time_elapsed,
                            event.t + config.dead_time));
                    }
                    break;
                default:
                    // A gate edge during the quench sequence does not abort
                    // it; the scheduled quench_complete finishes the cycle.
                    break;
            }
            break;

        case FsmPhase::dead:
            switch (event.kind) {
                case FsmEventKind::gate_rise:
                    if (config.mode == QuenchMode::gated) {
                        if (state.sw1_pulse_pending) {
                            next = enter(FsmPhase::armed, event.t, false);
                            actions.push_back(bias_action(true));
                        } else {
                            // First trigger after the detection: consumed as
                            // the reset pulse, the detector stays dead.
                            next.sw1_pulse_pending = true;
                        }
                    }
                    break;
                case FsmEventKind::dead_time_elapsed:
                case FsmEventKind::rearm:
                    if (config.mode == QuenchMode::free_running) {
                        next = enter(FsmPhase::armed, event.t, false);
                        actions.push_back(bias_action(true));
                    }
                    break;
                default:
                    break;
            }
            break;
    }

    return {next, actions};
}

std::vector<FsmEvent> gated_schedule(double f_trig, picos gate_width,
                                     picos duration) {
    if (f_trig <= 0.0) throw ConfigError("gated_schedule: f_trig must be > 0");
    const picos period = seconds_to_picos(1.0 / f_trig);
    if (gate_width >= period)
        throw ConfigError("gated_schedule: gate_width must be below the period");
    std::vector<FsmEvent> events;
    for (std::uint64_t k = 0;; ++k) {
        const picos rise = static_cast<picos>(k) * period;
        if (rise >= duration) break;
        events.push_back(FsmEvent{FsmEventKind::gate_rise, rise});
        const picos fall = rise + gate_width;
        if (fall < duration)
            events.push_back(FsmEvent{FsmEventKind::gate_fall, fall});
    }
    return events;
}

FsmEvent free_running_rearm(const FsmState& state, const QuenchConfig& config) {
    if (state.phase != FsmPhase::dead)
        throw EngineFault("free_running_rearm: state is not dead");
    if (config.dead_time <= 0)
        throw ConfigError("free_running_rearm: dead_time must be > 0");
    return FsmEvent{FsmEventKind::rearm, state.phase_entered_at + config.dead_time};
}

const char* to_string(FsmPhase phase) {
    switch (phase) {
        case FsmPhase::idle_ref: return "idle_ref";
        case FsmPhase::armed: return "armed";
        case FsmPhase::avalanching: return "avalanching";
        case FsmPhase::dead: return "dead";
    }
    return "?";
}

const char* to_string(FsmEventKind kind) {
    switch (kind) {
        case FsmEventKind::gate_rise: return "gate_rise";
        case FsmEventKind::gate_fall: return "gate_fall";
        case FsmEventKind::avalanche_sensed: return "avalanche_sensed";
        case FsmEventKind::quench_complete: return "quench_complete";
        case FsmEventKind::dead_time_elapsed: return "dead_time_elapsed";
        case FsmEventKind::rearm: return "rearm";
    }
    return "?";
}

std::string to_string(const Action& action) {
    switch (action.kind) {
        case ActionKind::emit_detection:
            return "emit_detection";
        case ActionKind::schedule_event:
            return std::string("schedule:") + to_string(action.event) + "@" +
                   format_seconds(action.t);
        case ActionKind::set_bias:
            return action.bias_on ? "set_bias:v_on" : "set_bias:v_ref";
    }
    return "?";
}

} // namespace spadsim
