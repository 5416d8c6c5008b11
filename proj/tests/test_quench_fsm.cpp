#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spadsim/errors.hpp"
#include "spadsim/quench_fsm.hpp"

using namespace spadsim;

namespace {

QuenchConfig gated_10khz() {
    QuenchConfig q;
    q.mode = QuenchMode::gated;
    q.f_trig = 1e4;
    q.gate_width = seconds_to_picos(100e-9);
    return q;
}

QuenchConfig free_running(double tau_s) {
    QuenchConfig q;
    q.mode = QuenchMode::free_running;
    q.dead_time = seconds_to_picos(tau_s);
    return q;
}

FsmState armed_at(picos t) {
    FsmState s;
    s.phase = FsmPhase::armed;
    s.phase_entered_at = t;
    s.sw0_closed = false;
    return s;
}

} // namespace

TEST_CASE("config invariants") {
    SUBCASE("gated dead-time is exactly 2 / f_trig") {
        QuenchConfig q = gated_10khz();
        CHECK(q.effective_dead_time() == seconds_to_picos(200e-6));
        q.f_trig = 1e5;
        CHECK(q.effective_dead_time() == seconds_to_picos(20e-6));
    }
    SUBCASE("v_ref < v_breakdown < v_on is enforced") {
        QuenchConfig q = free_running(24e-6);
        CHECK_NOTHROW(q.validate(52.0));
        CHECK_THROWS_AS(q.validate(51.0), ConfigError); // v_ref not below
        CHECK_THROWS_AS(q.validate(53.0), ConfigError); // v_on not above
    }
    SUBCASE("gate width must stay below the period") {
        QuenchConfig q = gated_10khz();
        q.gate_width = seconds_to_picos(2e-4);
        CHECK_THROWS_AS(q.validate(52.0), ConfigError);
    }
    SUBCASE("free-running needs a positive dead-time") {
        CHECK_THROWS_AS(free_running(0.0).validate(52.0), ConfigError);
    }
}

TEST_CASE("armed + avalanche_sensed schedules the quench and emits") {
    const QuenchConfig q = free_running(24e-6);
    const picos t = seconds_to_picos(0.25);
    auto [next, actions] =
        transition(armed_at(0), FsmEvent{FsmEventKind::avalanche_sensed, t}, q);
    CHECK(next.phase == FsmPhase::avalanching);
    CHECK(next.phase_entered_at == t);
    REQUIRE(actions.size() == 2);
    CHECK(actions[0].kind == ActionKind::emit_detection);
    CHECK(actions[1].kind == ActionKind::schedule_event);
    CHECK(actions[1].event == FsmEventKind::quench_complete);
    CHECK(actions[1].t == t + 5 * kPicosPerNanosecond);
}

TEST_CASE("avalanche sensed while not armed is a no-op") {
    const QuenchConfig q = free_running(24e-6);
    FsmState idle;
    auto [next, actions] =
        transition(idle, FsmEvent{FsmEventKind::avalanche_sensed, 100}, q);
    CHECK(next.phase == FsmPhase::idle_ref);
    CHECK(actions.empty());
}

TEST_CASE("events older than the phase entry are an engine fault") {
    const QuenchConfig q = free_running(24e-6);
    CHECK_THROWS_AS(
        transition(armed_at(1000), FsmEvent{FsmEventKind::avalanche_sensed, 999}, q),
        EngineFault);
}

TEST_CASE("free-running cycle: quench, dead, rearm") {
    const QuenchConfig q = free_running(24e-6);
    const picos t0 = seconds_to_picos(1.0);

    auto [aval, a1] =
        transition(armed_at(0), FsmEvent{FsmEventKind::avalanche_sensed, t0}, q);
    auto [dead, a2] = transition(
        aval, FsmEvent{FsmEventKind::quench_complete, a1[1].t}, q);
    CHECK(dead.phase == FsmPhase::dead);
    CHECK(dead.sw0_closed);
    REQUIRE(a2.size() == 2);
    CHECK(a2[0].kind == ActionKind::set_bias);
    CHECK(!a2[0].bias_on);
    CHECK(a2[1].kind == ActionKind::schedule_event);
    CHECK(a2[1].event == FsmEventKind::dead_time_elapsed);
    CHECK(a2[1].t == dead.phase_entered_at + seconds_to_picos(24e-6));

    auto [rearmed, a3] =
        transition(dead, FsmEvent{FsmEventKind::dead_time_elapsed, a2[1].t}, q);
    CHECK(rearmed.phase == FsmPhase::armed);
    REQUIRE(a3.size() == 1);
    CHECK(a3[0].kind == ActionKind::set_bias);
    CHECK(a3[0].bias_on);
}

TEST_CASE("free_running_rearm") {
    const QuenchConfig q = free_running(24e-6);
    FsmState dead;
    dead.phase = FsmPhase::dead;
    dead.phase_entered_at = seconds_to_picos(1.0);

    SUBCASE("rearm lands exactly dead_time later") {
        const FsmEvent ev = free_running_rearm(dead, q);
        CHECK(ev.kind == FsmEventKind::rearm);
        CHECK(ev.t == seconds_to_picos(1.000024));
        auto [next, actions] = transition(dead, ev, q);
        CHECK(next.phase == FsmPhase::armed);
        CHECK(actions.size() == 1);
    }
    SUBCASE("32 us dead-time") {
        const FsmEvent ev = free_running_rearm(dead, free_running(32e-6));
        CHECK(ev.t == dead.phase_entered_at + seconds_to_picos(32e-6));
    }
    SUBCASE("zero dead-time is a config error") {
        QuenchConfig bad = q;
        bad.dead_time = 0;
        CHECK_THROWS_AS(free_running_rearm(dead, bad), ConfigError);
    }
    SUBCASE("calling it outside the dead phase is an engine fault") {
        CHECK_THROWS_AS(free_running_rearm(armed_at(0), q), EngineFault);
    }
}

TEST_CASE("gated_schedule") {
    SUBCASE("10 kHz, 100 ns width, 1 ms duration: 10 rise/fall pairs") {
        const auto events =
            gated_schedule(1e4, seconds_to_picos(100e-9), seconds_to_picos(1e-3));
        REQUIRE(events.size() == 20);
        for (std::size_t k = 0; k < 10; ++k) {
            CHECK(events[2 * k].kind == FsmEventKind::gate_rise);
            CHECK(events[2 * k].t == static_cast<picos>(k) * seconds_to_picos(1e-4));
            CHECK(events[2 * k + 1].kind == FsmEventKind::gate_fall);
            CHECK(events[2 * k + 1].t ==
                  events[2 * k].t + seconds_to_picos(100e-9));
        }
    }
    SUBCASE("zero duration: empty schedule") {
        CHECK(gated_schedule(1e4, seconds_to_picos(100e-9), 0).empty());
    }
    SUBCASE("width at or above the period is a config error") {
        CHECK_THROWS_AS(gated_schedule(1e4, seconds_to_picos(1e-4), 1000),
                        ConfigError);
    }
}

TEST_CASE("full gated cycle re-arms exactly two periods after a detection") {
    // Detection at gate k's rise; the next trigger is the reset, gate k+2
    // re-arms: 200 us at 10 kHz.
    const QuenchConfig q = gated_10khz();
    const picos period = seconds_to_picos(1e-4);

    FsmState s; // idle_ref
    auto feed = [&](FsmEventKind kind, picos t) {
        auto [next, actions] = transition(s, FsmEvent{kind, t}, q);
        s = next;
        return actions;
    };

    feed(FsmEventKind::gate_rise, 0);
    CHECK(s.phase == FsmPhase::armed);

    const auto on_detect = feed(FsmEventKind::avalanche_sensed, 0);
    REQUIRE(on_detect.size() == 2);
    feed(FsmEventKind::gate_fall, seconds_to_picos(100e-9));
    CHECK(s.phase == FsmPhase::avalanching); // gate end does not abort the quench
    feed(FsmEventKind::quench_complete, on_detect[1].t);
    CHECK(s.phase == FsmPhase::dead);

    feed(FsmEventKind::gate_rise, period); // reset trigger: stays dead
    CHECK(s.phase == FsmPhase::dead);
    CHECK(s.sw1_pulse_pending);
    feed(FsmEventKind::gate_fall, period + seconds_to_picos(100e-9));
    CHECK(s.phase == FsmPhase::dead);

    const auto rearm_actions = feed(FsmEventKind::gate_rise, 2 * period);
    CHECK(s.phase == FsmPhase::armed);
    CHECK(s.phase_entered_at == seconds_to_picos(200e-6)); // exact
    REQUIRE(rearm_actions.size() == 1);
    CHECK(rearm_actions[0].bias_on);
}

TEST_CASE("gate fall in armed phase returns to idle_ref") {
    const QuenchConfig q = gated_10khz();
    FsmState s;
    auto [armed, a1] = transition(s, FsmEvent{FsmEventKind::gate_rise, 0}, q);
    auto [idle, a2] = transition(
        armed, FsmEvent{FsmEventKind::gate_fall, seconds_to_picos(100e-9)}, q);
    CHECK(idle.phase == FsmPhase::idle_ref);
    CHECK(idle.sw0_closed);
    REQUIRE(a2.size() == 1);
    CHECK(!a2[0].bias_on);
}

TEST_CASE("avalanching duration equals the quench latency exactly") {
    const QuenchConfig q = free_running(24e-6);
    const picos t = 123456789;
    auto [aval, actions] =
        transition(armed_at(0), FsmEvent{FsmEventKind::avalanche_sensed, t}, q);
    auto [dead, unused] =
        transition(aval, FsmEvent{FsmEventKind::quench_complete, actions[1].t}, q);
    CHECK(dead.phase_entered_at - aval.phase_entered_at == q.quench_latency);
}
