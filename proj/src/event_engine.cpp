#include "spadsim/event_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "spadsim/errors.hpp"

namespace spadsim {

const char* to_string(Cause cause) {
    switch (cause) {
        case Cause::photon: return "photon";
        case Cause::dark: return "dark";
        case Cause::afterpulse: return "afterpulse";
    }
    return "?";
}

namespace {

void validate_stream(const PhotonStream& s) {
    if (s.rate_n < 0.0) throw ConfigError("source: rate_n must be >= 0");
    if (s.kind == SourceKind::pulsed && s.f_trig <= 0.0)
        throw ConfigError("source: pulsed kind requires f_trig > 0");
    if (s.mean_photons_per_pulse < 0.0)
        throw ConfigError("source: mean_photons_per_pulse must be >= 0");
    if (s.envelope == PulseEnvelope::gaussian && s.envelope_fwhm < 0.0)
        throw ConfigError("source: envelope_fwhm must be >= 0");
}

// Candidate classes, in processing order at equal timestamps. Control events
// (arming, disarming, quenching) always act before arrivals at the same tick:
// a photon on a gate's rising edge sees an armed detector, a photon on the
// falling edge does not.
enum class Slot { quench, rearm, gate, photon, dark, release, none };

struct GateCursor {
    bool active = false;
    picos period = 0;
    picos width = 0;
    picos duration = 0;
    std::uint64_t index = 0;
    bool rise_next = true;

    std::optional<picos> peek() const {
        if (!active) return std::nullopt;
        const picos rise = static_cast<picos>(index) * period;
        const picos t = rise_next ? rise : rise + width;
        if (t >= duration) return std::nullopt;
        return t;
    }
    FsmEventKind pop_kind() {
        if (rise_next) {
            rise_next = false;
            return FsmEventKind::gate_rise;
        }
        rise_next = true;
        ++index;
        return FsmEventKind::gate_fall;
    }
};

class Engine {
public:
    Engine(const PhotonStream& source, const std::vector<picos>* arrivals,
           const std::vector<picos>* dark_arrivals, const DetectorParams& det,
           const QuenchConfig& quench, const SimClock& clock,
           const EngineOptions& options)
        : det_(det),
          quench_(quench),
          clock_(clock),
          options_(options),
          source_stream_(source),
          arrival_list_(arrivals),
          dark_list_(dark_arrivals),
          arrivals_(source, clock),
          dark_rng_(make_substream(clock.seed, StreamId::dark)),
          detect_rng_(make_substream(clock.seed, StreamId::detect)),
          trap_rng_(make_substream(clock.seed, StreamId::traps)),
          afterpulse_rng_(make_substream(clock.seed, StreamId::afterpulse)),
          jitter_rng_(make_substream(clock.seed, StreamId::jitter)) {
        det_.validate();
        quench_.validate(det_.v_breakdown);
        validate_stream(source);
        if (clock.duration < 0) throw ConfigError("clock: duration must be >= 0");

        eta_ = detection_probability(quench_.v_on, det_);
        dark_rate_ = dark_rate(quench_.v_on, det_.temperature, det_);

        if (quench_.mode == QuenchMode::gated) {
            gates_.active = true;
            gates_.period = quench_.period();
            gates_.width = quench_.gate_width;
            gates_.duration = clock.duration;
        }
        next_photon_ = pull_photon();
        next_dark_ = pull_dark();

        log_.meta.seed = clock.seed;
        log_.meta.duration = clock.duration;
    }

    EventLog run() {
        if (quench_.mode == QuenchMode::free_running && clock_.duration > 0)
            feed_fsm(FsmEvent{FsmEventKind::rearm, 0});

        while (true) {
            const Slot slot = pick_next();
            if (slot == Slot::none) break;
            step(slot);
        }

        if (fsm_.phase == FsmPhase::armed)
            log_.meta.armed_time += clock_.duration - armed_since_;

        log_.meta.photons_generated =
            arrival_list_ ? replayed_photons_ : arrivals_.generated();
        log_.meta.traps_remaining = traps_.occupied();

        std::sort(log_.records.begin(), log_.records.end(),
                  [](const DetectionRecord& a, const DetectionRecord& b) {
                      if (a.t_recorded != b.t_recorded)
                          return a.t_recorded < b.t_recorded;
                      if (a.t_physical != b.t_physical)
                          return a.t_physical < b.t_physical;
                      return static_cast<int>(a.cause) < static_cast<int>(b.cause);
                  });
        return std::move(log_);
    }

private:
    std::optional<picos> pull_photon() {
        if (arrival_list_) {
            if (arrival_pos_ >= arrival_list_->size()) return std::nullopt;
            const picos t = (*arrival_list_)[arrival_pos_];
            if (arrival_pos_ > 0 && t < (*arrival_list_)[arrival_pos_ - 1])
                throw EngineFault("engine: photon arrival list not sorted");
            ++arrival_pos_;
            if (t >= clock_.duration) return std::nullopt;
            ++replayed_photons_;
            return t;
        }
        return arrivals_.next();
    }

    std::optional<picos> pull_dark() {
        if (dark_list_) {
            if (dark_pos_ >= dark_list_->size()) return std::nullopt;
            const picos t = (*dark_list_)[dark_pos_];
            if (dark_pos_ > 0 && t < (*dark_list_)[dark_pos_ - 1])
                throw EngineFault("engine: dark arrival list not sorted");
            ++dark_pos_;
            if (t >= clock_.duration) return std::nullopt;
            ++log_.meta.darks_generated;
            return t;
        }
        if (dark_rate_ <= 0.0) return std::nullopt;
        dark_clock_s_ += sample_exponential(dark_rng_, 1.0 / dark_rate_);
        const picos t = seconds_to_picos(dark_clock_s_);
        if (t >= clock_.duration) return std::nullopt;
        ++log_.meta.darks_generated;
        return t;
    }

    Slot pick_next() {
        picos best = std::numeric_limits<picos>::max();
        Slot slot = Slot::none;
        auto consider = [&](const std::optional<picos>& t, Slot s) {
            if (t && *t < best) {
                best = *t;
                slot = s;
            }
        };
        consider(pending_quench_, Slot::quench);
        consider(pending_rearm_, Slot::rearm);
        consider(gates_.peek(), Slot::gate);
        consider(next_photon_, Slot::photon);
        consider(next_dark_, Slot::dark);
        consider(traps_.next_release_after(-1), Slot::release);
        if (slot == Slot::none || best >= clock_.duration) return Slot::none;
        return slot;
    }

    void step(Slot slot) {
        switch (slot) {
            case Slot::quench: {
                const picos t = *pending_quench_;
                pending_quench_.reset();
                feed_fsm(FsmEvent{FsmEventKind::quench_complete, t});
                break;
            }
            case Slot::rearm: {
                const picos t = *pending_rearm_;
                pending_rearm_.reset();
                feed_fsm(FsmEvent{FsmEventKind::dead_time_elapsed, t});
                break;
            }
            case Slot::gate: {
                const picos t = *gates_.peek();
                feed_fsm(FsmEvent{gates_.pop_kind(), t});
                break;
            }
            case Slot::photon: {
                const picos t = *next_photon_;
                next_photon_ = pull_photon();
                // One uniform per candidate, armed or not, so the stream
                // stays aligned with candidate indices across config changes.
                const double u = uniform01(detect_rng_);
                if (fsm_.phase != FsmPhase::armed) {
                    ++log_.meta.photons_lost_unarmed;
                } else if (u < eta_) {
                    avalanche(t, Cause::photon);
                } else {
                    ++log_.meta.photons_lost_bernoulli;
                }
                break;
            }
            case Slot::dark: {
                const picos t = *next_dark_;
                next_dark_ = pull_dark();
                if (fsm_.phase != FsmPhase::armed) {
                    ++log_.meta.darks_lost_unarmed;
                } else {
                    avalanche(t, Cause::dark);
                }
                break;
            }
            case Slot::release: {
                const picos t = *traps_.next_release_after(-1);
                traps_.consume(t);
                ++log_.meta.releases_consumed;
                const double u = uniform01(afterpulse_rng_);
                if (fsm_.phase != FsmPhase::armed) {
                    ++log_.meta.releases_lost_unarmed;
                } else if (u < det_.p_trigger) {
                    avalanche(t, Cause::afterpulse);
                } else {
                    ++log_.meta.releases_lost_bernoulli;
                }
                break;
            }
            case Slot::none:
                break;
        }
    }

    void avalanche(picos t, Cause cause) {
        feed_fsm(FsmEvent{FsmEventKind::avalanche_sensed, t});

        const double jitter_s = sample_jitter(det_, jitter_rng_);
        if (options_.store_records) {
            DetectionRecord rec;
            rec.t_physical = t;
            picos t_rec = t + seconds_to_picos(jitter_s);
            t_rec = std::clamp<picos>(t_rec, 0, clock_.duration - 1);
            rec.t_recorded = t_rec;
            rec.cause = cause;
            rec.arm_cycle = log_.meta.arm_count;
            log_.records.push_back(rec);
        }

        switch (cause) {
            case Cause::photon: ++log_.meta.detections_photon; break;
            case Cause::dark: ++log_.meta.detections_dark; break;
            case Cause::afterpulse: ++log_.meta.detections_afterpulse; break;
        }

        if (options_.traps_enabled) {
            const std::size_t before = traps_.occupied();
            // The avalanche persists for the full feedback latency; carrier
            // flow (and so trap filling) scales with that duration.
            fill_traps(quench_.quench_latency, traps_, det_, t, trap_rng_);
            log_.meta.traps_filled += traps_.occupied() - before;
        }
    }

    void feed_fsm(const FsmEvent& event) {
        const FsmState before = fsm_;
        auto [after, actions] = transition(fsm_, event, quench_);
        fsm_ = after;

        for (const Action& a : actions) {
            if (a.kind == ActionKind::schedule_event) {
                if (a.event == FsmEventKind::quench_complete)
                    pending_quench_ = a.t;
                else
                    pending_rearm_ = a.t;
            }
        }

        if (before.phase != FsmPhase::armed && after.phase == FsmPhase::armed) {
            armed_since_ = event.t;
            ++log_.meta.arm_count;
        } else if (before.phase == FsmPhase::armed &&
                   after.phase != FsmPhase::armed) {
            log_.meta.armed_time += event.t - armed_since_;
        }

        if (options_.trace) {
            TransitionRecord tr;
            tr.t = event.t;
            tr.from = before.phase;
            tr.to = after.phase;
            tr.event = event.kind;
            std::string joined;
            for (std::size_t i = 0; i < actions.size(); ++i) {
                if (i) joined += ';';
                joined += to_string(actions[i]);
            }
            tr.actions = std::move(joined);
            options_.trace(tr);
        }
    }

    DetectorParams det_;
    QuenchConfig quench_;
    SimClock clock_;
    EngineOptions options_;
    PhotonStream source_stream_;

    const std::vector<picos>* arrival_list_ = nullptr;
    std::size_t arrival_pos_ = 0;
    std::uint64_t replayed_photons_ = 0;
    const std::vector<picos>* dark_list_ = nullptr;
    std::size_t dark_pos_ = 0;
    ArrivalStream arrivals_;

    std::mt19937_64 dark_rng_;
    std::mt19937_64 detect_rng_;
    std::mt19937_64 trap_rng_;
    std::mt19937_64 afterpulse_rng_;
    std::mt19937_64 jitter_rng_;

    double eta_ = 0.0;
    double dark_rate_ = 0.0;
    double dark_clock_s_ = 0.0;

    GateCursor gates_;
    std::optional<picos> next_photon_;
    std::optional<picos> next_dark_;
    std::optional<picos> pending_quench_;
    std::optional<picos> pending_rearm_;

    FsmState fsm_;
    TrapState traps_;
    picos armed_since_ = 0;

    EventLog log_;
};

} // namespace

EventLog run(const PhotonStream& source, const DetectorParams& det,
             const QuenchConfig& quench, const SimClock& clock,
             const EngineOptions& options) {
    Engine engine(source, nullptr, nullptr, det, quench, clock, options);
    return engine.run();
}

EventLog run_with_arrivals(const std::vector<picos>& photon_arrivals,
                           const DetectorParams& det, const QuenchConfig& quench,
                           const SimClock& clock, const EngineOptions& options) {
    PhotonStream dark = make_dark_source();
    Engine engine(dark, &photon_arrivals, nullptr, det, quench, clock, options);
    return engine.run();
}

EventLog run_with_arrivals(const std::vector<picos>& photon_arrivals,
                           const std::vector<picos>& dark_arrivals,
                           const DetectorParams& det, const QuenchConfig& quench,
                           const SimClock& clock, const EngineOptions& options) {
    PhotonStream dark = make_dark_source();
    Engine engine(dark, &photon_arrivals, &dark_arrivals, det, quench, clock,
                  options);
    return engine.run();
}

std::vector<TimedEvent> merge_streams(std::vector<EventGenerator> generators) {
    struct Head {
        std::optional<TimedEvent> event;
        picos last = std::numeric_limits<picos>::min();
    };
    std::vector<Head> heads(generators.size());
    auto pull = [&](std::size_t i) {
        heads[i].event = generators[i]();
        if (heads[i].event) {
            heads[i].event->source = static_cast<int>(i);
            if (heads[i].event->t < heads[i].last)
                throw EngineFault("merge_streams: generator " + std::to_string(i) +
                                  " violated monotonicity");
            heads[i].last = heads[i].event->t;
        }
    };
    for (std::size_t i = 0; i < generators.size(); ++i) pull(i);

    std::vector<TimedEvent> merged;
    while (true) {
        std::size_t best = generators.size();
        for (std::size_t i = 0; i < generators.size(); ++i) {
            if (!heads[i].event) continue;
            if (best == generators.size() || heads[i].event->t < heads[best].event->t)
                best = i;
        }
        if (best == generators.size()) break;
        merged.push_back(*heads[best].event);
        pull(best);
    }
    return merged;
}

std::string event_log_csv(const EventLog& log) {
    std::string out = "t_recorded_s,t_physical_s,cause\n";
    for (const DetectionRecord& r : log.records) {
        out += format_seconds(r.t_recorded);
        out += ',';
        out += format_seconds(r.t_physical);
        out += ',';
        out += to_string(r.cause);
        out += '\n';
    }
    return out;
}

std::string event_log_meta(const EventLog& log) {
    const RunMeta& m = log.meta;
    std::ostringstream out;
    out << "seed=" << m.seed << '\n'
        << "duration_s=" << format_seconds(m.duration) << '\n'
        << "config_digest=" << m.config_digest << '\n'
        << "detections_total=" << m.total_detections() << '\n'
        << "detections_photon=" << m.detections_photon << '\n'
        << "detections_dark=" << m.detections_dark << '\n'
        << "detections_afterpulse=" << m.detections_afterpulse << '\n'
        << "photons_generated=" << m.photons_generated << '\n'
        << "photons_lost_unarmed=" << m.photons_lost_unarmed << '\n'
        << "photons_lost_bernoulli=" << m.photons_lost_bernoulli << '\n'
        << "darks_generated=" << m.darks_generated << '\n'
        << "darks_lost_unarmed=" << m.darks_lost_unarmed << '\n'
        << "releases_consumed=" << m.releases_consumed << '\n'
        << "releases_lost_unarmed=" << m.releases_lost_unarmed << '\n'
        << "releases_lost_bernoulli=" << m.releases_lost_bernoulli << '\n'
        << "traps_filled=" << m.traps_filled << '\n'
        << "traps_remaining=" << m.traps_remaining << '\n'
        << "armed_time_s=" << format_seconds(m.armed_time) << '\n'
        << "arm_count=" << m.arm_count << '\n';
    return out.str();
}

} // namespace spadsim
