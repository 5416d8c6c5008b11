#ifndef SPADSIM_ANALYSIS_HPP
#define SPADSIM_ANALYSIS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "spadsim/event_engine.hpp"
#include "spadsim/photon_source.hpp"
#include "spadsim/quench_fsm.hpp"

namespace spadsim {

/// Estimator outputs for one operating point. S and N are the raw observed
/// rates (counts per wall second, shutter open / closed); eta_q applies the
/// dead-time correction, eta_eff does not.
struct EfficiencyReport {
    double eta_q = 0.0;
    double eta_eff = 0.0;
    double signal_rate = 0.0;  // S, counts/s
    double noise_rate = 0.0;   // N, counts/s
    double photon_rate = 0.0;  // n, photons/s sent
    double tau_d = 0.0;        // seconds
    double afterpulse_fraction = 0.0;
    double stat_uncertainty = 0.0;  // 1 sigma on eta_q
    bool eta_eff_negative = false;  // noise fluctuation drove S below N

    // Derived quantities kept for downstream estimators; not part of the
    // sweep CSV schema.
    double noise_corrected = 0.0;       // dead-time-free noise rate estimate
    double sigma_noise_corrected = 0.0; // 1 sigma on noise_corrected
    double duration_s = 0.0;
};

enum class SweepAxis { dead_time, bias_voltage };

struct SweepPoint {
    double x = 0.0; // dead-time in seconds, or bias voltage in volts
    EfficiencyReport report;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::dead_time;
    std::vector<SweepPoint> points; // x strictly increasing
    double temperature = 0.0;       // fixed-condition metadata
    QuenchMode mode = QuenchMode::free_running;
};

/// Dead-time-corrected quantum efficiency,
/// [S/(1 - S tau_d) - N/(1 - N tau_d)] / n. Rates saturating the correction
/// (S tau_d >= 1 or N tau_d >= 1) are outside the estimator domain.
double quantum_efficiency(double S, double N, double tau_d, double n);

/// Uncorrected efficiency (S - N)/n. May be negative under noise
/// fluctuations; callers get the value as-is.
double effective_efficiency(double S, double N, double n);

/// 1-sigma uncertainty of the eta_q estimate, from Poisson errors on the raw
/// counts propagated through the correction by the first-order delta method.
double quantum_efficiency_sigma(std::uint64_t counts_open,
                                std::uint64_t counts_closed, double duration_s,
                                double tau_d, double n);

/// Ground-truth afterpulse fraction of a run: afterpulse-cause detections
/// over all detections. Undefined (signalled) on an empty log.
double afterpulse_fraction(const EventLog& log);

/// One point of a noise-vs-dead-time curve, as seen by the blind estimator.
struct NoisePoint {
    double x = 0.0;     // dead-time, seconds
    double noise = 0.0; // dead-time-free noise rate estimate
    double sigma = 0.0; // 1 sigma on noise
};

/// Blind (cause-label-free) afterpulse excess per point:
/// (N(tau) - N_inf) / N(tau), with N_inf the mean over the plateau at the
/// largest dead-times. The plateau is the maximal run of trailing points
/// (k >= 2) whose pairwise differences all stay within twice their combined
/// sigma. No plateau is an estimator error.
std::vector<double> afterpulse_fraction_blind(const std::vector<NoisePoint>& curve);

/// Adapter over a dead-time sweep result.
std::vector<double> afterpulse_fraction_blind(const SweepResult& sweep);

/// Fixed experiment conditions shared by the sweep drivers.
struct SweepConditions {
    DetectorParams detector;
    QuenchConfig quench;
    PhotonStream source;
    double duration_s = 10.0;
    std::uint64_t seed = 1;
    bool traps_enabled = true;
};

/// Noise vs dead-time at fixed bias (shuttered source). Gated mode maps
/// tau_d to f_trig = 2 / tau_d. Reports carry the raw wall rate in
/// noise_rate and the dead-time-free estimate in noise_corrected (Eq.-style
/// inversion when free-running, counts per armed second when gated).
SweepResult sweep_dead_time(const SweepConditions& conditions,
                            const std::vector<double>& tau_list);

/// Efficiency and noise vs bias voltage: paired shutter-open/closed runs per
/// point. All biases must sit above breakdown and increase strictly.
SweepResult sweep_bias(const SweepConditions& conditions,
                       const std::vector<double>& v_list);

/// Build a report from a paired pair of runs.
EfficiencyReport report_from_runs(const EventLog& open_run,
                                  const EventLog& closed_run, double photon_rate,
                                  double tau_d_s, const QuenchConfig& quench);

/// CSV with header `x,eta_q,eta_eff,S,N,afterpulse_fraction,sigma_eta_q`.
std::string sweep_csv(const SweepResult& sweep);

} // namespace spadsim

#endif
