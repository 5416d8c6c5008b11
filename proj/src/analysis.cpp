#include "spadsim/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "spadsim/errors.hpp"

namespace spadsim {

double quantum_efficiency(double S, double N, double tau_d, double n) {
    if (n <= 0.0) throw EstimatorError("quantum_efficiency: n must be > 0");
    if (S < 0.0 || N < 0.0)
        throw EstimatorError("quantum_efficiency: rates must be >= 0");
    if (tau_d < 0.0) throw EstimatorError("quantum_efficiency: tau_d must be >= 0");
    if (S * tau_d >= 1.0)
        throw EstimatorError(
            "quantum_efficiency: signal rate saturates the dead-time correction "
            "(S*tau_d >= 1)");
    if (N * tau_d >= 1.0)
        throw EstimatorError(
            "quantum_efficiency: noise rate saturates the dead-time correction "
            "(N*tau_d >= 1)");
    return (S / (1.0 - S * tau_d) - N / (1.0 - N * tau_d)) / n;
}

double effective_efficiency(double S, double N, double n) {
    if (n <= 0.0) throw EstimatorError("effective_efficiency: n must be > 0");
    return (S - N) / n;
}

double quantum_efficiency_sigma(std::uint64_t counts_open,
                                std::uint64_t counts_closed, double duration_s,
                                double tau_d, double n) {
    if (duration_s <= 0.0 || n <= 0.0) return 0.0;
    const double S = static_cast<double>(counts_open) / duration_s;
    const double N = static_cast<double>(counts_closed) / duration_s;
    const double sigma_S = std::sqrt(static_cast<double>(counts_open)) / duration_s;
    const double sigma_N = std::sqrt(static_cast<double>(counts_closed)) / duration_s;
    const double dS = 1.0 / ((1.0 - S * tau_d) * (1.0 - S * tau_d));
    const double dN = 1.0 / ((1.0 - N * tau_d) * (1.0 - N * tau_d));
    return std::sqrt(sigma_S * dS * sigma_S * dS + sigma_N * dN * sigma_N * dN) / n;
}

double afterpulse_fraction(const EventLog& log) {
    const std::uint64_t total = log.meta.total_detections();
    if (total == 0)
        throw EstimatorError("afterpulse_fraction: undefined on an empty log");
    return static_cast<double>(log.meta.detections_afterpulse) /
           static_cast<double>(total);
}

std::vector<double> afterpulse_fraction_blind(const std::vector<NoisePoint>& curve) {
    const std::size_t n = curve.size();
    if (n < 3)
        throw EstimatorError(
            "afterpulse_fraction_blind: need at least 3 dead-time points");
    for (std::size_t i = 1; i < n; ++i)
        if (!(curve[i].x > curve[i - 1].x))
            throw EstimatorError(
                "afterpulse_fraction_blind: dead-times must increase strictly");

    // Plateau: the longest tail whose points are pairwise compatible within
    // twice their combined statistical error.
    std::size_t plateau = 0;
    for (std::size_t k = 2; k <= n; ++k) {
        bool ok = true;
        for (std::size_t i = n - k; ok && i < n; ++i) {
            for (std::size_t j = i + 1; ok && j < n; ++j) {
                const double tol =
                    2.0 * std::sqrt(curve[i].sigma * curve[i].sigma +
                                    curve[j].sigma * curve[j].sigma);
                if (std::abs(curve[i].noise - curve[j].noise) > tol) ok = false;
            }
        }
        if (ok)
            plateau = k;
        else
            break;
    }
    if (plateau < 2)
        throw EstimatorError("afterpulse_fraction_blind: no plateau detected");

    double floor = 0.0;
    for (std::size_t i = n - plateau; i < n; ++i) floor += curve[i].noise;
    floor /= static_cast<double>(plateau);

    std::vector<double> fractions(n);
    for (std::size_t i = 0; i < n; ++i)
        fractions[i] = (curve[i].noise - floor) / curve[i].noise;
    return fractions;
}

std::vector<double> afterpulse_fraction_blind(const SweepResult& sweep) {
    if (sweep.axis != SweepAxis::dead_time)
        throw EstimatorError("afterpulse_fraction_blind: sweep axis must be dead_time");
    std::vector<NoisePoint> curve;
    curve.reserve(sweep.points.size());
    for (const SweepPoint& p : sweep.points)
        curve.push_back(NoisePoint{p.x, p.report.noise_corrected,
                                   p.report.sigma_noise_corrected});
    return afterpulse_fraction_blind(curve);
}

namespace {

struct NoiseEstimate {
    double corrected = 0.0;
    double sigma = 0.0;
};

/// Dead-time-free noise estimate from a shuttered run: counts per armed
/// second in gated mode (the armed-time integral is exact), the
/// non-paralyzable inversion N/(1 - N tau_d) in free-running mode.
NoiseEstimate corrected_noise(const RunMeta& meta, double tau_d,
                              QuenchMode mode) {
    NoiseEstimate est;
    const double counts = static_cast<double>(meta.total_detections());
    if (mode == QuenchMode::gated) {
        const double armed_s = meta.armed_seconds();
        if (armed_s <= 0.0) return est;
        est.corrected = counts / armed_s;
        est.sigma = std::sqrt(counts) / armed_s;
        return est;
    }
    const double T = meta.duration_seconds();
    if (T <= 0.0) return est;
    const double raw = counts / T;
    const double denom = 1.0 - raw * tau_d;
    if (denom <= 0.0)
        throw EstimatorError("corrected_noise: rate saturates the correction");
    est.corrected = raw / denom;
    est.sigma = (std::sqrt(counts) / T) / (denom * denom);
    return est;
}

unsigned worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 2 : hw;
}

/// Run f(i) for i in [0, n) on a small pool; results land in index order.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename F>
void parallel_for_index(std::size_t n, F&& f) {
    const unsigned workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace

EfficiencyReport report_from_runs(const EventLog& open_run,
                                  const EventLog& closed_run, double photon_rate,
                                  double tau_d_s, const QuenchConfig& quench) {
    EfficiencyReport r;
    const double T = open_run.meta.duration_seconds();
    r.duration_s = T;
    r.photon_rate = photon_rate;
    r.tau_d = tau_d_s;
    r.signal_rate = T > 0.0 ? open_run.meta.total_detections() / T : 0.0;
    r.noise_rate = T > 0.0 ? closed_run.meta.total_detections() / T : 0.0;
    r.eta_q = quantum_efficiency(r.signal_rate, r.noise_rate, tau_d_s, photon_rate);
    r.eta_eff = effective_efficiency(r.signal_rate, r.noise_rate, photon_rate);
    r.eta_eff_negative = r.eta_eff < 0.0;
    r.stat_uncertainty = quantum_efficiency_sigma(
        open_run.meta.total_detections(), closed_run.meta.total_detections(), T,
        tau_d_s, photon_rate);
    if (open_run.meta.total_detections() > 0)
        r.afterpulse_fraction = afterpulse_fraction(open_run);
    const NoiseEstimate noise =
        corrected_noise(closed_run.meta, tau_d_s, quench.mode);
    r.noise_corrected = noise.corrected;
    r.sigma_noise_corrected = noise.sigma;
    return r;
}

SweepResult sweep_dead_time(const SweepConditions& conditions,
                            const std::vector<double>& tau_list) {
    if (tau_list.empty())
        throw ConfigError("sweep_dead_time: empty dead-time list");
    for (std::size_t i = 0; i < tau_list.size(); ++i) {
        if (tau_list[i] <= 0.0)
            throw ConfigError("sweep_dead_time: dead-times must be > 0");
        if (i > 0 && !(tau_list[i] > tau_list[i - 1]))
            throw ConfigError("sweep_dead_time: dead-times must increase strictly");
    }

    SweepResult result;
    result.axis = SweepAxis::dead_time;
    result.temperature = conditions.detector.temperature;
    result.mode = conditions.quench.mode;
    result.points.resize(tau_list.size());

    parallel_for_index(tau_list.size(), [&](std::size_t i) {
        const double tau = tau_list[i];
        QuenchConfig quench = conditions.quench;
        if (quench.mode == QuenchMode::gated) {
            quench.f_trig = 2.0 / tau;
            if (quench.gate_width >= quench.period())
                throw ConfigError(
                    "sweep_dead_time: gate width incompatible with dead-time");
        } else {
            quench.dead_time = seconds_to_picos(tau);
        }

        PhotonStream shuttered = set_shutter(conditions.source, false);
        SimClock clock = make_clock(conditions.duration_s,
                                    derive_seed(conditions.seed, i));
        EngineOptions opt;
        opt.traps_enabled = conditions.traps_enabled;
        opt.store_records = false;
        const EventLog log =
            run(shuttered, conditions.detector, quench, clock, opt);

        EfficiencyReport rep;
        rep.duration_s = conditions.duration_s;
        rep.tau_d = tau;
        const double T = log.meta.duration_seconds();
        rep.noise_rate = T > 0.0 ? log.meta.total_detections() / T : 0.0;
        rep.signal_rate = rep.noise_rate; // shuttered: the same run
        if (log.meta.total_detections() > 0)
            rep.afterpulse_fraction = afterpulse_fraction(log);
        const NoiseEstimate noise = corrected_noise(log.meta, tau, quench.mode);
        rep.noise_corrected = noise.corrected;
        rep.sigma_noise_corrected = noise.sigma;
        result.points[i] = SweepPoint{tau, rep};
    });
    return result;
}

SweepResult sweep_bias(const SweepConditions& conditions,
                       const std::vector<double>& v_list) {
    if (v_list.empty()) throw ConfigError("sweep_bias: empty bias list");
    for (std::size_t i = 0; i < v_list.size(); ++i) {
        if (v_list[i] <= conditions.detector.v_breakdown)
            throw ConfigError("sweep_bias: bias below the breakdown voltage");
        if (i > 0 && !(v_list[i] > v_list[i - 1]))
            throw ConfigError("sweep_bias: biases must increase strictly");
    }
    const double n = conditions.source.mean_rate();
    if (n <= 0.0)
        throw ConfigError("sweep_bias: source must deliver photons (n > 0)");

    SweepResult result;
    result.axis = SweepAxis::bias_voltage;
    result.temperature = conditions.detector.temperature;
    result.mode = conditions.quench.mode;
    result.points.resize(v_list.size());

    parallel_for_index(v_list.size(), [&](std::size_t i) {
        QuenchConfig quench = conditions.quench;
        quench.v_on = v_list[i];
        const double tau = picos_to_seconds(quench.effective_dead_time());

        EngineOptions opt;
        opt.traps_enabled = conditions.traps_enabled;
        opt.store_records = false;

        SimClock open_clock = make_clock(conditions.duration_s,
                                         derive_seed(conditions.seed, 2 * i));
        SimClock closed_clock = make_clock(conditions.duration_s,
                                           derive_seed(conditions.seed, 2 * i + 1));
        const EventLog open_run = run(set_shutter(conditions.source, true),
                                      conditions.detector, quench, open_clock, opt);
        const EventLog closed_run = run(set_shutter(conditions.source, false),
                                        conditions.detector, quench, closed_clock, opt);
        result.points[i] =
            SweepPoint{v_list[i],
                       report_from_runs(open_run, closed_run, n, tau, quench)};
    });
    return result;
}

std::string sweep_csv(const SweepResult& sweep) {
    std::string out = "x,eta_q,eta_eff,S,N,afterpulse_fraction,sigma_eta_q\n";
    char buf[256];
    for (const SweepPoint& p : sweep.points) {
        const EfficiencyReport& r = p.report;
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                      p.x, r.eta_q, r.eta_eff, r.signal_rate, r.noise_rate,
                      r.afterpulse_fraction, r.stat_uncertainty);
        out += buf;
    }
    return out;
}

} // namespace spadsim
