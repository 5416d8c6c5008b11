#include "spadsim/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "spadsim/analysis.hpp"
#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

using nlohmann::json;

double* param_field(DetectorParams& p, const std::string& name) {
    if (name == "v_breakdown") return &p.v_breakdown;
    if (name == "eta_max") return &p.eta_max;
    if (name == "eta_slope") return &p.eta_slope;
    if (name == "dark_n0") return &p.dark_n0;
    if (name == "dark_slope") return &p.dark_slope;
    if (name == "dark_activation") return &p.dark_activation;
    if (name == "trap_fill_per_ns") return &p.trap_fill_per_ns;
    if (name == "tau_trap_ref") return &p.tau_trap_ref;
    if (name == "trap_activation") return &p.trap_activation;
    if (name == "p_trigger") return &p.p_trigger;
    if (name == "jitter_fwhm") return &p.jitter_fwhm;
    return nullptr;
}

void clamp_params(DetectorParams& p) {
    p.eta_max = std::clamp(p.eta_max, 0.0, 1.0);
    p.p_trigger = std::clamp(p.p_trigger, 0.0, 1.0);
}

/// Paired open/closed runs at one dead-time; seeds depend only on the target
/// index, never on the parameters, so repeated evaluations are comparable.
struct PairedRates {
    double S = 0.0;
    double N = 0.0;
    double afterpulse = 0.0;
    double noise_corrected = 0.0;
};

PairedRates paired_rates(const DetectorParams& params, const ExperimentConfig& base,
                         double tau_d_s, double duration_s, std::uint64_t salt) {
    QuenchConfig quench = base.quench;
    if (quench.mode == QuenchMode::gated)
        quench.f_trig = 2.0 / tau_d_s;
    else
        quench.dead_time = seconds_to_picos(tau_d_s);

    EngineOptions opt;
    opt.traps_enabled = base.traps_enabled;
    opt.store_records = false;

    SimClock open_clock = make_clock(duration_s, derive_seed(base.seed, 1000 + salt));
    SimClock closed_clock = make_clock(duration_s, derive_seed(base.seed, 2000 + salt));
    const EventLog open_run =
        run(set_shutter(base.source, true), params, quench, open_clock, opt);
    const EventLog closed_run =
        run(set_shutter(base.source, false), params, quench, closed_clock, opt);

    PairedRates r;
    r.S = open_run.meta.total_detections() / duration_s;
    r.N = closed_run.meta.total_detections() / duration_s;
    if (open_run.meta.total_detections() > 0)
        r.afterpulse = afterpulse_fraction(open_run);
    if (quench.mode == QuenchMode::gated) {
        const double armed = closed_run.meta.armed_seconds();
        r.noise_corrected = armed > 0.0 ? closed_run.meta.total_detections() / armed : 0.0;
    } else {
        const double denom = 1.0 - r.N * tau_d_s;
        r.noise_corrected = denom > 0.0 ? r.N / denom : 0.0;
    }
    return r;
}

} // namespace

std::vector<double> evaluate_observables(const std::vector<CalibrationTarget>& targets,
                                         const DetectorParams& params,
                                         const ExperimentConfig& base,
                                         double eval_duration_s) {
    const double base_tau = picos_to_seconds(base.quench.effective_dead_time());

    // One paired simulation per distinct dead-time.
    std::map<double, PairedRates> cache;
    std::vector<double> out;
    out.reserve(targets.size());
    for (const CalibrationTarget& t : targets) {
        const double tau = t.tau_d > 0.0 ? t.tau_d : base_tau;
        auto it = cache.find(tau);
        if (it == cache.end()) {
            const std::uint64_t salt =
                static_cast<std::uint64_t>(std::llround(tau * 1e9));
            it = cache.emplace(tau, paired_rates(params, base, tau,
                                                 eval_duration_s, salt))
                     .first;
        }
        const PairedRates& r = it->second;
        if (t.observable == "eta_q") {
            out.push_back(quantum_efficiency(r.S, r.N, tau, base.source.mean_rate()));
        } else if (t.observable == "noise") {
            out.push_back(r.noise_corrected);
        } else if (t.observable == "afterpulse") {
            out.push_back(r.afterpulse);
        } else {
            throw ConfigError("calibrate: unknown observable '" + t.observable + "'");
        }
    }
    return out;
}

CalibrationSpec parse_calibration_spec(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("targets: JSON parse error: ") + e.what());
    }
    CalibrationSpec spec;
    if (root.contains("targets")) {
        for (const json& t : root.at("targets")) {
            CalibrationTarget target;
            target.observable = t.at("observable").get<std::string>();
            target.value = t.at("value").get<double>();
            target.tolerance = t.at("tolerance").get<double>();
            if (t.contains("tau_d")) target.tau_d = t.at("tau_d").get<double>();
            spec.targets.push_back(target);
        }
    }
    if (root.contains("search")) {
        spec.search.clear();
        for (const json& s : root.at("search"))
            spec.search.push_back(s.get<std::string>());
    }
    if (root.contains("eval_duration"))
        spec.eval_duration_s = root.at("eval_duration").get<double>();
    if (root.contains("max_sweeps"))
        spec.max_sweeps = root.at("max_sweeps").get<int>();
    return spec;
}

CalibrationSpec load_calibration_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("targets: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_calibration_spec(buf.str());
}

CalibrationResult calibrate(const CalibrationSpec& spec,
                            const ExperimentConfig& base) {
    CalibrationResult result;
    result.params = base.detector;
    if (spec.targets.empty()) {
        result.converged = true;
        return result;
    }
    for (const std::string& name : spec.search) {
        DetectorParams probe = base.detector;
        if (param_field(probe, name) == nullptr)
            throw ConfigError("calibrate: unknown search parameter '" + name + "'");
    }

    auto loss_of = [&](const std::vector<double>& achieved) {
        double loss = 0.0;
        for (std::size_t i = 0; i < spec.targets.size(); ++i) {
            const double scale =
                spec.targets[i].value != 0.0 ? spec.targets[i].value : 1.0;
            const double rel = (achieved[i] - spec.targets[i].value) / scale;
            loss += rel * rel;
        }
        return loss;
    };
    auto converged_on = [&](const std::vector<double>& achieved) {
        for (std::size_t i = 0; i < spec.targets.size(); ++i)
            if (std::abs(achieved[i] - spec.targets[i].value) >
                spec.targets[i].tolerance)
                return false;
        return true;
    };

    DetectorParams best = base.detector;
    std::vector<double> achieved =
        evaluate_observables(spec.targets, best, base, spec.eval_duration_s);
    double best_loss = loss_of(achieved);
    result.evaluations = 1;

    std::vector<double> steps(spec.search.size(), 0.3); // relative step sizes

    for (int sweep = 0; sweep < spec.max_sweeps && !converged_on(achieved);
         ++sweep) {
        bool improved = false;
        for (std::size_t pi = 0; pi < spec.search.size(); ++pi) {
            for (int dir : {+1, -1}) {
                DetectorParams trial = best;
                double* field = param_field(trial, spec.search[pi]);
                const double factor = 1.0 + dir * steps[pi];
                if (factor <= 0.0) continue;
                *field *= factor;
                clamp_params(trial);
                try {
                    trial.validate();
                } catch (const ConfigError&) {
                    continue;
                }
                std::vector<double> trial_achieved = evaluate_observables(
                    spec.targets, trial, base, spec.eval_duration_s);
                ++result.evaluations;
                const double trial_loss = loss_of(trial_achieved);
                if (trial_loss < best_loss) {
                    best = trial;
                    best_loss = trial_loss;
                    achieved = std::move(trial_achieved);
                    improved = true;
                    break; // keep this parameter's step; move on
                }
            }
        }
        if (!improved)
            for (double& s : steps) s *= 0.5;
    }

    result.params = best;
    result.achieved = achieved;
    result.loss = best_loss;
    result.residuals.resize(spec.targets.size());
    for (std::size_t i = 0; i < spec.targets.size(); ++i)
        result.residuals[i] = achieved[i] - spec.targets[i].value;
    result.converged = converged_on(achieved);
    return result;
}

std::string calibration_params_json(const DetectorParams& p) {
    json det;
    det["v_breakdown"] = p.v_breakdown;
    det["eta_max"] = p.eta_max;
    det["eta_slope"] = p.eta_slope;
    det["dark_n0"] = p.dark_n0;
    det["dark_slope"] = p.dark_slope;
    det["dark_activation"] = p.dark_activation;
    det["temperature"] = p.temperature;
    det["trap_fill_per_ns"] = p.trap_fill_per_ns;
    det["tau_trap_ref"] = p.tau_trap_ref;
    det["trap_activation"] = p.trap_activation;
    det["p_trigger"] = p.p_trigger;
    det["jitter_fwhm"] = p.jitter_fwhm;
    json root;
    root["detector"] = det;
    return root.dump(2) + "\n";
}

std::string calibration_report(const CalibrationSpec& spec,
                               const CalibrationResult& result) {
    std::ostringstream out;
    out << "converged=" << (result.converged ? "yes" : "no") << '\n'
        << "evaluations=" << result.evaluations << '\n'
        << "loss=" << result.loss << '\n';
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        const CalibrationTarget& t = spec.targets[i];
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "%s%s: target=%.6g achieved=%.6g residual=%+.6g "
                      "tolerance=%.6g %s\n",
                      t.observable.c_str(),
                      t.tau_d > 0.0
                          ? (" @tau_d=" + std::to_string(t.tau_d) + "s").c_str()
                          : "",
                      t.value, result.achieved.empty() ? 0.0 : result.achieved[i],
                      result.residuals.empty() ? 0.0 : result.residuals[i],
                      t.tolerance,
                      (result.residuals.empty() ||
                       std::abs(result.residuals[i]) <= t.tolerance)
                          ? "ok"
                          : "MISS");
        out << buf;
    }
    return out.str();
}

} // namespace spadsim
