#include "spadsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spadsim/errors.hpp"

namespace spadsim {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const char* block,
                         std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool found = false;
        for (const char* k : known)
            if (it.key() == k) {
                found = true;
                break;
            }
        if (!found)
            throw ConfigError(std::string("config: unknown key '") + it.key() +
                              "' in " + block);
    }
}

double get_number(const json& obj, const char* block, const char* key,
                  double fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required)
            throw ConfigError(std::string("config: missing key '") + key +
                              "' in " + block);
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError(std::string("config: key '") + key + "' in " + block +
                          " must be a number");
    return v.get<double>();
}

DetectorParams parse_detector(const json& obj) {
    reject_unknown_keys(obj, "detector",
                        {"v_breakdown", "eta_max", "eta_slope", "dark_n0",
                         "dark_slope", "dark_activation", "temperature",
                         "trap_fill_per_ns", "tau_trap_ref", "trap_activation",
                         "p_trigger", "jitter_fwhm"});
    DetectorParams d;
    d.v_breakdown = get_number(obj, "detector", "v_breakdown", d.v_breakdown);
    d.eta_max = get_number(obj, "detector", "eta_max", d.eta_max);
    d.eta_slope = get_number(obj, "detector", "eta_slope", d.eta_slope);
    d.dark_n0 = get_number(obj, "detector", "dark_n0", d.dark_n0);
    d.dark_slope = get_number(obj, "detector", "dark_slope", d.dark_slope);
    d.dark_activation =
        get_number(obj, "detector", "dark_activation", d.dark_activation);
    d.temperature = get_number(obj, "detector", "temperature", d.temperature);
    d.trap_fill_per_ns =
        get_number(obj, "detector", "trap_fill_per_ns", d.trap_fill_per_ns);
    d.tau_trap_ref = get_number(obj, "detector", "tau_trap_ref", d.tau_trap_ref);
    d.trap_activation =
        get_number(obj, "detector", "trap_activation", d.trap_activation);
    d.p_trigger = get_number(obj, "detector", "p_trigger", d.p_trigger);
    d.jitter_fwhm = get_number(obj, "detector", "jitter_fwhm", d.jitter_fwhm);
    return d;
}

QuenchConfig parse_quench(const json& obj) {
    reject_unknown_keys(obj, "quench",
                        {"mode", "f_trig", "gate_width", "dead_time",
                         "quench_latency", "v_on", "v_ref"});
    QuenchConfig q;
    if (!obj.contains("mode"))
        throw ConfigError("config: missing key 'mode' in quench");
    const std::string mode = obj.at("mode").get<std::string>();
    if (mode == "gated")
        q.mode = QuenchMode::gated;
    else if (mode == "free_running")
        q.mode = QuenchMode::free_running;
    else
        throw ConfigError("config: quench.mode must be 'gated' or 'free_running'");
    q.f_trig = get_number(obj, "quench", "f_trig", 0.0,
                          q.mode == QuenchMode::gated);
    if (obj.contains("gate_width"))
        q.gate_width = seconds_to_picos(get_number(obj, "quench", "gate_width", 0.0));
    if (obj.contains("dead_time"))
        q.dead_time = seconds_to_picos(get_number(obj, "quench", "dead_time", 0.0));
    q.quench_latency = seconds_to_picos(
        get_number(obj, "quench", "quench_latency",
                   picos_to_seconds(q.quench_latency)));
    q.v_on = get_number(obj, "quench", "v_on", q.v_on);
    q.v_ref = get_number(obj, "quench", "v_ref", q.v_ref);
    return q;
}

PhotonStream parse_source(const json& obj) {
    reject_unknown_keys(obj, "source",
                        {"kind", "rate_n", "f_trig", "mean_photons_per_pulse",
                         "envelope", "envelope_fwhm", "shutter_open"});
    if (!obj.contains("kind"))
        throw ConfigError("config: missing key 'kind' in source");
    const std::string kind = obj.at("kind").get<std::string>();
    PhotonStream s;
    if (kind == "cw") {
        s = make_cw_source(get_number(obj, "source", "rate_n", 0.0, true));
    } else if (kind == "pulsed") {
        s = make_pulsed_source(
            get_number(obj, "source", "f_trig", 0.0, true),
            get_number(obj, "source", "mean_photons_per_pulse", 0.0, true));
        if (obj.contains("envelope")) {
            const std::string env = obj.at("envelope").get<std::string>();
            if (env == "delta")
                s.envelope = PulseEnvelope::delta;
            else if (env == "gaussian")
                s.envelope = PulseEnvelope::gaussian;
            else
                throw ConfigError(
                    "config: source.envelope must be 'delta' or 'gaussian'");
        }
        s.envelope_fwhm = get_number(obj, "source", "envelope_fwhm", 0.0);
    } else if (kind == "dark") {
        s = make_dark_source();
    } else {
        throw ConfigError("config: source.kind must be 'cw', 'pulsed' or 'dark'");
    }
    if (obj.contains("shutter_open"))
        s.shutter_open = obj.at("shutter_open").get<bool>();
    return s;
}

} // namespace

void ExperimentConfig::validate() const {
    detector.validate();
    quench.validate(detector.v_breakdown);
    if (duration_s < 0.0) throw ConfigError("config: duration must be >= 0");
    if (experiment != ExperimentKind::single_run && sweep_points.empty())
        throw ConfigError("config: sweep experiments need sweep_points");
    if (experiment == ExperimentKind::sweep_bias)
        for (double v : sweep_points)
            if (v <= detector.v_breakdown)
                throw ConfigError("config: sweep_points bias below breakdown");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");
    reject_unknown_keys(root, "config",
                        {"detector", "quench", "source", "experiment",
                         "sweep_points", "duration", "seed", "outputs",
                         "traps_enabled"});

    ExperimentConfig c;
    if (root.contains("detector")) c.detector = parse_detector(root.at("detector"));
    if (!root.contains("quench"))
        throw ConfigError("config: missing block 'quench'");
    c.quench = parse_quench(root.at("quench"));
    if (!root.contains("source"))
        throw ConfigError("config: missing block 'source'");
    c.source = parse_source(root.at("source"));

    if (root.contains("experiment")) {
        const std::string e = root.at("experiment").get<std::string>();
        if (e == "single_run")
            c.experiment = ExperimentKind::single_run;
        else if (e == "sweep_dead_time")
            c.experiment = ExperimentKind::sweep_dead_time;
        else if (e == "sweep_bias")
            c.experiment = ExperimentKind::sweep_bias;
        else
            throw ConfigError("config: unknown experiment '" + e + "'");
    }
    if (root.contains("sweep_points")) {
        for (const json& v : root.at("sweep_points"))
            c.sweep_points.push_back(v.get<double>());
    }
    c.duration_s = get_number(root, "config", "duration", c.duration_s);
    if (root.contains("seed")) c.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("outputs")) {
        const json& o = root.at("outputs");
        reject_unknown_keys(o, "outputs", {"dir"});
        if (o.contains("dir")) c.out_dir = o.at("dir").get<std::string>();
    }
    if (root.contains("traps_enabled"))
        c.traps_enabled = root.at("traps_enabled").get<bool>();

    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json root;
    json det;
    det["v_breakdown"] = c.detector.v_breakdown;
    det["eta_max"] = c.detector.eta_max;
    det["eta_slope"] = c.detector.eta_slope;
    det["dark_n0"] = c.detector.dark_n0;
    det["dark_slope"] = c.detector.dark_slope;
    det["dark_activation"] = c.detector.dark_activation;
    det["temperature"] = c.detector.temperature;
    det["trap_fill_per_ns"] = c.detector.trap_fill_per_ns;
    det["tau_trap_ref"] = c.detector.tau_trap_ref;
    det["trap_activation"] = c.detector.trap_activation;
    det["p_trigger"] = c.detector.p_trigger;
    det["jitter_fwhm"] = c.detector.jitter_fwhm;
    root["detector"] = det;

    json q;
    q["mode"] = c.quench.mode == QuenchMode::gated ? "gated" : "free_running";
    if (c.quench.mode == QuenchMode::gated) {
        q["f_trig"] = c.quench.f_trig;
        q["gate_width"] = picos_to_seconds(c.quench.gate_width);
    } else {
        q["dead_time"] = picos_to_seconds(c.quench.dead_time);
    }
    q["quench_latency"] = picos_to_seconds(c.quench.quench_latency);
    q["v_on"] = c.quench.v_on;
    q["v_ref"] = c.quench.v_ref;
    root["quench"] = q;

    json s;
    switch (c.source.kind) {
        case SourceKind::cw:
            s["kind"] = "cw";
            s["rate_n"] = c.source.rate_n;
            break;
        case SourceKind::pulsed:
            s["kind"] = "pulsed";
            s["f_trig"] = c.source.f_trig;
            s["mean_photons_per_pulse"] = c.source.mean_photons_per_pulse;
            s["envelope"] =
                c.source.envelope == PulseEnvelope::delta ? "delta" : "gaussian";
            s["envelope_fwhm"] = c.source.envelope_fwhm;
            break;
        case SourceKind::dark:
            s["kind"] = "dark";
            break;
    }
    s["shutter_open"] = c.source.shutter_open;
    root["source"] = s;

    switch (c.experiment) {
        case ExperimentKind::single_run: root["experiment"] = "single_run"; break;
        case ExperimentKind::sweep_dead_time:
            root["experiment"] = "sweep_dead_time";
            break;
        case ExperimentKind::sweep_bias: root["experiment"] = "sweep_bias"; break;
    }
    if (!c.sweep_points.empty()) root["sweep_points"] = c.sweep_points;
    root["duration"] = c.duration_s;
    root["seed"] = c.seed;
    root["outputs"]["dir"] = c.out_dir;
    root["traps_enabled"] = c.traps_enabled;
    return root.dump(2) + "\n";
}

std::string config_digest(const ExperimentConfig& config) {
    // FNV-1a 64 over the canonical JSON rendering.
    const std::string text = config_to_json(config);
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace spadsim
