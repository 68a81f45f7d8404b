#include "aaeq/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "aaeq/errors.hpp"

namespace aaeq::runner {

using json = nlohmann::ordered_json;

namespace {

// Strict object reader: every key must be consumed by get() or child().
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    std::string key_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    template <typename T>
    void get(const char* key, T& out) {
        if (!j_.contains(key)) {
            return;
        }
        seen_.insert(key);
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (v.is_null()) {
                    out = kInf;
                    return;
                }
                if (!v.is_number()) {
                    throw ConfigError("expected a number", key_path(key));
                }
                out = v.get<double>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) {
                    throw ConfigError("expected true or false", key_path(key));
                }
                out = v.get<bool>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) {
                    throw ConfigError("expected a string", key_path(key));
                }
                out = v.get<std::string>();
            } else {
                if (!v.is_number_integer()) {
                    throw ConfigError("expected an integer", key_path(key));
                }
                if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() &&
                    v.get<long long>() < 0) {
                    throw ConfigError("expected a non-negative integer", key_path(key));
                }
                out = v.get<T>();
            }
        } catch (const json::exception& e) {
            throw ConfigError(e.what(), key_path(key));
        }
    }

    template <typename T>
    void get_optional(const char* key, std::optional<T>& out) {
        if (!j_.contains(key)) {
            return;
        }
        if (j_.at(key).is_null()) {
            seen_.insert(key);
            out.reset();
            return;
        }
        T v{};
        get(key, v);
        out = v;
    }

    const json* child(const char* key) {
        if (!j_.contains(key)) {
            return nullptr;
        }
        seen_.insert(key);
        return &j_.at(key);
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) {
                throw ConfigError("unknown key", key_path(k.c_str()));
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* noise_name(NoiseTarget t) {
    switch (t) {
    case NoiseTarget::None:
        return "none";
    case NoiseTarget::Sigma:
        return "sigma";
    case NoiseTarget::ChannelEvm:
        return "channel_evm";
    case NoiseTarget::ReceivedEvm:
        return "received_evm";
    }
    return "none";
}

NoiseTarget noise_from(const std::string& s, const std::string& field) {
    if (s == "none") return NoiseTarget::None;
    if (s == "sigma") return NoiseTarget::Sigma;
    if (s == "channel_evm") return NoiseTarget::ChannelEvm;
    if (s == "received_evm") return NoiseTarget::ReceivedEvm;
    throw ConfigError("expected none, sigma, channel_evm or received_evm", field);
}

json cell_json(const analog::CellParams& c) {
    return {{"dc_gain_db", 20.0 * std::log10(c.dc_gain)},
            {"f3db", num(c.f3db)},
            {"group_delay", c.group_delay},
            {"nonlinearity_coeff", c.nonlinearity_coeff}};
}

void read_cell(const json& j, const std::string& path, analog::CellParams& c, bool hold_gbw) {
    Reader r(j, path);
    const double gbw = c.dc_gain * c.f3db;
    double db = 20.0 * std::log10(c.dc_gain);
    r.get("dc_gain_db", db);
    if (!std::isfinite(db)) {
        throw ConfigError("must be finite", path + ".dc_gain_db");
    }
    c.dc_gain = analog::db_to_linear(db);
    if (r.has("f3db")) {
        r.get("f3db", c.f3db);
    } else if (hold_gbw && std::isfinite(gbw)) {
        c.f3db = gbw / c.dc_gain;
    }
    r.get("group_delay", c.group_delay);
    r.get("nonlinearity_coeff", c.nonlinearity_coeff);
    r.finish();
}

json profile_json(const analog::AnalogProfile& p) {
    return {{"base", p.name},
            {"delay_cell", cell_json(p.delay_cell)},
            {"multiplier_port1", cell_json(p.multiplier_port1)},
            {"multiplier_port2", cell_json(p.multiplier_port2)},
            {"adder", cell_json(p.adder)},
            {"integrator", cell_json(p.integrator)},
            {"buffer", cell_json(p.buffer)},
            {"vmax", p.vmax}};
}

void read_profile(const json& j, const std::string& path, analog::AnalogProfile& p) {
    if (j.is_string()) {
        p = analog::AnalogProfile::named(j.get<std::string>());
        return;
    }
    Reader r(j, path);
    std::string base = p.name;
    r.get("base", base);
    if (r.has("base")) {
        p = analog::AnalogProfile::named(base);
    }
    const std::pair<const char*, analog::CellParams*> cells[] = {
        {"delay_cell", &p.delay_cell}, {"multiplier_port1", &p.multiplier_port1},
        {"multiplier_port2", &p.multiplier_port2}, {"adder", &p.adder},
        {"integrator", &p.integrator}, {"buffer", &p.buffer}};
    for (const auto& [key, cell] : cells) {
        if (const json* c = r.child(key)) {
            read_cell(*c, path + "." + key, *cell, std::string(key) == "integrator");
        }
    }
    r.get("vmax", p.vmax);
    r.finish();
}

json to_json(const ScenarioConfig& c) {
    json j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["n_symbols"] = c.n_symbols;
    j["sps"] = c.sps;
    j["tx"] = {{"symbol_rate", c.tx.symbol_rate},
               {"prbs_order", c.tx.prbs_order},
               {"seed_i", c.tx.seed_i},
               {"seed_q", c.tx.seed_q},
               {"phase_noise_seed", c.tx.phase_noise_seed},
               {"decorrelation_delay", c.tx.decorrelation_delay},
               {"laser_linewidth", c.tx.laser_linewidth},
               {"tx_bandwidth", num(c.tx.tx_bandwidth)},
               {"amplitude", c.tx.amplitude},
               {"pulse", c.tx.pulse == tx::PulseShape::Nrz ? "nrz" : "raised_cosine"},
               {"rolloff", c.tx.rolloff}};
    json jones = {{"mode", c.jones_mode == JonesMode::Random ? "random" : "fixed"},
                  {"theta", c.channel.jones.theta},
                  {"phi", c.channel.jones.phi},
                  {"psi", c.channel.jones.psi}};
    j["channel"] = {{"length_km", c.channel.length_km},
                    {"dispersion_D", c.channel.dispersion_D},
                    {"wavelength_nm", c.channel.wavelength_nm},
                    {"jones", jones},
                    {"dgd", c.channel.dgd},
                    {"attenuation", c.channel.attenuation},
                    {"lo_frequency_offset", c.channel.lo_frequency_offset},
                    {"lo_path_delay", c.channel.lo_path_delay}};
    j["noise"] = {{"mode", noise_name(c.noise.mode)}, {"value", c.noise.value}};
    j["rx"] = {{"lo_phase", c.rx.lo_phase},
               {"lo_linewidth", c.rx.lo_linewidth},
               {"shared_laser", c.rx.shared_laser},
               {"lo_phase_noise_seed", c.rx.lo_phase_noise_seed},
               {"agc_target", c.rx.agc_target},
               {"rx_bandwidth", c.rx.rx_bandwidth}};
    j["eq"] = {{"L", c.eq.L},
               {"tau_d", c.eq.tau_d},
               {"tau_c", c.eq.tau_c ? json(*c.eq.tau_c) : json(nullptr)},
               {"tau_e", c.eq.tau_e ? json(*c.eq.tau_e) : json(nullptr)},
               {"residual_mismatch_c", c.eq.residual_mismatch_c},
               {"residual_mismatch_e", c.eq.residual_mismatch_e},
               {"beta", c.eq.beta},
               {"A", c.eq.A},
               {"weight_max", c.eq.weight_max},
               {"trace_decimation_symbols", c.eq.trace_decimation_symbols},
               {"cost_window_symbols", c.eq.cost_window_symbols},
               {"convergence_cost", c.eq.convergence_cost},
               {"restart_on_singularity", c.eq.restart_on_singularity},
               {"max_restarts", c.eq.max_restarts},
               {"restart_seed", c.eq.restart_seed},
               {"profile", profile_json(c.eq.profile)}};
    j["cprc"] = {{"bl_norm", c.cprc.bl_norm},
                 {"zeta", c.cprc.zeta},
                 {"qvco_gain", c.cprc.qvco_gain},
                 {"kp", c.cprc.kp ? json(*c.cprc.kp) : json(nullptr)},
                 {"ki", c.cprc.ki ? json(*c.cprc.ki) : json(nullptr)},
                 {"lock_threshold", c.cprc.lock_threshold},
                 {"lock_window_symbols", c.cprc.lock_window_symbols},
                 {"trace_decimation_symbols", c.cprc.trace_decimation_symbols}};
    j["metrics"] = {{"eval_symbols", c.metrics.eval_symbols},
                    {"max_delay", c.metrics.max_delay},
                    {"eye_bins", c.metrics.eye_bins},
                    {"run_oracle", c.metrics.run_oracle}};
    j["metadata"] = {{"received_power_dbm", std::isnan(c.received_power_dbm) ? json(nullptr)
                                                                               : json(c.received_power_dbm)}};
    return j;
}

void read_into(const json& j, ScenarioConfig& c) {
    Reader r(j, "");
    std::string preset_name;
    r.get("preset", preset_name);
    if (!preset_name.empty()) {
        c = preset(preset_name);
    }
    r.get("name", c.name);
    r.get("seed", c.seed);
    r.get("n_symbols", c.n_symbols);
    r.get("sps", c.sps);

    if (const json* t = r.child("tx")) {
        Reader s(*t, "tx");
        s.get("symbol_rate", c.tx.symbol_rate);
        s.get("prbs_order", c.tx.prbs_order);
        s.get("seed_i", c.tx.seed_i);
        s.get("seed_q", c.tx.seed_q);
        s.get("phase_noise_seed", c.tx.phase_noise_seed);
        s.get("decorrelation_delay", c.tx.decorrelation_delay);
        s.get("laser_linewidth", c.tx.laser_linewidth);
        s.get("tx_bandwidth", c.tx.tx_bandwidth);
        s.get("amplitude", c.tx.amplitude);
        std::string pulse = c.tx.pulse == tx::PulseShape::Nrz ? "nrz" : "raised_cosine";
        s.get("pulse", pulse);
        if (pulse == "nrz") {
            c.tx.pulse = tx::PulseShape::Nrz;
        } else if (pulse == "raised_cosine") {
            c.tx.pulse = tx::PulseShape::RaisedCosine;
        } else {
            throw ConfigError("expected nrz or raised_cosine", "tx.pulse");
        }
        s.get("rolloff", c.tx.rolloff);
        s.finish();
    }
    if (const json* ch = r.child("channel")) {
        Reader s(*ch, "channel");
        s.get("length_km", c.channel.length_km);
        s.get("dispersion_D", c.channel.dispersion_D);
        s.get("wavelength_nm", c.channel.wavelength_nm);
        if (const json* jj = s.child("jones")) {
            Reader q(*jj, "channel.jones");
            std::string mode = c.jones_mode == JonesMode::Random ? "random" : "fixed";
            q.get("mode", mode);
            if (mode == "random") {
                c.jones_mode = JonesMode::Random;
            } else if (mode == "fixed") {
                c.jones_mode = JonesMode::Fixed;
            } else {
                throw ConfigError("expected random or fixed", "channel.jones.mode");
            }
            q.get("theta", c.channel.jones.theta);
            q.get("phi", c.channel.jones.phi);
            q.get("psi", c.channel.jones.psi);
            q.finish();
        }
        s.get("dgd", c.channel.dgd);
        s.get("attenuation", c.channel.attenuation);
        s.get("lo_frequency_offset", c.channel.lo_frequency_offset);
        s.get("lo_path_delay", c.channel.lo_path_delay);
        s.finish();
    }
    if (const json* n = r.child("noise")) {
        Reader s(*n, "noise");
        std::string mode = noise_name(c.noise.mode);
        s.get("mode", mode);
        c.noise.mode = noise_from(mode, "noise.mode");
        s.get("value", c.noise.value);
        s.finish();
    }
    if (const json* x = r.child("rx")) {
        Reader s(*x, "rx");
        s.get("lo_phase", c.rx.lo_phase);
        s.get("lo_linewidth", c.rx.lo_linewidth);
        s.get("shared_laser", c.rx.shared_laser);
        s.get("lo_phase_noise_seed", c.rx.lo_phase_noise_seed);
        s.get("agc_target", c.rx.agc_target);
        s.get("rx_bandwidth", c.rx.rx_bandwidth);
        s.finish();
    }
    if (const json* e = r.child("eq")) {
        Reader s(*e, "eq");
        s.get("L", c.eq.L);
        s.get("tau_d", c.eq.tau_d);
        s.get_optional("tau_c", c.eq.tau_c);
        s.get_optional("tau_e", c.eq.tau_e);
        s.get("residual_mismatch_c", c.eq.residual_mismatch_c);
        s.get("residual_mismatch_e", c.eq.residual_mismatch_e);
        s.get("beta", c.eq.beta);
        s.get("A", c.eq.A);
        s.get("weight_max", c.eq.weight_max);
        s.get("trace_decimation_symbols", c.eq.trace_decimation_symbols);
        s.get("cost_window_symbols", c.eq.cost_window_symbols);
        s.get("convergence_cost", c.eq.convergence_cost);
        s.get("restart_on_singularity", c.eq.restart_on_singularity);
        s.get("max_restarts", c.eq.max_restarts);
        s.get("restart_seed", c.eq.restart_seed);
        if (const json* p = s.child("profile")) {
            read_profile(*p, "eq.profile", c.eq.profile);
        }
        s.finish();
    }
    if (const json* p = r.child("cprc")) {
        Reader s(*p, "cprc");
        s.get("bl_norm", c.cprc.bl_norm);
        s.get("zeta", c.cprc.zeta);
        s.get("qvco_gain", c.cprc.qvco_gain);
        s.get_optional("kp", c.cprc.kp);
        s.get_optional("ki", c.cprc.ki);
        s.get("lock_threshold", c.cprc.lock_threshold);
        s.get("lock_window_symbols", c.cprc.lock_window_symbols);
        s.get("trace_decimation_symbols", c.cprc.trace_decimation_symbols);
        s.finish();
    }
    if (const json* m = r.child("metrics")) {
        Reader s(*m, "metrics");
        s.get("eval_symbols", c.metrics.eval_symbols);
        s.get("max_delay", c.metrics.max_delay);
        s.get("eye_bins", c.metrics.eye_bins);
        s.get("run_oracle", c.metrics.run_oracle);
        s.finish();
    }
    if (const json* m = r.child("metadata")) {
        Reader s(*m, "metadata");
        if (s.has("received_power_dbm") && m->at("received_power_dbm").is_null()) {
            s.child("received_power_dbm");
            c.received_power_dbm = std::numeric_limits<double>::quiet_NaN();
        } else {
            s.get("received_power_dbm", c.received_power_dbm);
        }
        s.finish();
    }
    r.finish();
}

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
}

// Fiber group delay for the LO path difference (group index 1.468).
double fiber_delay(double km) { return km * 1e3 * 1.468 / fiber::kSpeedOfLight; }

} // namespace

void ScenarioConfig::validate() const {
    if (n_symbols < 1000) {
        throw ConfigError("must be at least 1000", "n_symbols");
    }
    if (sps < 2) {
        throw ConfigError("must be at least 2", "sps");
    }
    tx.validate();
    channel.validate();
    rx.validate();
    eq::EqConfig e = eq;
    e.symbol_rate = tx.symbol_rate;
    e.validate();
    const double fs = tx.symbol_rate * sps;
    const auto& p = e.profile;
    for (const auto* c : {&p.delay_cell, &p.multiplier_port1, &p.multiplier_port2, &p.adder, &p.buffer}) {
        if (std::isfinite(c->f3db) && c->f3db >= 0.5 * fs) {
            throw ConfigError("an analog cell bandwidth is at or above the Nyquist rate; raise sps", "sps");
        }
    }
    if (2.0 * kPi * p.integrator.f3db / fs >= 2.0) {
        throw ConfigError("integrator corner too high for the sample rate", "eq.profile.integrator.f3db");
    }
    if (noise.value < 0.0) {
        throw ConfigError("must be non-negative", "noise.value");
    }
    if (!(cprc.bl_norm > 0.0)) {
        throw ConfigError("must be positive", "cprc.bl_norm");
    }
    if (!(cprc.zeta > 0.0)) {
        throw ConfigError("must be positive", "cprc.zeta");
    }
    if (!(cprc.qvco_gain > 0.0)) {
        throw ConfigError("must be positive", "cprc.qvco_gain");
    }
    if (cprc.lock_window_symbols < 1) {
        throw ConfigError("must be at least 1", "cprc.lock_window_symbols");
    }
    if (metrics.eval_symbols < 1000) {
        throw ConfigError("must be at least 1000", "metrics.eval_symbols");
    }
    if (metrics.max_delay < 0) {
        throw ConfigError("must be non-negative", "metrics.max_delay");
    }
    if (metrics.eye_bins < 1) {
        throw ConfigError("must be positive", "metrics.eye_bins");
    }
}

std::vector<std::string> preset_names() { return {"b2b_40g", "smf5km_40g", "smf10km_40g", "smf5km_100g"}; }

ScenarioConfig preset(const std::string& name) {
    ScenarioConfig c;
    c.name = name;
    c.eq.profile = analog::AnalogProfile::paper();
    c.tx.laser_linewidth = 100e3;
    c.rx.lo_linewidth = 100e3;
    c.rx.shared_laser = true;
    c.noise.mode = NoiseTarget::ReceivedEvm;
    if (name == "b2b_40g") {
        c.rx.lo_phase = 0.2;
        c.noise.value = 0.27;
        c.received_power_dbm = -7.2;
    } else if (name == "smf5km_40g") {
        c.channel.length_km = 5.0;
        c.channel.lo_frequency_offset = 30e6;
        c.channel.lo_path_delay = fiber_delay(5.0);
        c.noise.value = 0.31;
        c.received_power_dbm = -10.4;
    } else if (name == "smf10km_40g") {
        c.channel.length_km = 10.0;
        c.channel.lo_frequency_offset = 50e6;
        c.channel.lo_path_delay = fiber_delay(10.0);
        c.noise.value = 0.33;
        c.received_power_dbm = -11.6;
    } else if (name == "smf5km_100g") {
        c.tx.symbol_rate = 25e9;
        c.tx.pulse = tx::PulseShape::RaisedCosine;
        c.tx.rolloff = 0.2;
        c.tx.tx_bandwidth = 40e9;
        c.channel.length_km = 5.0;
        c.channel.lo_frequency_offset = 30e6;
        c.channel.lo_path_delay = fiber_delay(5.0);
        c.noise.value = 0.25;
    } else {
        std::string known;
        for (const auto& n : preset_names()) {
            known += (known.empty() ? "" : ", ") + n;
        }
        throw ConfigError("unknown preset '" + name + "' (known: " + known + ")", "preset");
    }
    return c;
}

std::string to_json_text(const ScenarioConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

ScenarioConfig parse_config(const std::string& json_text) {
    ScenarioConfig c;
    read_into(parse_text(json_text), c);
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file '" + path + "'", "scenario");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& json_value) {
    if (key.empty() || key == "preset") {
        throw ConfigError("cannot be overridden", key.empty() ? "<empty key>" : key);
    }
    const json value = parse_text(json_value);
    json doc = to_json(cfg);
    json* node = &doc;
    std::string path;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = key.find('.', pos);
        const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        path = path.empty() ? part : path + "." + part;
        if (!node->is_object() || !node->contains(part)) {
            throw ConfigError("unknown key", path);
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        pos = dot + 1;
    }
    if (key == "eq.profile.integrator.dc_gain_db") {
        doc["eq"]["profile"]["integrator"].erase("f3db");
        // Re-read the integrator on top of the current gain-bandwidth product.
        ScenarioConfig base = cfg;
        json only = {{"eq", {{"profile", {{"integrator", doc["eq"]["profile"]["integrator"]}}}}}};
        read_into(only, base);
        doc["eq"]["profile"]["integrator"]["f3db"] = num(base.eq.profile.integrator.f3db);
    }
    if (key == "eq.profile" || key == "eq.profile.base") {
        // A new base replaces every cell.
        const json p = key == "eq.profile" ? value : json(value);
        ScenarioConfig fresh = cfg;
        if (key == "eq.profile") {
            read_profile(p, "eq.profile", fresh.eq.profile);
        } else {
            if (!p.is_string()) {
                throw ConfigError("expected a string", key);
            }
            fresh.eq.profile = analog::AnalogProfile::named(p.get<std::string>());
        }
        doc["eq"]["profile"] = profile_json(fresh.eq.profile);
    }
    ScenarioConfig out;
    read_into(doc, out);
    cfg = std::move(out);
}

} // namespace aaeq::runner
