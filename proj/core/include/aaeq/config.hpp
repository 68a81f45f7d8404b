#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aaeq/cmaeq.hpp"
#include "aaeq/fiberchan.hpp"
#include "aaeq/rxfrontend.hpp"
#include "aaeq/txchain.hpp"

namespace aaeq::runner {

enum class NoiseTarget {
    None,
    Sigma,        ///< per-component sigma added at the channel output
    ChannelEvm,   ///< EVM of the channel output
    ReceivedEvm,  ///< EVM after the receiver low-pass
};

struct NoiseSetting {
    NoiseTarget mode = NoiseTarget::None;
    double value = 0.0;
};

enum class JonesMode { Fixed, Random };

struct CprcSettings {
    double bl_norm = 1e-2;  // loop noise bandwidth / symbol rate
    double zeta = 0.707;
    double qvco_gain = 1e9;
    std::optional<double> kp;
    std::optional<double> ki;
    double lock_threshold = 0.35;
    int lock_window_symbols = 1000;
    int trace_decimation_symbols = 10;
};

struct MetricsSettings {
    /// Symbols at the end of the run used for every metric.
    std::size_t eval_symbols = 32768;
    int max_delay = 8;
    int eye_bins = 64;
    /// Also run the discrete-time reference CMA on the equalizer input.
    bool run_oracle = false;
};

struct ScenarioConfig {
    std::string name = "custom";
    std::uint64_t seed = 1;
    std::size_t n_symbols = 82768;
    int sps = 16;

    tx::TxConfig tx;
    fiber::ChannelConfig channel;
    JonesMode jones_mode = JonesMode::Random;
    NoiseSetting noise;
    rx::RxConfig rx;
    /// eq.symbol_rate follows tx.symbol_rate at run time.
    eq::EqConfig eq;
    CprcSettings cprc;
    MetricsSettings metrics;

    /// Recorded only.
    double received_power_dbm = std::numeric_limits<double>::quiet_NaN();

    void validate() const;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name.
ScenarioConfig preset(const std::string& name);

/// Canonical JSON text of a configuration (round-trips through parse_config).
std::string to_json_text(const ScenarioConfig& cfg, int indent = 2);

/// Parses a scenario document. A top-level "preset" key selects the base
/// configuration; every other key overrides it. Unknown keys are rejected
/// with a ConfigError naming the key path.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

/// Sets one dotted key path (e.g. "eq.beta") to a JSON value. Setting
/// eq.profile.integrator.dc_gain_db keeps the integrator's gain-bandwidth
/// product fixed.
void apply_override(ScenarioConfig& cfg, const std::string& key, const std::string& json_value);

} // namespace aaeq::runner
