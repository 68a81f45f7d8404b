#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aaeq/cmaeq.hpp"
#include "aaeq/config.hpp"
#include "aaeq/cprc.hpp"
#include "aaeq/metrics.hpp"

namespace aaeq::runner {

inline constexpr const char* kReportSchema = "aaeq.run_report/1";

enum class RunStatus { Ok, Divergence, NoLock };

/// 0 ok, 2 divergence, 3 no lock (1 is reserved for configuration errors).
int exit_code(RunStatus s) noexcept;

struct StageMetrics {
    std::string stage;
    std::size_t N = 0;
    std::array<int, 2> sampling_phase{0, 0};
    std::array<double, 2> eye_height{0.0, 0.0};
    std::array<double, 2> eye_width{0.0, 0.0};
    bool data_aided = false;
    double evm_percent = 0.0;
    std::array<double, 2> evm_pol_percent{0.0, 0.0};
    double ber_estimate = 0.0;
    std::optional<metrics::Alignment> alignment;
    std::optional<double> ber_counted;
    std::size_t bit_errors = 0;
    std::size_t bits = 0;
    std::optional<double> modulus_error;

    std::vector<cplx> constellation_x, constellation_y;
    metrics::EyeStats eye_x, eye_y;
};

/// Post-equalizer EVMs with each polarization's static rotation removed.
struct OracleSummary {
    double evm_percent = 0.0;
    double analog_evm_percent = 0.0;
    double tap_distance = 0.0;
};

struct RunReport {
    RunStatus status = RunStatus::Ok;
    std::string message;
    std::vector<StageMetrics> stages;
    eq::EqTrace eq_trace;
    cprc::CprcTrace cprc_x, cprc_y;
    std::optional<OracleSummary> oracle;
    std::array<double, 2> agc_gain{1.0, 1.0};
    fiber::JonesAngles jones;
    double noise_sigma = 0.0;
    /// Canonical report document (schema kReportSchema).
    std::string json;

    const StageMetrics* stage(const std::string& name) const;
};

/// tx -> channel -> rx -> equalizer -> CPRC -> metrics. Configuration errors
/// throw ConfigError; divergence and failure to lock are reported in status.
RunReport run_scenario(const ScenarioConfig& cfg);

enum class ExportMode { Csv, Json, All };

/// report.json, taps.csv, cprc_trace.csv, constellation_<stage>.csv and eye_<stage>.csv.
void write_artifacts(const RunReport& r, const std::filesystem::path& dir, ExportMode mode);

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;  // JSON literals
};

using Assignment = std::vector<std::pair<std::string, std::string>>;

/// FNV-1a (64 bit) over the base seed as 8 little-endian bytes followed by
/// "key=value\n" for each assignment in axis order.
std::uint64_t derive_seed(std::uint64_t base_seed, const Assignment& assignment);

struct SweepRun {
    Assignment assignment;
    std::uint64_t seed = 0;
    RunReport report;
};

struct SweepOptions {
    /// Seed each run with derive_seed; otherwise every run uses the base seed.
    bool derive_seeds = true;
    /// Called after each run (e.g. to write its artifacts).
    std::function<void(std::size_t index, const SweepRun&)> on_run;
};

/// Cartesian product of the axes (first axis slowest). Every key is checked
/// against the base configuration before the first run. An empty grid gives
/// exactly the base run.
std::vector<SweepRun> sweep(const ScenarioConfig& base, const std::vector<SweepAxis>& grid,
                            const SweepOptions& opts = {});

/// One CSV row per run.
void write_sweep_summary(std::ostream& os, const std::vector<SweepAxis>& grid,
                         const std::vector<SweepRun>& runs);

} // namespace aaeq::runner
