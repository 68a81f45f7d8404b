#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aaeq/analogcells.hpp"
#include "aaeq/sigkit.hpp"

namespace aaeq::eq {

/// Tap vectors of the 2x2 butterfly. Row x uses (h_xx, h_xy), row y uses
/// (h_yx, h_yy); tap k multiplies the input delayed by k * tau_d.
struct ButterflyWeights {
    std::vector<cplx> h_xx, h_xy, h_yx, h_yy;

    ButterflyWeights() = default;
    explicit ButterflyWeights(std::size_t taps);

    std::size_t taps() const noexcept { return h_xx.size(); }
    /// Throws std::invalid_argument when the four vectors differ in length.
    void validate() const;
    /// Largest tap magnitude.
    double max_abs() const noexcept;
    /// 2x2 matrix of tap `k`, row-major {xx, xy, yx, yy}.
    std::array<cplx, 4> tap_matrix(std::size_t k) const;
};

struct EqConfig {
    double symbol_rate = 10e9;
    int L = 1;
    /// Tap spacing; 0 selects the delay cell's group delay when the profile
    /// defines one, else half a symbol.
    double tau_d = 0.0;
    /// Compensation delays; unset selects the profile's path delay sums.
    std::optional<double> tau_c;
    std::optional<double> tau_e;
    double residual_mismatch_c = 0.0;
    double residual_mismatch_e = 0.0;
    double beta = 1e6;  // 1/s
    double A = 1.0;
    analog::AnalogProfile profile = analog::AnalogProfile::ideal();
    double weight_max = 10.0 * 1.4142135623730951;

    int trace_decimation_symbols = 100;
    int cost_window_symbols = 1000;
    /// Steady-state windowed cost below which the run counts as converged.
    double convergence_cost = 0.25;

    bool restart_on_singularity = false;
    int max_restarts = 3;
    std::uint64_t restart_seed = 1;

    void validate() const;
    double resolved_tau_d() const;
    double resolved_tau_c() const;
    double resolved_tau_e() const;
    std::size_t center_tap() const noexcept { return static_cast<std::size_t>(L) / 2; }
};

struct EqualizerState {
    ButterflyWeights weights;
    double time = 0.0;
    bool initialized = false;

    /// Integrator outputs as 8*(L+1) reals: for each of xx, xy, yx, yy and
    /// each tap, (re, im).
    std::vector<double> integrator_states() const;
    void set_integrator_states(std::span<const double> v);
};

/// h_xx = h_yy = [1+j, 0, ...], cross filters zero.
EqualizerState reset(const EqConfig& cfg);

/// Eq. (1) at one instant from the tap-delayed input vectors.
std::pair<cplx, cplx> forward(const EqualizerState& s, std::span<const cplx> xbar,
                              std::span<const cplx> ybar);

/// eps = x_delayed * (A^2 - |x_now|^2).
inline cplx error_generate(cplx x_now, cplx x_delayed, double A) noexcept {
    return x_delayed * (A * A - std::norm(x_now));
}

/// Advances every weight integrator by one Euler step of
/// h' = -wc h + beta * eps * conj(tap input delayed by tau_c).
void update_step(EqualizerState& s, std::span<const cplx> xbar_c, std::span<const cplx> ybar_c,
                 cplx eps_x, cplx eps_y, const EqConfig& cfg, double dt);

/// Tap-delayed copies of `in`: element k has passed k delay cells.
std::vector<sigkit::Waveform> tap_bank(const sigkit::Waveform& in, const EqConfig& cfg);

/// Butterfly with fixed weights through the profile's multiplier and adder
/// models, without the output buffer.
sigkit::DualPolWaveform filter_frozen(const sigkit::DualPolWaveform& in,
                                      const ButterflyWeights& w, const EqConfig& cfg);

struct EqTrace {
    std::vector<double> times;
    std::vector<ButterflyWeights> weights;
    /// Mean (A^2 - |x_eq|^2)^2 over each decimation interval.
    std::vector<double> err_power_x, err_power_y;

    /// Same quantity over cost windows (cost_window_symbols long).
    std::vector<double> window_end_times;
    std::vector<double> window_cost;

    bool converged = false;
    std::optional<double> convergence_time;
    double final_cost = 0.0;

    bool singularity_detected = false;
    int restarts = 0;
    std::vector<std::string> warnings;

    ButterflyWeights final_weights;
    /// Tap average over the last 10% of the trace.
    ButterflyWeights steady_weights;
};

struct EqResult {
    sigkit::QuadWaveform out;
    EqTrace trace;
};

/// Full simulation at the waveform rate. Throws DivergenceError if any weight
/// magnitude exceeds cfg.weight_max.
EqResult run(const sigkit::QuadWaveform& quad, const EqConfig& cfg);

/// Post-hoc convergence analysis of the cost windows.
void analyze_convergence(EqTrace& trace, double threshold);

/// CSV: time, re/im of every tap (xx, xy, yx, yy order), err_power_x, err_power_y.
void write_trace_csv(std::ostream& os, const EqTrace& trace);

} // namespace aaeq::eq
