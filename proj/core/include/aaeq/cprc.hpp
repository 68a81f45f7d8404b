#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "aaeq/sigkit.hpp"

namespace aaeq::cprc {

struct CprcConfig {
    double kp = 0.0;          // proportional gain
    double ki = 0.0;          // integral gain (1/s)
    double qvco_gain = 1e9;   // Hz per unit control
    double A = 1.0;
    double symbol_rate = 10e9;
    bool per_polarization = true;
    /// Lock when the RMS detector output over lock_window_symbols stays below this.
    double lock_threshold = 0.35;
    int lock_window_symbols = 1000;
    int trace_decimation_symbols = 10;

    void validate() const;

    /// Second-order type-II loop for noise bandwidth bl_norm * symbol_rate.
    static CprcConfig design(double symbol_rate, double bl_norm = 1e-2, double zeta = 0.707,
                             double qvco_gain = 1e9);
};

/// Nearest QPSK point of modulus A. Ties go to the point of smaller angle in [0, 2 pi).
cplx qpsk_decide(cplx v, double A) noexcept;

/// Im{v conj(dec(v))} / A^2.
double phase_detect(cplx v, double A) noexcept;

struct CprcTrace {
    std::vector<double> times;
    std::vector<double> phase;    // theta estimate (rad), unwrapped
    std::vector<double> control;  // loop filter output
    std::vector<bool> lock;
    bool locked = false;
    std::optional<double> lock_time;
    double final_error_rms = 0.0;
};

struct CprcResult {
    sigkit::Waveform out;
    CprcTrace trace;
};

/// Derotates x_eq sample by sample with a decision-directed Costas loop.
CprcResult costas_run(const sigkit::Waveform& x_eq, const CprcConfig& cfg);

/// CSV: time,theta,control,lock for one loop, or both loops side by side.
void write_trace_csv(std::ostream& os, const CprcTrace& x, const CprcTrace* y = nullptr);

} // namespace aaeq::cprc
