#pragma once

#include <string>

#include "aaeq/sigkit.hpp"

namespace aaeq::analog {

/// Voltage ratio for a gain in dB.
double db_to_linear(double db) noexcept;

struct CellParams {
    double dc_gain = 1.0;          // linear
    double f3db = kInf;            // Hz
    double group_delay = 0.0;      // s
    double nonlinearity_coeff = 0.0;

    /// Throws ConfigError naming `field` on violation.
    void validate(const std::string& field) const;
};

/// Cubic compression that removes 10% of the product of two full-swing inputs.
inline constexpr double kPaperNonlinearity = 0.05131670194948623;  // 1 - sqrt(0.9)

struct AnalogProfile {
    std::string name = "ideal";
    CellParams delay_cell;
    CellParams multiplier_port1;
    CellParams multiplier_port2;
    CellParams adder;
    CellParams integrator;
    CellParams buffer;
    /// Multiplier compression knee (internal units).
    double vmax = 2.0;

    void validate() const;

    /// Unity gains, unlimited bandwidth, near-ideal integrator with the
    /// measured gain-bandwidth product.
    static AnalogProfile ideal();
    /// Measured block characteristics of the fabricated chip.
    static AnalogProfile paper();
    /// Looks up "ideal" or "paper"; throws ConfigError otherwise.
    static AnalogProfile named(const std::string& name);
};

/// Unity-gain frequency of an integrator cell, dc_gain * f3db.
double gain_bandwidth(const CellParams& integrator) noexcept;

/// v (1 - c (v/vmax)^2) for |v| <= vmax, held at the end value beyond.
double saturate(double v, double coeff, double vmax) noexcept;

/// Pure delay of (group_delay - pole delay) followed by the one-pole
/// response, so the total low-frequency group delay equals p.group_delay.
sigkit::Waveform delay_cell(const sigkit::Waveform& w, const CellParams& p);
sigkit::RealWaveform delay_cell(const sigkit::RealWaveform& w, const CellParams& p);

/// g sat(F1 a) sat(F2 b) with F1, F2 the port low-passes and g = p1.dc_gain.
sigkit::RealWaveform gilbert_multiply(const sigkit::RealWaveform& a, const sigkit::RealWaveform& b,
                                      const CellParams& p1, const CellParams& p2,
                                      double vmax = 2.0);

/// (aI + j aQ)(bI + j bQ) from four Gilbert cells and two adder cells.
sigkit::Waveform complex_multiply(const sigkit::Waveform& a, const sigkit::Waveform& b,
                                  const AnalogProfile& profile);

/// Forward-Euler solution of v' = -wc v + K u, wc = 2 pi f3db, K = dc_gain wc.
sigkit::Waveform leaky_integrate(const sigkit::Waveform& u, const CellParams& p, cplx initial);

/// Streaming form of leaky_integrate. `input_scale` multiplies u before the
/// integrator, e.g. beta / K to set the loop gain independently of K.
class LeakyIntegrator {
public:
    LeakyIntegrator() = default;
    LeakyIntegrator(const CellParams& p, double dt, double input_scale = 1.0, cplx initial = {});

    cplx step(cplx u) noexcept {
        const cplx out = v_;
        v_ += dt_ * (-wc_ * v_ + k_ * u);
        return out;
    }
    cplx value() const noexcept { return v_; }
    void set(cplx v) noexcept { v_ = v; }

private:
    double wc_ = 0.0;
    double k_ = 0.0;
    double dt_ = 0.0;
    cplx v_{};
};

} // namespace aaeq::analog
