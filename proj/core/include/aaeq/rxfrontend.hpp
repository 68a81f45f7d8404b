#pragma once

#include <cstdint>

#include "aaeq/sigkit.hpp"

namespace aaeq::rx {

struct RxConfig {
    double lo_frequency_offset = 0.0;  // Hz
    double lo_phase = 0.0;             // rad
    double lo_linewidth = 0.0;         // Hz
    /// LO derived from the transmit laser. With zero path delay its phase
    /// noise reproduces the transmitter's Wiener path and cancels.
    bool shared_laser = true;
    std::uint64_t tx_phase_noise_seed = 7;
    std::uint64_t lo_phase_noise_seed = 11;
    double lo_path_delay = 0.0;  // s
    double agc_target = 1.0;
    /// One-pole front-end bandwidth; 0 selects 0.75 x symbol rate in the runner.
    double rx_bandwidth = 0.0;

    void validate() const;
};

/// Mixes each polarization with conj(LO), splits into I/Q rails and applies
/// the front-end low-pass.
sigkit::QuadWaveform coherent_detect(const sigkit::DualPolWaveform& sig, const RxConfig& cfg);

/// LO phase path (rad) for `n` samples at rate `fs`, excluding the offset term.
std::vector<double> lo_phase_noise(std::size_t n, double fs, const RxConfig& cfg);

struct AgcResult {
    sigkit::QuadWaveform out;
    double gain_x = 1.0;
    double gain_y = 1.0;
};

/// One real gain per polarization so that mean |x|^2 equals target^2.
/// Throws DegenerateInput on an all-zero polarization.
AgcResult agc(const sigkit::QuadWaveform& quad, double target);

} // namespace aaeq::rx
