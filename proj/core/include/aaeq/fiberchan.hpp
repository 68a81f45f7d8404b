#pragma once

#include <array>
#include <random>
#include <span>
#include <vector>

#include "aaeq/sigkit.hpp"

namespace aaeq::fiber {

inline constexpr double kSpeedOfLight = 299792458.0;

/// 2x2 complex polarization transfer matrix, row-major.
struct JonesMatrix {
    std::array<cplx, 4> m{cplx{1.0}, cplx{}, cplx{}, cplx{1.0}};

    cplx operator()(int r, int c) const noexcept { return m[static_cast<std::size_t>(2 * r + c)]; }
    cplx& operator()(int r, int c) noexcept { return m[static_cast<std::size_t>(2 * r + c)]; }

    JonesMatrix adjoint() const noexcept;
    cplx det() const noexcept;
    friend JonesMatrix operator*(const JonesMatrix& a, const JonesMatrix& b) noexcept;
    /// Largest |(J J^dagger - I)_rc|.
    double unitarity_error() const noexcept;
};

struct JonesAngles {
    double theta = 0.0;
    double phi = 0.0;
    double psi = 0.0;
};

/// J = R(theta) diag(e^{j phi}, e^{-j phi}) R(psi), R a planar rotation.
JonesMatrix jones_rotation(double theta, double phi, double psi);
inline JonesMatrix jones_rotation(const JonesAngles& a) { return jones_rotation(a.theta, a.phi, a.psi); }

/// Chromatic dispersion H(f) = exp(+j pi D lambda^2 z f^2 / c) on `freqs` (Hz),
/// with D in ps/(nm km), lambda in nm and z in km.
std::vector<cplx> cd_transfer(std::span<const double> freqs, double dispersion_ps_nm_km,
                              double wavelength_nm, double length_km);

/// Group delay (s) of the dispersion filter at baseband frequency f.
double cd_group_delay(double f, double dispersion_ps_nm_km, double wavelength_nm, double length_km);

enum class NoiseMode {
    None,
    Sigma,   ///< value is the per-component standard deviation
    Evm,     ///< value is the target EVM (fraction) at the channel output
};

struct NoiseSpec {
    NoiseMode mode = NoiseMode::None;
    double value = 0.0;
};

struct ChannelConfig {
    double length_km = 0.0;
    double dispersion_D = 17.0;  // ps/(nm km)
    double wavelength_nm = 1550.0;
    JonesAngles jones{};
    double dgd = 0.0;           // s
    double attenuation = 0.2;   // dB/km
    NoiseSpec noise{};
    /// LO offsets attributed to the link; applied by the receiver front end.
    double lo_frequency_offset = 0.0;
    double lo_path_delay = 0.0;

    void validate() const;
};

/// Per-component noise sigma for the target EVM given the signal's mean power.
double sigma_for_evm(double target_evm, double mean_power) noexcept;

/// CD -> DGD (split +-dgd/2 between the principal states selected by R(psi))
/// -> remaining Jones rotation -> attenuation -> complex AWGN.
sigkit::DualPolWaveform apply_channel(const sigkit::DualPolWaveform& sig, const ChannelConfig& cfg,
                                      std::mt19937_64& rng);

/// Everything in apply_channel except the noise.
sigkit::DualPolWaveform propagate(const sigkit::DualPolWaveform& sig, const ChannelConfig& cfg);

/// Complex white Gaussian noise with per-component sigma on each polarization.
sigkit::DualPolWaveform add_awgn(const sigkit::DualPolWaveform& sig, double sigma_x, double sigma_y,
                                 std::mt19937_64& rng);

/// Multiplies every sample pair by J.
sigkit::DualPolWaveform apply_jones(const sigkit::DualPolWaveform& sig, const JonesMatrix& j);

} // namespace aaeq::fiber
