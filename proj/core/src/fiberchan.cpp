#include "aaeq/fiberchan.hpp"

#include <cmath>
#include <stdexcept>

#include "aaeq/errors.hpp"

namespace aaeq::fiber {

namespace {

JonesMatrix planar(double a) {
    JonesMatrix r;
    r(0, 0) = std::cos(a);
    r(0, 1) = -std::sin(a);
    r(1, 0) = std::sin(a);
    r(1, 1) = std::cos(a);
    return r;
}

JonesMatrix retarder(double phi) {
    JonesMatrix d;
    d(0, 0) = std::polar(1.0, phi);
    d(0, 1) = 0.0;
    d(1, 0) = 0.0;
    d(1, 1) = std::polar(1.0, -phi);
    return d;
}

double mean_power(const sigkit::Waveform& w) {
    return sigkit::energy(w) / static_cast<double>(w.size());
}

sigkit::Waveform add_noise(const sigkit::Waveform& w, double sigma, std::mt19937_64& rng) {
    std::vector<cplx> v(w.samples().begin(), w.samples().end());
    if (sigma > 0.0) {
        std::normal_distribution<double> gauss(0.0, sigma);
        for (auto& s : v) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            s += cplx{re, im};
        }
    }
    return sigkit::Waveform(std::move(v), w.sample_rate(), w.t0());
}

} // namespace

JonesMatrix JonesMatrix::adjoint() const noexcept {
    JonesMatrix a;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            a(r, c) = std::conj((*this)(c, r));
        }
    }
    return a;
}

cplx JonesMatrix::det() const noexcept {
    return (*this)(0, 0) * (*this)(1, 1) - (*this)(0, 1) * (*this)(1, 0);
}

JonesMatrix operator*(const JonesMatrix& a, const JonesMatrix& b) noexcept {
    JonesMatrix p;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            p(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c);
        }
    }
    return p;
}

double JonesMatrix::unitarity_error() const noexcept {
    const JonesMatrix g = (*this) * adjoint();
    double worst = 0.0;
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            const cplx ideal = (r == c) ? cplx{1.0} : cplx{};
            worst = std::max(worst, std::abs(g(r, c) - ideal));
        }
    }
    return worst;
}

JonesMatrix jones_rotation(double theta, double phi, double psi) {
    return planar(theta) * retarder(phi) * planar(psi);
}

std::vector<cplx> cd_transfer(std::span<const double> freqs, double dispersion_ps_nm_km,
                              double wavelength_nm, double length_km) {
    const double d_si = dispersion_ps_nm_km * 1e-6;  // s/m^2
    const double lambda = wavelength_nm * 1e-9;
    const double z = length_km * 1e3;
    const double k = kPi * d_si * lambda * lambda * z / kSpeedOfLight;
    std::vector<cplx> h(freqs.size());
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        h[i] = std::polar(1.0, k * freqs[i] * freqs[i]);
    }
    return h;
}

double cd_group_delay(double f, double dispersion_ps_nm_km, double wavelength_nm, double length_km) {
    // tau_g = (1/2pi) d(phase)/df of the transfer above.
    const double lambda = wavelength_nm * 1e-9;
    return dispersion_ps_nm_km * 1e-6 * lambda * lambda * length_km * 1e3 * f / kSpeedOfLight;
}

void ChannelConfig::validate() const {
    if (length_km < 0.0) {
        throw ConfigError("must be non-negative", "channel.length_km");
    }
    if (!std::isfinite(dispersion_D)) {
        throw ConfigError("must be finite", "channel.dispersion_D");
    }
    if (!(wavelength_nm > 0.0)) {
        throw ConfigError("must be positive", "channel.wavelength_nm");
    }
    if (dgd < 0.0) {
        throw ConfigError("must be non-negative", "channel.dgd");
    }
    if (noise.mode != NoiseMode::None && noise.value < 0.0) {
        throw ConfigError("must be non-negative", "channel.noise.value");
    }
}

double sigma_for_evm(double target_evm, double mean_power) noexcept {
    return target_evm * std::sqrt(mean_power) / std::sqrt(2.0);
}

sigkit::DualPolWaveform apply_jones(const sigkit::DualPolWaveform& sig, const JonesMatrix& j) {
    const std::size_t n = sig.x.size();
    std::vector<cplx> xo(n);
    std::vector<cplx> yo(n);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx x = sig.x[i];
        const cplx y = sig.y[i];
        xo[i] = j(0, 0) * x + j(0, 1) * y;
        yo[i] = j(1, 0) * x + j(1, 1) * y;
    }
    return {sigkit::Waveform(std::move(xo), sig.x.sample_rate(), sig.x.t0()),
            sigkit::Waveform(std::move(yo), sig.y.sample_rate(), sig.y.t0())};
}

sigkit::DualPolWaveform propagate(const sigkit::DualPolWaveform& sig, const ChannelConfig& cfg) {
    cfg.validate();
    sigkit::DualPolWaveform out = sig;
    const double fs = sig.x.sample_rate();

    if (cfg.length_km > 0.0 && cfg.dispersion_D != 0.0) {
        const auto freqs = sigkit::fft_frequencies(sig.x.size(), fs);
        const auto h = cd_transfer(freqs, cfg.dispersion_D, cfg.wavelength_nm, cfg.length_km);
        out = {sigkit::freq_domain_filter(out.x, h), sigkit::freq_domain_filter(out.y, h)};
    }

    if (cfg.dgd > 0.0) {
        out = apply_jones(out, planar(cfg.jones.psi));
        const double half = 0.5 * cfg.dgd;
        auto lag = [half](double f) { return std::polar(1.0, -2.0 * kPi * f * half); };
        auto lead = [half](double f) { return std::polar(1.0, 2.0 * kPi * f * half); };
        out = {sigkit::freq_domain_filter(out.x, lag), sigkit::freq_domain_filter(out.y, lead)};
        out = apply_jones(out, planar(cfg.jones.theta) * retarder(cfg.jones.phi));
    } else {
        out = apply_jones(out, jones_rotation(cfg.jones));
    }

    const double loss = std::pow(10.0, -cfg.attenuation * cfg.length_km / 20.0);
    if (loss != 1.0) {
        JonesMatrix s;
        s(0, 0) = loss;
        s(1, 1) = loss;
        out = apply_jones(out, s);
    }
    return out;
}

sigkit::DualPolWaveform add_awgn(const sigkit::DualPolWaveform& sig, double sigma_x, double sigma_y,
                                 std::mt19937_64& rng) {
    if (sigma_x < 0.0 || sigma_y < 0.0) {
        throw std::invalid_argument("add_awgn: sigma must be non-negative");
    }
    return {add_noise(sig.x, sigma_x, rng), add_noise(sig.y, sigma_y, rng)};
}

sigkit::DualPolWaveform apply_channel(const sigkit::DualPolWaveform& sig, const ChannelConfig& cfg,
                                      std::mt19937_64& rng) {
    const auto out = propagate(sig, cfg);
    switch (cfg.noise.mode) {
    case NoiseMode::None:
        return out;
    case NoiseMode::Sigma:
        return add_awgn(out, cfg.noise.value, cfg.noise.value, rng);
    case NoiseMode::Evm:
        return add_awgn(out, sigma_for_evm(cfg.noise.value, mean_power(out.x)),
                        sigma_for_evm(cfg.noise.value, mean_power(out.y)), rng);
    }
    return out;
}

} // namespace aaeq::fiber
