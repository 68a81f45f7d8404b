#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "aaeq/sigkit.hpp"

namespace testutil {

using aaeq::cplx;
using aaeq::kPi;

inline std::vector<cplx> random_complex(std::size_t n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    std::vector<cplx> v(n);
    for (auto& s : v) {
        const double re = g(rng);
        const double im = g(rng);
        s = {re, im};
    }
    return v;
}

/// Equal-amplitude complex tones on FFT bins |b| <= max_bin, periodic in n,
/// with peak magnitude at most 1.
inline aaeq::sigkit::Waveform bin_tones(std::size_t n, double fs, int max_bin, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    std::vector<cplx> v(n);
    const double a = 1.0 / (2 * max_bin + 1);
    for (int b = -max_bin; b <= max_bin; ++b) {
        const double ph = u(rng);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] += std::polar(a, 2.0 * kPi * b * static_cast<double>(i) / static_cast<double>(n) + ph);
        }
    }
    return aaeq::sigkit::Waveform(std::move(v), fs);
}

/// Least-squares amplitude and phase of a sinusoid at f over samples [b, e):
/// w[i] ~ a sin(2 pi f t_i + phi).
inline std::pair<double, double> fit_sine(std::span<const double> w, double fs, double f, std::size_t b,
                                          std::size_t e) {
    double ss = 0, sc = 0, cc = 0, ys = 0, yc = 0;
    for (std::size_t i = b; i < e; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double s = std::sin(2 * kPi * f * t);
        const double c = std::cos(2 * kPi * f * t);
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += w[i] * s;
        yc += w[i] * c;
    }
    const double det = ss * cc - sc * sc;
    const double p = (ys * cc - yc * sc) / det;  // coefficient of sin
    const double q = (yc * ss - ys * sc) / det;  // coefficient of cos
    return {std::hypot(p, q), std::atan2(q, p)};
}

/// Complex-tone amplitude and phase response of a waveform pair over [b, e).
inline cplx tone_ratio(const aaeq::sigkit::Waveform& out, const aaeq::sigkit::Waveform& in, std::size_t b,
                       std::size_t e) {
    cplx num{}, den{};
    for (std::size_t i = b; i < e; ++i) {
        num += out[i] * std::conj(in[i]);
        den += in[i] * std::conj(in[i]);
    }
    return num / den;
}

inline aaeq::sigkit::Waveform tone(std::size_t n, double fs, double f, double amp = 1.0) {
    std::vector<cplx> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::polar(amp, 2 * kPi * f * static_cast<double>(i) / fs);
    }
    return aaeq::sigkit::Waveform(std::move(v), fs);
}

inline aaeq::sigkit::RealWaveform constant(std::size_t n, double fs, double v) {
    return aaeq::sigkit::RealWaveform(std::vector<double>(n, v), fs);
}

} // namespace testutil
