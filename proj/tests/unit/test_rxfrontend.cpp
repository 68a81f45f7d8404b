#include <doctest.h>

#include "aaeq/errors.hpp"
#include "aaeq/rxfrontend.hpp"
#include "aaeq/txchain.hpp"
#include "support.hpp"

using namespace aaeq;
using namespace aaeq::rx;
using testutil::random_complex;

namespace {

sigkit::DualPolWaveform random_dual(std::size_t n, double fs, std::uint64_t seed, double scale = 1.0) {
    return {sigkit::Waveform(random_complex(n, seed, scale), fs),
            sigkit::Waveform(random_complex(n, seed + 1, scale), fs)};
}

RxConfig plain() {
    RxConfig c;
    c.rx_bandwidth = 0.0;
    return c;
}

double mean_abs(const sigkit::RealWaveform& i, const sigkit::RealWaveform& q) {
    double s = 0.0;
    for (std::size_t k = 0; k < i.size(); ++k) {
        s += std::hypot(i[k], q[k]);
    }
    return s / static_cast<double>(i.size());
}

double rms(const sigkit::RealWaveform& i, const sigkit::RealWaveform& q) {
    double s = 0.0;
    for (std::size_t k = 0; k < i.size(); ++k) {
        s += i[k] * i[k] + q[k] * q[k];
    }
    return std::sqrt(s / static_cast<double>(i.size()));
}

} // namespace

TEST_CASE("coherent_detect: transparent detection") {
    const auto sig = random_dual(512, 160e9, 1);
    const auto q = coherent_detect(sig, plain());
    const auto d = sigkit::to_dual(q);
    for (std::size_t i = 0; i < sig.x.size(); ++i) {
        CHECK(std::abs(d.x[i] - sig.x[i]) < 1e-12);
        CHECK(std::abs(d.y[i] - sig.y[i]) < 1e-12);
    }
    auto cfg = plain();
    cfg.rx_bandwidth = 7.5e9;
    const auto f = sigkit::to_dual(coherent_detect(sig, cfg));
    const auto ref = sigkit::single_pole_lowpass(sig.x, 1.0, 7.5e9);
    for (std::size_t i = 0; i < sig.x.size(); ++i) {
        CHECK(std::abs(f.x[i] - ref[i]) < 1e-12);
    }
}

TEST_CASE("coherent_detect: 100 MHz offset shows up at the FFT peak") {
    const double fs = 1.6e9;
    const std::size_t n = 4096;
    const sigkit::Waveform carrier(std::vector<cplx>(n, cplx{1.0}), fs);
    auto cfg = plain();
    cfg.lo_frequency_offset = 100e6;
    const auto d = sigkit::to_dual(coherent_detect({carrier, carrier}, cfg));
    // Naive DFT; the mixer output is exp(-j 2 pi df t).
    std::size_t best = 0;
    double best_mag = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        cplx acc{};
        for (std::size_t i = 0; i < n; ++i) {
            acc += d.x[i] * std::polar(1.0, -2 * kPi * static_cast<double>(b * i % n) / n);
        }
        if (std::abs(acc) > best_mag) {
            best_mag = std::abs(acc);
            best = b;
        }
    }
    const double df = fs / n;
    const double fpk = best < n / 2 ? best * df : (static_cast<double>(best) - n) * df;
    CHECK(std::abs(fpk - (-100e6)) <= df);
}

TEST_CASE("coherent_detect: shared laser cancels common phase noise") {
    tx::TxConfig t;
    t.laser_linewidth = 1e6;
    t.phase_noise_seed = 7;
    auto [noisy, frame] = tx::transmit(t, 300, 16);
    t.laser_linewidth = 0.0;
    auto [clean, f2] = tx::transmit(t, 300, 16);
    auto cfg = plain();
    cfg.lo_linewidth = 1e6;
    cfg.tx_phase_noise_seed = 7;
    cfg.lo_phase = 0.2;
    const auto d = sigkit::to_dual(coherent_detect(noisy, cfg));
    const cplx rot = std::polar(1.0, -0.2);
    for (std::size_t i = 0; i < d.x.size(); i += 5) {
        CHECK(std::abs(d.x[i] - clean.x[i] * rot) < 1e-9);
    }
}

TEST_CASE("coherent_detect: independent LO leaves phase noise") {
    auto cfg = plain();
    cfg.shared_laser = false;
    cfg.lo_linewidth = 1e6;
    const auto phi = lo_phase_noise(1000, 160e9, cfg);
    cfg.shared_laser = true;
    const auto shared = lo_phase_noise(1000, 160e9, cfg);
    CHECK(phi != shared);
    cfg.lo_path_delay = 10.0 / 160e9;
    const auto lagged = lo_phase_noise(1000, 160e9, cfg);
    for (std::size_t i = 10; i < 1000; ++i) {
        CHECK(lagged[i] == shared[i - 10]);
    }
}

TEST_CASE("coherent_detect: linear for a fixed LO") {
    auto cfg = plain();
    cfg.lo_frequency_offset = 1e9;
    cfg.rx_bandwidth = 5e9;
    const auto u = random_dual(256, 160e9, 3);
    const auto v = random_dual(256, 160e9, 5);
    std::vector<cplx> sx(256), sy(256);
    for (std::size_t i = 0; i < 256; ++i) {
        sx[i] = 2.0 * u.x[i] - 0.5 * v.x[i];
        sy[i] = 2.0 * u.y[i] - 0.5 * v.y[i];
    }
    const auto du = sigkit::to_dual(coherent_detect(u, cfg));
    const auto dv = sigkit::to_dual(coherent_detect(v, cfg));
    const auto ds = sigkit::to_dual(
        coherent_detect({sigkit::Waveform(sx, 160e9), sigkit::Waveform(sy, 160e9)}, cfg));
    for (std::size_t i = 0; i < 256; ++i) {
        CHECK(std::abs(ds.x[i] - (2.0 * du.x[i] - 0.5 * dv.x[i])) < 1e-12);
    }
}

TEST_CASE("agc: fixed point and inverse scaling") {
    const auto sig = random_dual(4096, 160e9, 7, 1.0 / std::sqrt(2.0));
    const auto q = sigkit::to_quad(sig);
    const auto r1 = agc(q, rms(q.xI, q.xQ));
    CHECK(r1.gain_x == doctest::Approx(1.0).epsilon(1e-6));
    const auto at_target = agc(r1.out, 1.0);
    const auto again = agc(at_target.out, 1.0);
    CHECK(again.gain_x == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(again.gain_y == doctest::Approx(1.0).epsilon(1e-6));
    std::vector<cplx> hx(at_target.out.size()), hy(at_target.out.size());
    const auto base = sigkit::to_dual(at_target.out);
    for (std::size_t i = 0; i < hx.size(); ++i) {
        hx[i] = 0.5 * base.x[i];
        hy[i] = 0.5 * base.y[i];
    }
    const auto r2 = agc(sigkit::to_quad({sigkit::Waveform(hx, 160e9), sigkit::Waveform(hy, 160e9)}), 1.0);
    CHECK(r2.gain_x == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(r2.gain_y == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("agc: one gain per polarization preserves the I/Q ratio") {
    const auto q = sigkit::to_quad(random_dual(512, 160e9, 9, 3.0));
    const auto r = agc(q, 1.0);
    for (std::size_t i = 0; i < q.size(); ++i) {
        CHECK(r.out.xI[i] * q.xQ[i] == doctest::Approx(r.out.xQ[i] * q.xI[i]).epsilon(1e-12));
        CHECK(r.out.xI[i] == doctest::Approx(r.gain_x * q.xI[i]).epsilon(1e-15));
        CHECK(r.out.yQ[i] == doctest::Approx(r.gain_y * q.yQ[i]).epsilon(1e-15));
    }
}

TEST_CASE("agc: noisy QPSK at 30% EVM") {
    const std::size_t n = 1u << 15;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 0.3 / std::sqrt(2.0));
    std::uniform_int_distribution<int> bit(0, 1);
    std::vector<cplx> x(n), y(n);
    const double s = 0.37 / std::sqrt(2.0);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = cplx{s * (1 - 2 * bit(rng)), s * (1 - 2 * bit(rng))} + 0.37 * cplx{g(rng), g(rng)};
        y[i] = cplx{s * (1 - 2 * bit(rng)), s * (1 - 2 * bit(rng))} + 0.37 * cplx{g(rng), g(rng)};
    }
    const auto r = agc(sigkit::to_quad({sigkit::Waveform(x, 1e9), sigkit::Waveform(y, 1e9)}), 1.0);
    CHECK(rms(r.out.xI, r.out.xQ) == doctest::Approx(1.0).epsilon(1e-9));
    // Rician mean modulus for unit signal and 30% EVM, relative to the RMS modulus.
    const double sigma2 = 0.045;
    const double k = 1.0 / (2 * sigma2);
    const double laguerre = std::exp(-k / 2) * ((1 + k) * std::cyl_bessel_i(0.0, k / 2) + k * std::cyl_bessel_i(1.0, k / 2));
    const double mean_mod = std::sqrt(sigma2) * std::sqrt(kPi / 2) * laguerre / std::sqrt(1.0 + 2 * sigma2);
    CHECK(mean_abs(r.out.xI, r.out.xQ) == doctest::Approx(mean_mod).epsilon(0.02));
    CHECK(mean_abs(r.out.xI, r.out.xQ) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("agc: degenerate input and bad target") {
    const sigkit::RealWaveform z(std::vector<double>(16, 0.0), 1e9);
    const sigkit::RealWaveform o(std::vector<double>(16, 1.0), 1e9);
    CHECK_THROWS_AS(agc(sigkit::QuadWaveform(z, z, o, o), 1.0), DegenerateInput);
    CHECK_THROWS_AS(agc(sigkit::QuadWaveform(o, o, o, o), 0.0), ConfigError);
}

TEST_CASE("RxConfig validation") {
    RxConfig c;
    c.agc_target = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RxConfig{};
    c.rx_bandwidth = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
