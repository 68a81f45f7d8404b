#include <doctest.h>

#include <random>
#include <sstream>

#include "aaeq/errors.hpp"
#include "aaeq/metrics.hpp"
#include "aaeq/sigkit.hpp"
#include "aaeq/txchain.hpp"
#include "support.hpp"

using namespace aaeq;
using namespace aaeq::metrics;

namespace {

tx::SymbolFrame random_frame(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    tx::SymbolFrame f;
    f.amplitude = 1.0;
    for (auto* b : {&f.x_bits_i, &f.x_bits_q, &f.y_bits_i, &f.y_bits_q}) {
        b->resize(n);
        for (auto& v : *b) {
            v = coin(rng) ? 1 : 0;
        }
    }
    f.x_syms = tx::qpsk_map(f.x_bits_i, f.x_bits_q, 1.0);
    f.y_syms = tx::qpsk_map(f.y_bits_i, f.y_bits_q, 1.0);
    return f;
}

std::vector<cplx> add_noise(std::span<const cplx> s, double sigma, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    std::vector<cplx> out(s.begin(), s.end());
    for (auto& v : out) {
        const double re = g(rng);
        v += cplx{re, g(rng)};
    }
    return out;
}

std::vector<cplx> delayed(std::span<const cplx> s, long d) {
    std::vector<cplx> out(s.size(), cplx{0.7, 0.7});
    for (std::size_t k = 0; k < s.size(); ++k) {
        const long j = static_cast<long>(k) - d;
        if (j >= 0 && j < static_cast<long>(s.size())) {
            out[k] = s[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

sigkit::Waveform isi_waveform(std::size_t n, tx::SymbolFrame* frame = nullptr) {
    tx::TxConfig t;
    t.pulse = tx::PulseShape::RaisedCosine;
    t.rolloff = 0.3;
    t.tx_bandwidth = 8e9;
    t.decorrelation_delay = 0.0;
    auto [sig, f] = tx::transmit(t, n, 16);
    if (frame) {
        *frame = f;
    }
    return sig.x;
}

} // namespace

TEST_CASE("evm examples") {
    const auto f = random_frame(4096, 1);
    CHECK(evm(f.x_syms, f.x_syms, 1.0).evm_percent == 0.0);
    CHECK(evm(f.x_syms, f.x_syms, 1.0).N == 4096);

    std::vector<cplx> radial(f.x_syms);
    for (auto& v : radial) {
        v *= 1.28;
    }
    CHECK(evm(radial, f.x_syms, 1.0).evm_percent == doctest::Approx(28.0).epsilon(1e-8));

    const auto big = random_frame(1 << 16, 2);
    const auto noisy = add_noise(big.x_syms, 0.28 / std::sqrt(2.0), 3);
    CHECK(std::abs(evm(noisy, big.x_syms, 1.0).evm_percent - 28.0) < 1.0);

    const std::vector<cplx> few(99, cplx{1.0, 0.0});
    CHECK_THROWS_AS(evm(few, few, 1.0), InsufficientData);
    CHECK_THROWS_AS(evm(f.x_syms, big.x_syms, 1.0), std::invalid_argument);
}

TEST_CASE("evm is invariant under common rotation") {
    const auto f = random_frame(2000, 4);
    const auto noisy = add_noise(f.x_syms, 0.1, 5);
    const double e0 = evm(noisy, f.x_syms, 1.0).evm_percent;
    for (double a : {0.3, 1.0, 2.5}) {
        std::vector<cplx> r(noisy), ref(f.x_syms);
        for (std::size_t k = 0; k < r.size(); ++k) {
            r[k] *= std::polar(1.0, a);
            ref[k] *= std::polar(1.0, a);
        }
        CHECK(evm(r, ref, 1.0).evm_percent == doctest::Approx(e0).epsilon(1e-12));
    }
}

TEST_CASE("q_function matches tabulated values") {
    const std::pair<double, double> table[] = {
        {0.0, 0.5},
        {0.5, 0.30853753872598689636},
        {1.0, 0.15865525393145705141},
        {2.0, 0.0227501319481792072},
        {3.0, 0.0013498980316300945267},
        {4.0, 0.000031671241833119921254},
        {5.0, 2.8665157187919391167e-7},
        {7.0, 1.2798125438858350044e-12},
        {10.0, 7.619853024160526066e-24},
        {-1.0, 0.84134474606854294859},
    };
    for (const auto& [x, q] : table) {
        CHECK(std::abs(q_function(x) - q) <= 1e-12 * q);
    }
}

TEST_CASE("ber_from_evm reproduces the published pairs") {
    const std::pair<double, double> pairs[] = {{0.28, 1.8e-4}, {0.32, 8.9e-4}, {0.33, 1.2e-3}};
    for (const auto& [e, b] : pairs) {
        const auto r = ber_from_evm(e);
        CHECK(std::abs(r.ber - b) / b < 0.05);
        CHECK_FALSE(r.exact_signal);
    }
    // QPSK reduces to Q(1/evm).
    CHECK(ber_from_evm(0.3).ber == doctest::Approx(q_function(1.0 / 0.3)).epsilon(1e-14));
}

TEST_CASE("ber_from_evm is strictly decreasing toward zero") {
    double prev = ber_from_evm(1.0).ber;
    for (double e = 0.99; e > 0.02; e -= 0.01) {
        const double b = ber_from_evm(e).ber;
        CHECK(b < prev);
        prev = b;
    }
    const auto z = ber_from_evm(0.0);
    CHECK(z.ber == 0.0);
    CHECK(z.exact_signal);
    CHECK_THROWS_AS(ber_from_evm(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(ber_from_evm(0.2, 2, 8), std::invalid_argument);
    CHECK_THROWS_AS(ber_from_evm(0.2, 1, 1), std::invalid_argument);
    // 16-QAM is worse than QPSK at the same EVM.
    CHECK(ber_from_evm(0.1, 4, 16).ber > ber_from_evm(0.1).ber);
}

TEST_CASE("resolve_ambiguity: identity") {
    const auto f = random_frame(3000, 6);
    const auto a = resolve_ambiguity(f.x_syms, f.y_syms, f);
    CHECK_FALSE(a.swap);
    CHECK(a.source == std::array<int, 2>{0, 1});
    CHECK(a.rotation == std::array<int, 2>{0, 0});
    CHECK(a.delay == std::array<long, 2>{0, 0});
    CHECK(a.symbol_error_rate == 0.0);
}

TEST_CASE("resolve_ambiguity: swap with a quarter turn") {
    const auto f = random_frame(3000, 7);
    std::vector<cplx> rx(f.y_syms), ry(f.x_syms);
    for (auto& v : rx) {
        v *= cplx{0.0, 1.0};
    }
    for (auto& v : ry) {
        v *= cplx{0.0, 1.0};
    }
    const auto a = resolve_ambiguity(rx, ry, f);
    CHECK(a.swap);
    CHECK(a.source == std::array<int, 2>{1, 0});
    CHECK(a.rotation == std::array<int, 2>{1, 1});
    CHECK(a.delay == std::array<long, 2>{0, 0});
    CHECK(a.symbol_errors[0] + a.symbol_errors[1] == 0);
}

TEST_CASE("resolve_ambiguity: per-polarization delay and rotation") {
    const auto f = random_frame(3000, 8);
    auto rx = delayed(f.x_syms, 3);
    auto ry = delayed(f.y_syms, -2);
    for (auto& v : ry) {
        v *= -1.0;
    }
    const auto a = resolve_ambiguity(rx, ry, f);
    CHECK_FALSE(a.swap);
    CHECK(a.delay == std::array<long, 2>{3, -2});
    CHECK(a.rotation == std::array<int, 2>{0, 2});
    CHECK(a.symbol_error_rate == 0.0);
    const auto pols = apply_alignment(rx, ry, f, a);
    for (const auto& p : pols) {
        CHECK(count_ber(p).errors == 0);
        CHECK(evm(p.rx, p.ref, 1.0).evm_percent < 1e-12);
    }
}

TEST_CASE("resolve_ambiguity: independent data fails") {
    const auto f = random_frame(3000, 9);
    const auto g = random_frame(3000, 10);
    try {
        (void)resolve_ambiguity(g.x_syms, g.y_syms, f);
        FAIL("expected AlignmentFailure");
    } catch (const AlignmentFailure& e) {
        CHECK(e.best_symbol_error_rate() > 0.6);
        CHECK(e.best_symbol_error_rate() < 0.8);
    }
    const std::vector<cplx> few(999, cplx{1.0, 1.0});
    CHECK_THROWS_AS(resolve_ambiguity(few, few, f), InsufficientData);
}

TEST_CASE("resolve_ambiguity: chosen transform minimizes counted bit errors") {
    const auto f = random_frame(2000, 11);
    std::vector<cplx> rx(f.y_syms), ry(f.x_syms);
    for (auto& v : ry) {
        v *= cplx{0.0, -1.0};
    }
    rx = add_noise(delayed(rx, 1), 0.45, 12);
    ry = add_noise(ry, 0.45, 13);
    constexpr int kWindow = 2;
    const auto chosen = resolve_ambiguity(rx, ry, f, kWindow);
    std::size_t chosen_errors = 0;
    for (const auto& p : apply_alignment(rx, ry, f, chosen)) {
        chosen_errors += count_ber(p).errors;
    }
    CHECK(chosen_errors > 0);
    std::size_t brute = SIZE_MAX;
    for (int swap = 0; swap < 2; ++swap) {
        std::size_t total = 0;
        for (std::size_t o = 0; o < 2; ++o) {
            std::size_t pol_best = SIZE_MAX;
            for (int r = 0; r < 4; ++r) {
                for (long d = -kWindow; d <= kWindow; ++d) {
                    Alignment a;
                    a.swap = swap == 1;
                    a.source = a.swap ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1};
                    a.rotation[o] = r;
                    a.delay[o] = d;
                    pol_best = std::min(pol_best, count_ber(apply_alignment(rx, ry, f, a)[o]).errors);
                }
            }
            total += pol_best;
        }
        brute = std::min(brute, total);
    }
    CHECK(chosen_errors == brute);
    CHECK(chosen.swap);
    CHECK(chosen.rotation == std::array<int, 2>{0, 3});
    CHECK(chosen.delay == std::array<long, 2>{1, 0});
}

TEST_CASE("count_ber examples") {
    const auto f = random_frame(10000, 14);
    const auto a = resolve_ambiguity(f.x_syms, f.y_syms, f);
    auto pols = apply_alignment(f.x_syms, f.y_syms, f, a);
    CHECK(count_ber(pols[0]).errors == 0);
    CHECK(count_ber(pols[0]).bits == 20000);
    CHECK(count_ber(pols[0]).ber() == 0.0);

    pols[0].rx[4321] *= cplx{0.0, 1.0};  // adjacent point under Gray mapping
    const auto c = count_ber(pols[0]);
    CHECK(c.errors == 1);
    CHECK(c.ber() == doctest::Approx(1.0 / 2e4));

    pols[0].rx[17] *= -1.0;  // diagonal point flips both bits
    CHECK(count_ber(pols[0]).errors == 3);
}

TEST_CASE("count_ber under AWGN agrees with ber_from_evm") {
    const std::size_t n = 1 << 17;  // 2^18 bits
    const auto f = random_frame(n, 15);
    const auto rx = add_noise(f.x_syms, 0.28 / std::sqrt(2.0), 16);
    const auto ry = add_noise(f.y_syms, 0.28 / std::sqrt(2.0), 17);
    const auto a = resolve_ambiguity(rx, ry, f);
    const auto pols = apply_alignment(rx, ry, f, a);
    const auto c = count_ber(pols[0]);
    REQUIRE(c.bits == 2 * n);
    const double predicted = ber_from_evm(evm(pols[0].rx, pols[0].ref, 1.0).evm_percent / 100.0).ber;
    CHECK(c.ber() > predicted / 2.0);
    CHECK(c.ber() < predicted * 2.0);
}

TEST_CASE("modulus_error and normalize_radius") {
    const auto f = random_frame(1000, 18);
    CHECK(modulus_error(f.x_syms, 1.0) < 1e-12);
    std::vector<cplx> hot(f.x_syms);
    for (auto& v : hot) {
        v *= 1.3;
    }
    CHECK(modulus_error(hot, 1.0) < 1e-12);
    const auto n = normalize_radius(hot, 2.0);
    double m = 0.0;
    for (const auto& v : n) {
        m += std::abs(v);
    }
    CHECK(m / 1000.0 == doctest::Approx(2.0));
    // Alternating radii 1 +- d normalize to mean 1; error is RMS of 1 - (1 +- d)^2.
    std::vector<cplx> ring(1000);
    const double d = 0.1;
    double oracle = 0.0;
    for (std::size_t k = 0; k < ring.size(); ++k) {
        const double r = k % 2 ? 1.0 + d : 1.0 - d;
        ring[k] = std::polar(r, 0.1 * static_cast<double>(k));
        oracle += std::pow(1.0 - r * r, 2);
    }
    CHECK(modulus_error(ring, 1.0) == doctest::Approx(std::sqrt(oracle / 1000.0)).epsilon(1e-12));
    CHECK_THROWS_AS(modulus_error(std::vector<cplx>{}, 1.0), InsufficientData);
}

TEST_CASE("blind_evm ignores rotation and gain") {
    const auto f = random_frame(4000, 19);
    const auto noisy = add_noise(f.x_syms, 0.05, 20);
    const double e0 = evm(noisy, f.x_syms, 1.0).evm_percent;
    std::vector<cplx> r(noisy);
    for (auto& v : r) {
        v *= std::polar(0.8, 0.3);
    }
    CHECK(std::abs(blind_evm(r, 1.0).evm_percent - e0) < 0.2);
}

TEST_CASE("best_sampling_phase: ideal NRZ selects mid-symbol") {
    tx::TxConfig t;
    t.tx_bandwidth = kInf;
    t.decorrelation_delay = 0.0;
    for (int sps : {4, 8, 16}) {
        auto [sig, f] = tx::transmit(t, 1000, sps);
        const auto eye = best_sampling_phase(sig.x, sps);
        CHECK(eye.best_phase == (sps - 1) / 2);
        CHECK(eye.eye_width == 1.0);
        CHECK(eye.eye_height == doctest::Approx(std::sqrt(2.0)));
    }
}

TEST_CASE("best_sampling_phase: delay shifts the phase") {
    const auto w = isi_waveform(2000);
    const int p0 = best_sampling_phase(w, 16, 1).best_phase;
    for (int k : {1, 5, 11, 16, 23}) {
        std::vector<cplx> v(w.samples().begin(), w.samples().end());
        v.insert(v.begin(), static_cast<std::size_t>(k), cplx{});
        v.resize(w.size());
        const auto eye = best_sampling_phase(sigkit::Waveform(v, w.sample_rate()), 16, 2);
        CHECK(eye.best_phase == (p0 + k) % 16);
    }
}

TEST_CASE("best_sampling_phase: band-limited ISI matches brute-force EVM") {
    tx::SymbolFrame f;
    const auto w = isi_waveform(4000, &f);
    const auto eye = best_sampling_phase(w, 16, 10);
    int best_p = -1;
    double best_e = kInf;
    for (int p = 0; p < 16; ++p) {
        const auto s = sample_symbols(w, 16, p, 10);
        std::vector<cplx> ref(f.x_syms.begin() + 10, f.x_syms.end());
        ref.resize(s.size());
        // Least-squares complex gain so only the ISI counts.
        cplx num{};
        double den = 0.0;
        for (std::size_t k = 0; k < s.size(); ++k) {
            num += std::conj(s[k]) * ref[k];
            den += std::norm(s[k]);
        }
        std::vector<cplx> scaled(s);
        for (auto& v : scaled) {
            v *= num / den;
        }
        const double e = evm(scaled, ref, 1.0).evm_percent;
        if (e < best_e) {
            best_e = e;
            best_p = p;
        }
    }
    CHECK(eye.best_phase == best_p);
}

TEST_CASE("eye histogram mass and CSV") {
    const auto w = isi_waveform(800);
    const auto eye = best_sampling_phase(w, 16, 0, 32);
    std::size_t total = 0;
    for (auto c : eye.counts) {
        total += c;
    }
    CHECK(total == w.size());
    std::ostringstream os;
    write_eye_csv(os, eye, eye);
    const std::string csv = os.str();
    CHECK(csv.rfind("pol,phase,amplitude,count\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 16 * 32);
    CHECK_THROWS_AS(best_sampling_phase(w, 16, 400), InsufficientData);

    const std::vector<cplx> x{{1.0, 2.0}, {3.0, 4.0}};
    std::ostringstream c;
    write_constellation_csv(c, x, x);
    CHECK(c.str() == "k,x_re,x_im,y_re,y_im\n0,1,2,1,2\n1,3,4,3,4\n");
}
