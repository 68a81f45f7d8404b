#include "aaeq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "aaeq/errors.hpp"

namespace aaeq::metrics {

namespace {

constexpr std::size_t kMinSymbols = 100;

void require_symbols(std::size_t n, std::size_t need, const char* what) {
    if (n < need) {
        throw InsufficientData(std::string(what) + ": need at least " + std::to_string(need) +
                               " symbols, got " + std::to_string(n));
    }
}

cplx quarter_turns(int r) noexcept {
    switch (((r % 4) + 4) % 4) {
    case 0:
        return {1.0, 0.0};
    case 1:
        return {0.0, 1.0};
    case 2:
        return {-1.0, 0.0};
    default:
        return {0.0, -1.0};
    }
}

struct Candidate {
    std::size_t errors = 0;
    std::size_t compared = 0;
    int rotation = 0;
    long delay = 0;
};

Candidate best_for(std::span<const int> rxq, std::span<const int> txq, int max_delay) {
    Candidate best;
    bool have = false;
    const auto n = static_cast<long>(rxq.size());
    const auto m = static_cast<long>(txq.size());
    for (long d = -max_delay; d <= max_delay; ++d) {
        std::array<std::size_t, 4> hist{};
        std::size_t cmp = 0;
        for (long k = std::max(0L, d); k < n && k - d < m; ++k) {
            ++hist[static_cast<std::size_t>((rxq[static_cast<std::size_t>(k)] -
                                             txq[static_cast<std::size_t>(k - d)] + 4) % 4)];
            ++cmp;
        }
        if (cmp == 0) {
            continue;
        }
        const auto it = std::max_element(hist.begin(), hist.end());
        const std::size_t errors = cmp - *it;
        const double rate = static_cast<double>(errors) / static_cast<double>(cmp);
        const double best_rate = have ? static_cast<double>(best.errors) / static_cast<double>(best.compared) : 2.0;
        if (rate < best_rate) {
            best = {errors, cmp, static_cast<int>(it - hist.begin()), d};
            have = true;
        }
    }
    return best;
}

std::vector<int> quadrants(std::span<const cplx> s) {
    std::vector<int> q(s.size());
    std::transform(s.begin(), s.end(), q.begin(), quadrant);
    return q;
}

} // namespace

EvmReport evm(std::span<const cplx> symbols, std::span<const cplx> reference, double A) {
    if (symbols.size() != reference.size()) {
        throw std::invalid_argument("evm: symbol and reference counts differ");
    }
    if (!(A > 0.0)) {
        throw std::invalid_argument("evm: A must be positive");
    }
    require_symbols(symbols.size(), kMinSymbols, "evm");
    double s = 0.0;
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        s += std::norm(symbols[k] - reference[k]);
    }
    return {std::sqrt(s / static_cast<double>(symbols.size())) / A * 100.0, symbols.size()};
}

std::vector<cplx> normalize_radius(std::span<const cplx> symbols, double A) {
    double r = 0.0;
    for (const cplx& v : symbols) {
        r += std::abs(v);
    }
    r /= static_cast<double>(std::max<std::size_t>(1, symbols.size()));
    if (!(r > 0.0)) {
        throw DegenerateInput("normalize_radius: all symbols are zero");
    }
    std::vector<cplx> out(symbols.begin(), symbols.end());
    for (auto& v : out) {
        v *= A / r;
    }
    return out;
}

EvmReport blind_evm(std::span<const cplx> symbols, double A) {
    require_symbols(symbols.size(), kMinSymbols, "blind_evm");
    auto v = normalize_radius(symbols, A);
    cplx m4{};
    for (const cplx& s : v) {
        m4 += (s * s) * (s * s);
    }
    const double rot = std::arg(-m4) / 4.0;
    const cplx derot = std::polar(1.0, -rot);
    const double h = A / std::sqrt(2.0);
    double e = 0.0;
    for (auto& s : v) {
        s *= derot;
        const cplx d{s.real() > 0.0 ? h : -h, s.imag() >= 0.0 ? h : -h};
        e += std::norm(s - d);
    }
    return {std::sqrt(e / static_cast<double>(v.size())) / A * 100.0, v.size()};
}

double modulus_error(std::span<const cplx> symbols, double A) {
    if (symbols.empty()) {
        throw InsufficientData("modulus_error: no symbols");
    }
    const double a2 = A * A;
    double s = 0.0;
    for (const cplx& v : normalize_radius(symbols, A)) {
        const double d = (a2 - std::norm(v)) / a2;
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(symbols.size()));
}

double q_function(double x) noexcept { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

BerEstimate ber_from_evm(double evm_fraction, int P, int M) {
    if (P < 2) {
        throw std::invalid_argument("ber_from_evm: P must be at least 2");
    }
    if (M != P * P) {
        throw std::invalid_argument("ber_from_evm: M must equal P^2 for square constellations");
    }
    if (evm_fraction < 0.0 || !std::isfinite(evm_fraction)) {
        throw std::invalid_argument("ber_from_evm: evm must be finite and non-negative");
    }
    BerEstimate b;
    b.P = P;
    b.M = M;
    if (evm_fraction == 0.0) {
        b.exact_signal = true;
        return b;
    }
    const double lp = std::log2(static_cast<double>(P));
    const double lm = std::log2(static_cast<double>(M));
    const double arg = std::sqrt((3.0 * lp / (P * P - 1.0)) * (2.0 / (evm_fraction * evm_fraction * lm)));
    b.ber = (2.0 * (1.0 - 1.0 / P) / lp) * q_function(arg);
    return b;
}

int quadrant(cplx v) noexcept {
    const bool re_pos = v.real() > 0.0 || (v.real() == 0.0 && v.imag() > 0.0);
    const bool im_pos = v.imag() >= 0.0;
    if (re_pos) {
        return im_pos ? 0 : 3;
    }
    return im_pos ? 1 : 2;
}

Alignment resolve_ambiguity(std::span<const cplx> rx_x, std::span<const cplx> rx_y,
                            const tx::SymbolFrame& frame, int max_delay) {
    if (max_delay < 0) {
        throw std::invalid_argument("resolve_ambiguity: max_delay must be non-negative");
    }
    require_symbols(std::min(rx_x.size(), rx_y.size()), 1000, "resolve_ambiguity");
    const std::array<std::vector<int>, 2> rxq{quadrants(rx_x), quadrants(rx_y)};
    const std::array<std::vector<int>, 2> txq{quadrants(frame.x_syms), quadrants(frame.y_syms)};

    std::array<std::array<Candidate, 2>, 2> c{};  // c[out][src]
    for (int o = 0; o < 2; ++o) {
        for (int s = 0; s < 2; ++s) {
            c[o][s] = best_for(rxq[o], txq[s], max_delay);
        }
    }
    const auto errs = [](const Candidate& a, const Candidate& b) { return a.errors + b.errors; };
    const bool swap = errs(c[0][1], c[1][0]) < errs(c[0][0], c[1][1]);

    Alignment a;
    a.swap = swap;
    a.source = swap ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1};
    std::size_t e = 0;
    std::size_t n = 0;
    for (int o = 0; o < 2; ++o) {
        const Candidate& k = c[o][a.source[o]];
        a.rotation[o] = k.rotation;
        a.delay[o] = k.delay;
        a.symbol_errors[o] = k.errors;
        a.compared[o] = k.compared;
        e += k.errors;
        n += k.compared;
    }
    a.symbol_error_rate = n ? static_cast<double>(e) / static_cast<double>(n) : 1.0;
    if (a.symbol_error_rate > 0.4) {
        throw AlignmentFailure("resolve_ambiguity: best candidate leaves " +
                                   std::to_string(a.symbol_error_rate * 100.0) + "% symbol errors",
                               a.symbol_error_rate);
    }
    return a;
}

std::array<AlignedPol, 2> apply_alignment(std::span<const cplx> rx_x, std::span<const cplx> rx_y,
                                          const tx::SymbolFrame& frame, const Alignment& a) {
    std::array<AlignedPol, 2> out;
    const std::array<std::span<const cplx>, 2> rx{rx_x, rx_y};
    for (int o = 0; o < 2; ++o) {
        const bool from_x = a.source[o] == 0;
        const auto& syms = from_x ? frame.x_syms : frame.y_syms;
        const auto& bi = from_x ? frame.x_bits_i : frame.y_bits_i;
        const auto& bq = from_x ? frame.x_bits_q : frame.y_bits_q;
        const cplx derot = quarter_turns(-a.rotation[o]);
        const long d = a.delay[o];
        const auto n = static_cast<long>(rx[o].size());
        const auto m = static_cast<long>(syms.size());
        AlignedPol& p = out[o];
        for (long k = std::max(0L, d); k < n && k - d < m; ++k) {
            const auto j = static_cast<std::size_t>(k - d);
            p.rx.push_back(rx[o][static_cast<std::size_t>(k)] * derot);
            p.ref.push_back(syms[j]);
            p.bits_i.push_back(bi[j]);
            p.bits_q.push_back(bq[j]);
        }
    }
    return out;
}

BerCount count_ber(const AlignedPol& pol) {
    BerCount c;
    for (std::size_t k = 0; k < pol.rx.size(); ++k) {
        const int q = quadrant(pol.rx[k]);
        const std::uint8_t bi = (q == 1 || q == 2) ? 1 : 0;
        const std::uint8_t bq = (q == 2 || q == 3) ? 1 : 0;
        c.errors += (bi != pol.bits_i[k]) + (bq != pol.bits_q[k]);
        c.bits += 2;
    }
    return c;
}

std::vector<cplx> sample_symbols(const sigkit::Waveform& w, int sps, int phase, std::size_t first_symbol) {
    if (sps < 1 || phase < 0 || phase >= sps) {
        throw std::invalid_argument("sample_symbols: phase must lie in [0, sps)");
    }
    const auto us = static_cast<std::size_t>(sps);
    const std::size_t total = w.size() / us;
    std::vector<cplx> out;
    for (std::size_t k = first_symbol; k < total; ++k) {
        out.push_back(w[k * us + static_cast<std::size_t>(phase)]);
    }
    return out;
}

EyeStats best_sampling_phase(const sigkit::Waveform& w, int sps, std::size_t first_symbol, int amplitude_bins) {
    if (sps < 1 || amplitude_bins < 1) {
        throw std::invalid_argument("best_sampling_phase: sps and amplitude_bins must be positive");
    }
    const auto us = static_cast<std::size_t>(sps);
    const std::size_t total = w.size() / us;
    require_symbols(total > first_symbol ? total - first_symbol : 0, 500, "best_sampling_phase");

    EyeStats eye;
    eye.sps = sps;
    eye.amplitude_bins = amplitude_bins;
    double amax = 0.0;
    for (std::size_t i = first_symbol * us; i < total * us; ++i) {
        amax = std::max(amax, std::abs(w[i].real()));
    }
    amax = amax > 0.0 ? amax * 1.0000001 : 1.0;
    eye.amplitude_min = -amax;
    eye.amplitude_max = amax;
    eye.counts.assign(us * static_cast<std::size_t>(amplitude_bins), 0);
    eye.height_per_phase.assign(us, 0.0);

    for (std::size_t p = 0; p < us; ++p) {
        double s_hi = 0.0, s2_hi = 0.0, s_lo = 0.0, s2_lo = 0.0;
        std::size_t n_hi = 0, n_lo = 0;
        for (std::size_t k = first_symbol; k < total; ++k) {
            const double v = w[k * us + p].real();
            auto bin = static_cast<std::size_t>((v + amax) / (2.0 * amax) * amplitude_bins);
            bin = std::min(bin, static_cast<std::size_t>(amplitude_bins - 1));
            ++eye.counts[p * static_cast<std::size_t>(amplitude_bins) + bin];
            if (v > 0.0) {
                s_hi += v;
                s2_hi += v * v;
                ++n_hi;
            } else {
                s_lo += v;
                s2_lo += v * v;
                ++n_lo;
            }
        }
        if (n_hi == 0 || n_lo == 0) {
            eye.height_per_phase[p] = -kInf;
            continue;
        }
        const double m_hi = s_hi / n_hi;
        const double m_lo = s_lo / n_lo;
        const double sd_hi = std::sqrt(std::max(0.0, s2_hi / n_hi - m_hi * m_hi));
        const double sd_lo = std::sqrt(std::max(0.0, s2_lo / n_lo - m_lo * m_lo));
        eye.height_per_phase[p] = (m_hi - 3.0 * sd_hi) - (m_lo + 3.0 * sd_lo);
    }

    const auto& h = eye.height_per_phase;
    const double best = *std::max_element(h.begin(), h.end());
    const double tol = 1e-12 * std::max(1.0, std::abs(best));
    std::size_t run_start = 0, run_len = 0, best_start = 0, best_len = 0;
    for (std::size_t p = 0; p < us; ++p) {
        if (std::abs(h[p] - best) <= tol) {
            if (run_len == 0) {
                run_start = p;
            }
            ++run_len;
            if (run_len > best_len) {
                best_len = run_len;
                best_start = run_start;
            }
        } else {
            run_len = 0;
        }
    }
    eye.best_phase = static_cast<int>(best_start + (best_len - 1) / 2);
    eye.eye_height = best;
    eye.eye_width = static_cast<double>(std::count_if(h.begin(), h.end(), [](double v) { return v > 0.0; })) /
                    static_cast<double>(us);
    return eye;
}

void write_constellation_csv(std::ostream& os, std::span<const cplx> x, std::span<const cplx> y) {
    os << "k,x_re,x_im,y_re,y_im\n" << std::setprecision(17);
    const std::size_t n = std::min(x.size(), y.size());
    for (std::size_t k = 0; k < n; ++k) {
        os << k << ',' << x[k].real() << ',' << x[k].imag() << ',' << y[k].real() << ',' << y[k].imag() << '\n';
    }
}

void write_eye_csv(std::ostream& os, const EyeStats& x, const EyeStats& y) {
    os << "pol,phase,amplitude,count\n" << std::setprecision(17);
    for (const auto* e : {&x, &y}) {
        const char* pol = e == &x ? "x" : "y";
        const double step = (e->amplitude_max - e->amplitude_min) / e->amplitude_bins;
        for (int p = 0; p < e->sps; ++p) {
            for (int b = 0; b < e->amplitude_bins; ++b) {
                const auto c = e->counts[static_cast<std::size_t>(p * e->amplitude_bins + b)];
                os << pol << ',' << p << ',' << e->amplitude_min + (b + 0.5) * step << ',' << c << '\n';
            }
        }
    }
}

} // namespace aaeq::metrics
