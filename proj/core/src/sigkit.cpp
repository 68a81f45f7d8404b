#include "aaeq/sigkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>

namespace aaeq::sigkit {

namespace {

// FFTW planner calls are not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

double sinc(double x) noexcept {
    if (std::abs(x) < 1e-15) {
        return 1.0;
    }
    const double px = kPi * x;
    return std::sin(px) / px;
}

// Kaiser window, beta = 14 (about -100 dB sidelobes).
double kaiser(double d, double half_width) noexcept {
    if (std::abs(d) > half_width) {
        return 0.0;
    }
    constexpr double kBeta = 14.0;
    const double r = d / half_width;
    return std::cyl_bessel_i(0.0, kBeta * std::sqrt(1.0 - r * r)) / std::cyl_bessel_i(0.0, kBeta);
}

template <typename T>
BasicWaveform<T> delay_impl(const BasicWaveform<T>& w, double tau) {
    if (w.empty()) {
        throw std::invalid_argument("fractional_delay: empty waveform");
    }
    if (!std::isfinite(tau) || std::abs(tau) >= w.duration()) {
        throw std::invalid_argument("fractional_delay: |tau| must be below the waveform duration");
    }
    const auto n = static_cast<std::ptrdiff_t>(w.size());
    const double shift = tau * w.sample_rate();
    auto whole = static_cast<std::ptrdiff_t>(std::floor(shift));
    double frac = shift - static_cast<double>(whole);
    if (frac > 1.0 - 1e-12) {
        frac = 0.0;
        ++whole;
    } else if (frac < 1e-12) {
        frac = 0.0;
    }

    const auto in = w.samples();
    std::vector<T> out(w.size(), T{});

    if (frac == 0.0) {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::ptrdiff_t src = i - whole;
            if (src >= 0 && src < n) {
                out[static_cast<std::size_t>(i)] = in[static_cast<std::size_t>(src)];
            }
        }
    } else {
        constexpr int K = kInterpolatorHalfWidth;
        // out[i] interpolates position p = i - whole - frac; taps sit at
        // base + r with base = i - whole - 1 and r in [-K+1, K].
        std::vector<double> kernel(2 * K);
        double sum = 0.0;
        for (int r = -K + 1; r <= K; ++r) {
            const double d = 1.0 - frac - r;
            const double c = sinc(d) * kaiser(d, K);
            kernel[static_cast<std::size_t>(r + K - 1)] = c;
            sum += c;
        }
        for (auto& c : kernel) {
            c /= sum;
        }
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::ptrdiff_t base = i - whole - 1;
            T acc{};
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-K + 1, -base);
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(K, n - 1 - base);
            for (std::ptrdiff_t r = lo; r <= hi; ++r) {
                acc += kernel[static_cast<std::size_t>(r + K - 1)] *
                       in[static_cast<std::size_t>(base + r)];
            }
            out[static_cast<std::size_t>(i)] = acc;
        }
    }

    const auto edge = static_cast<std::size_t>(std::ceil(std::abs(shift) - 1e-12)) +
                      static_cast<std::size_t>(kInterpolatorHalfWidth);
    const std::size_t begin = std::min(edge, w.size());
    const std::size_t end = w.size() > edge ? w.size() - edge : begin;
    BasicWaveform<T> result(std::move(out), w.sample_rate(), w.t0());
    return result.with_valid_range(std::max(begin, w.valid_begin()),
                                   std::max(std::min(end, w.valid_end()), begin));
}

template <typename T>
BasicWaveform<T> lowpass_impl(const BasicWaveform<T>& w, double dc_gain, double f3db) {
    OnePole<T> filt(dc_gain, f3db, w.sample_rate());
    std::vector<T> out(w.size());
    if (!w.empty()) {
        filt.prime(w[0]);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
        out[i] = filt.step(w[i]);
    }
    return BasicWaveform<T>(std::move(out), w.sample_rate(), w.t0())
        .with_valid_range(w.valid_begin(), w.valid_end());
}

} // namespace

template <typename T>
BasicWaveform<T>::BasicWaveform(std::vector<T> samples, double sample_rate, double t0)
    : samples_(std::move(samples)), sample_rate_(sample_rate), t0_(t0), valid_begin_(0),
      valid_end_(samples_.size()) {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw std::invalid_argument("waveform sample rate must be positive and finite");
    }
}

template <typename T>
BasicWaveform<T> BasicWaveform<T>::with_valid_range(std::size_t begin, std::size_t end) const {
    BasicWaveform copy = *this;
    copy.valid_begin_ = std::clamp(begin, valid_begin_, valid_end_);
    copy.valid_end_ = std::clamp(end, copy.valid_begin_, valid_end_);
    return copy;
}

template class BasicWaveform<cplx>;
template class BasicWaveform<double>;

DualPolWaveform::DualPolWaveform(Waveform x_pol, Waveform y_pol)
    : x(std::move(x_pol)), y(std::move(y_pol)) {
    if (x.size() != y.size() || x.sample_rate() != y.sample_rate()) {
        throw std::invalid_argument("DualPolWaveform: polarizations must share length and rate");
    }
}

QuadWaveform::QuadWaveform(RealWaveform xi, RealWaveform xq, RealWaveform yi, RealWaveform yq)
    : xI(std::move(xi)), xQ(std::move(xq)), yI(std::move(yi)), yQ(std::move(yq)) {
    for (const RealWaveform* r : {&xQ, &yI, &yQ}) {
        if (r->size() != xI.size() || r->sample_rate() != xI.sample_rate()) {
            throw std::invalid_argument("QuadWaveform: rails must share length and rate");
        }
    }
}

RealWaveform real_part(const Waveform& w) {
    std::vector<double> v(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = w[i].real();
    }
    return RealWaveform(std::move(v), w.sample_rate(), w.t0())
        .with_valid_range(w.valid_begin(), w.valid_end());
}

RealWaveform imag_part(const Waveform& w) {
    std::vector<double> v(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = w[i].imag();
    }
    return RealWaveform(std::move(v), w.sample_rate(), w.t0())
        .with_valid_range(w.valid_begin(), w.valid_end());
}

Waveform make_complex(const RealWaveform& re, const RealWaveform& im) {
    if (re.size() != im.size() || re.sample_rate() != im.sample_rate()) {
        throw std::invalid_argument("make_complex: rails must share length and rate");
    }
    std::vector<cplx> v(re.size());
    for (std::size_t i = 0; i < re.size(); ++i) {
        v[i] = {re[i], im[i]};
    }
    return Waveform(std::move(v), re.sample_rate(), re.t0())
        .with_valid_range(std::max(re.valid_begin(), im.valid_begin()),
                          std::min(re.valid_end(), im.valid_end()));
}

QuadWaveform to_quad(const DualPolWaveform& dual) {
    return {real_part(dual.x), imag_part(dual.x), real_part(dual.y), imag_part(dual.y)};
}

DualPolWaveform to_dual(const QuadWaveform& quad) {
    return {make_complex(quad.xI, quad.xQ), make_complex(quad.yI, quad.yQ)};
}

Waveform fractional_delay(const Waveform& w, double tau) { return delay_impl(w, tau); }
RealWaveform fractional_delay(const RealWaveform& w, double tau) { return delay_impl(w, tau); }

Waveform single_pole_lowpass(const Waveform& w, double dc_gain, double f3db) {
    return lowpass_impl(w, dc_gain, f3db);
}
RealWaveform single_pole_lowpass(const RealWaveform& w, double dc_gain, double f3db) {
    return lowpass_impl(w, dc_gain, f3db);
}

template <typename T>
OnePole<T>::OnePole(double dc_gain, double f3db, double sample_rate) : gain_(dc_gain) {
    if (!(f3db > 0.0)) {
        throw std::invalid_argument("single-pole low-pass: f3db must be positive");
    }
    if (!(sample_rate > 0.0)) {
        throw std::invalid_argument("single-pole low-pass: sample rate must be positive");
    }
    if (std::isinf(f3db)) {
        passthrough_ = true;
        return;
    }
    if (f3db >= 0.5 * sample_rate) {
        throw std::invalid_argument("single-pole low-pass: f3db must lie below Nyquist");
    }
    passthrough_ = false;
    const double omega = std::tan(kPi * f3db / sample_rate);
    b_ = dc_gain * omega / (1.0 + omega);
    a_ = (omega - 1.0) / (omega + 1.0);
}

template <typename T>
void OnePole<T>::prime(const T& x0) noexcept {
    x_prev_ = x0;
    y_prev_ = gain_ * x0;
}

template <typename T>
T OnePole<T>::step(const T& x) noexcept {
    if (passthrough_) {
        return gain_ * x;
    }
    const T y = b_ * (x + x_prev_) - a_ * y_prev_;
    x_prev_ = x;
    y_prev_ = y;
    return y;
}

template class OnePole<cplx>;
template class OnePole<double>;

double one_pole_group_delay(double f3db) noexcept {
    if (std::isinf(f3db)) {
        return 0.0;
    }
    return 1.0 / (2.0 * kPi * f3db);
}

std::size_t fft_length(std::size_t n, const FftPolicy& policy) {
    if (policy.guard_samples == 0) {
        return n;
    }
    std::size_t len = 1;
    while (len < n + policy.guard_samples) {
        len <<= 1U;
    }
    return len;
}

std::vector<double> fft_frequencies(std::size_t n, double sample_rate) {
    std::vector<double> f(n);
    const double df = sample_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto signed_k = (k <= (n - 1) / 2) ? static_cast<double>(k)
                                                 : static_cast<double>(k) - static_cast<double>(n);
        f[k] = signed_k * df;
    }
    return f;
}

Waveform freq_domain_filter(const Waveform& w, std::span<const cplx> transfer,
                            const FftPolicy& policy) {
    if (w.empty()) {
        throw std::invalid_argument("freq_domain_filter: empty waveform");
    }
    const std::size_t len = fft_length(w.size(), policy);
    if (transfer.size() != len) {
        throw std::invalid_argument("freq_domain_filter: transfer function does not match FFT grid (" +
                                    std::to_string(transfer.size()) + " vs " +
                                    std::to_string(len) + ")");
    }

    std::vector<cplx> buf(len, cplx{});
    std::copy(w.samples().begin(), w.samples().end(), buf.begin());
    auto* data = reinterpret_cast<fftw_complex*>(buf.data());

    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int n = static_cast<int>(len);
        fwd = fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        inv = fftw_plan_dft_1d(n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_execute(fwd);
    for (std::size_t k = 0; k < len; ++k) {
        buf[k] *= transfer[k];
    }
    fftw_execute(inv);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
    }

    const double scale = 1.0 / static_cast<double>(len);
    std::vector<cplx> out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        out[i] = buf[i] * scale;
    }
    return Waveform(std::move(out), w.sample_rate(), w.t0())
        .with_valid_range(w.valid_begin(), w.valid_end());
}

Waveform freq_domain_filter(const Waveform& w, const std::function<cplx(double)>& transfer,
                            const FftPolicy& policy) {
    const auto freqs = fft_frequencies(fft_length(w.size(), policy), w.sample_rate());
    std::vector<cplx> h(freqs.size());
    std::transform(freqs.begin(), freqs.end(), h.begin(), transfer);
    return freq_domain_filter(w, h, policy);
}

std::vector<double> wiener_phase(std::size_t n, double dt, double linewidth, std::uint64_t seed) {
    if (linewidth < 0.0) {
        throw std::invalid_argument("wiener_phase: linewidth must be non-negative");
    }
    std::vector<double> phase(n, 0.0);
    if (linewidth == 0.0 || n == 0) {
        return phase;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 * kPi * linewidth * dt));
    for (std::size_t i = 1; i < n; ++i) {
        phase[i] = phase[i - 1] + gauss(rng);
    }
    return phase;
}

double energy(const Waveform& w) noexcept {
    double e = 0.0;
    for (const auto& s : w.samples()) {
        e += std::norm(s);
    }
    return e;
}

void write_csv(std::ostream& os, const Waveform& w) {
    os << "t,re,im\n";
    os.precision(17);
    for (std::size_t i = 0; i < w.size(); ++i) {
        os << w.time(i) << ',' << w[i].real() << ',' << w[i].imag() << '\n';
    }
}

void write_csv(const std::string& path, const Waveform& w) {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    write_csv(os, w);
}

Waveform read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("t,re,im", 0) != 0) {
        throw std::invalid_argument("read_csv: expected header t,re,im");
    }
    std::vector<double> t;
    std::vector<cplx> v;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        double tt = 0.0;
        double re = 0.0;
        double im = 0.0;
        char c1 = 0;
        char c2 = 0;
        if (!(row >> tt >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',') {
            throw std::invalid_argument("read_csv: malformed row '" + line + "'");
        }
        t.push_back(tt);
        v.emplace_back(re, im);
    }
    if (t.size() < 2) {
        throw std::invalid_argument("read_csv: need at least two samples to infer the rate");
    }
    const double fs = static_cast<double>(t.size() - 1) / (t.back() - t.front());
    return Waveform(std::move(v), fs, t.front());
}

} // namespace aaeq::sigkit
