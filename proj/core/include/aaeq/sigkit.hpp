#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace aaeq {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace sigkit {

/// Uniformly sampled signal. Amplitudes are in normalized internal units
/// (1.0 corresponds to the equalizer's 100 mV single-ended reference level).
///
/// `valid_begin()`/`valid_end()` bound the half-open range of samples that are
/// free of edge effects introduced by interpolation; freshly constructed
/// waveforms are valid everywhere.
template <typename T>
class BasicWaveform {
public:
    using value_type = T;

    BasicWaveform() = default;
    BasicWaveform(std::vector<T> samples, double sample_rate, double t0 = 0.0);

    std::span<const T> samples() const noexcept { return samples_; }
    const T& operator[](std::size_t i) const noexcept { return samples_[i]; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }

    double sample_rate() const noexcept { return sample_rate_; }
    double dt() const noexcept { return 1.0 / sample_rate_; }
    double t0() const noexcept { return t0_; }
    double time(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) / sample_rate_; }
    double duration() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_; }

    std::size_t valid_begin() const noexcept { return valid_begin_; }
    std::size_t valid_end() const noexcept { return valid_end_; }
    /// Returns a copy whose valid range is the intersection with [begin, end).
    BasicWaveform with_valid_range(std::size_t begin, std::size_t end) const;

    /// Releases the sample buffer (the waveform becomes empty).
    std::vector<T> take_samples() && { return std::move(samples_); }

private:
    std::vector<T> samples_;
    double sample_rate_ = 1.0;
    double t0_ = 0.0;
    std::size_t valid_begin_ = 0;
    std::size_t valid_end_ = 0;
};

using Waveform = BasicWaveform<cplx>;
using RealWaveform = BasicWaveform<double>;

/// Polarization pair. Both components share sample rate and length.
struct DualPolWaveform {
    Waveform x;
    Waveform y;

    DualPolWaveform() = default;
    DualPolWaveform(Waveform x_pol, Waveform y_pol);
};

/// The four real electrical rails of a coherent front end.
struct QuadWaveform {
    RealWaveform xI, xQ, yI, yQ;

    QuadWaveform() = default;
    QuadWaveform(RealWaveform xi, RealWaveform xq, RealWaveform yi, RealWaveform yq);

    double sample_rate() const noexcept { return xI.sample_rate(); }
    std::size_t size() const noexcept { return xI.size(); }
};

QuadWaveform to_quad(const DualPolWaveform& dual);
DualPolWaveform to_dual(const QuadWaveform& quad);

RealWaveform real_part(const Waveform& w);
RealWaveform imag_part(const Waveform& w);
Waveform make_complex(const RealWaveform& re, const RealWaveform& im);

/// Kaiser-windowed sinc interpolator half-width, in samples.
inline constexpr int kInterpolatorHalfWidth = 16;

/// Delays `w` by `tau` seconds (negative values advance) using band-limited
/// interpolation. Samples outside the waveform are taken as zero; the first
/// and last ceil(|tau|*fs)+K samples are marked invalid.
Waveform fractional_delay(const Waveform& w, double tau);
RealWaveform fractional_delay(const RealWaveform& w, double tau);

/// One-pole low-pass H(f) = dc_gain / (1 + j f/f3db), bilinear transform with
/// the corner frequency pre-warped. The filter starts in steady state for the
/// first input sample. An infinite f3db reduces to a pure gain.
Waveform single_pole_lowpass(const Waveform& w, double dc_gain, double f3db);
RealWaveform single_pole_lowpass(const RealWaveform& w, double dc_gain, double f3db);

/// Streaming form of single_pole_lowpass.
template <typename T>
class OnePole {
public:
    OnePole() = default;
    OnePole(double dc_gain, double f3db, double sample_rate);

    /// Puts the filter in steady state for a constant input `x0`.
    void prime(const T& x0) noexcept;
    T step(const T& x) noexcept;

    double dc_gain() const noexcept { return gain_; }
    bool passthrough() const noexcept { return passthrough_; }

private:
    double gain_ = 1.0;
    double b_ = 1.0;  // feed-forward coefficient on (x[n] + x[n-1])
    double a_ = 0.0;  // feedback coefficient on y[n-1]
    bool passthrough_ = true;
    T x_prev_{};
    T y_prev_{};
};

/// Low-frequency group delay of a one-pole stage, 1/(2*pi*f3db).
double one_pole_group_delay(double f3db) noexcept;

/// Zero padding applied by freq_domain_filter. With `guard_samples == 0` the
/// filter is a circular convolution over exactly size() samples. Otherwise the
/// signal is zero padded to the next power of two >= size() + guard_samples
/// and the result is trimmed back to size().
struct FftPolicy {
    std::size_t guard_samples = 0;
};

/// FFT length used for a waveform of `n` samples under `policy`.
std::size_t fft_length(std::size_t n, const FftPolicy& policy);

/// Frequencies (Hz) of the FFT bins for length `n`, in FFT order
/// (0, df, ..., then negative frequencies).
std::vector<double> fft_frequencies(std::size_t n, double sample_rate);

/// Applies a transfer function tabulated on the FFT grid of length
/// fft_length(w.size(), policy). Throws std::invalid_argument on grid mismatch.
Waveform freq_domain_filter(const Waveform& w, std::span<const cplx> transfer,
                            const FftPolicy& policy = {});

/// Tabulates `transfer(f)` on the FFT grid and filters.
Waveform freq_domain_filter(const Waveform& w, const std::function<cplx(double)>& transfer,
                            const FftPolicy& policy = {});

/// Wiener phase process with increment variance 2*pi*linewidth*dt, starting
/// at zero. A zero linewidth yields an all-zero path.
std::vector<double> wiener_phase(std::size_t n, double dt, double linewidth, std::uint64_t seed);

/// Total energy sum |w[i]|^2.
double energy(const Waveform& w) noexcept;

/// CSV with header `t,re,im`.
void write_csv(std::ostream& os, const Waveform& w);
void write_csv(const std::string& path, const Waveform& w);
Waveform read_csv(std::istream& is);

} // namespace sigkit
} // namespace aaeq
