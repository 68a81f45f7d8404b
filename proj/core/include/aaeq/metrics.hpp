#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "aaeq/sigkit.hpp"
#include "aaeq/txchain.hpp"

namespace aaeq::metrics {

/// Hard-decision FEC limit.
inline constexpr double kHdFecThreshold = 3.8e-3;

struct EvmReport {
    double evm_percent = 0.0;
    std::size_t N = 0;
};

/// sqrt(mean |s - r|^2) / A * 100. Throws InsufficientData below 100 symbols.
EvmReport evm(std::span<const cplx> symbols, std::span<const cplx> reference, double A);

/// Nearest-point EVM after removing the mean radius and the fourth-power
/// phase estimate; usable before ambiguity resolution.
EvmReport blind_evm(std::span<const cplx> symbols, double A);

/// Scales symbols so their mean modulus equals A.
std::vector<cplx> normalize_radius(std::span<const cplx> symbols, double A);

/// RMS of (A^2 - |s|^2) / A^2 after normalize_radius, so a common gain error
/// does not count.
double modulus_error(std::span<const cplx> symbols, double A);

/// Gaussian tail probability, 0.5 erfc(x / sqrt(2)).
double q_function(double x) noexcept;

struct BerEstimate {
    double ber = 0.0;
    int P = 2;
    int M = 4;
    bool exact_signal = false;
};

/// Square-QAM BER from EVM (fraction). evm == 0 yields 0 with exact_signal set.
BerEstimate ber_from_evm(double evm, int P = 2, int M = 4);

/// Quadrant index of v: 0 for Re>0,Im>0 then counter-clockwise.
int quadrant(cplx v) noexcept;

/// Output polarization p carries source `source[p]` (0 = X, 1 = Y) rotated
/// by j^rotation[p] and delayed by delay[p] symbols: rx[k] ~ j^r tx[k - d].
struct Alignment {
    bool swap = false;
    std::array<int, 2> source{0, 1};
    std::array<int, 2> rotation{0, 0};
    std::array<long, 2> delay{0, 0};
    std::array<std::size_t, 2> symbol_errors{0, 0};
    std::array<std::size_t, 2> compared{0, 0};
    double symbol_error_rate = 0.0;
};

/// Exhaustive search over {identity, swap} x 4 rotations x delays in
/// [-max_delay, max_delay]. Throws AlignmentFailure when the best candidate
/// still has more than 40% symbol errors.
Alignment resolve_ambiguity(std::span<const cplx> rx_x, std::span<const cplx> rx_y,
                            const tx::SymbolFrame& frame, int max_delay = 8);

struct AlignedPol {
    std::vector<cplx> rx;   // derotated received symbols
    std::vector<cplx> ref;  // transmitted symbols
    tx::Bits bits_i, bits_q;
};

/// Applies an alignment; pol 0 is output X, pol 1 output Y.
std::array<AlignedPol, 2> apply_alignment(std::span<const cplx> rx_x, std::span<const cplx> rx_y,
                                          const tx::SymbolFrame& frame, const Alignment& a);

struct BerCount {
    std::size_t errors = 0;
    std::size_t bits = 0;
    double ber() const noexcept { return bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0; }
};

/// Gray demapping of the aligned symbols against the transmitted bits.
BerCount count_ber(const AlignedPol& pol);

struct EyeStats {
    int sps = 0;
    int amplitude_bins = 0;
    double amplitude_min = 0.0;
    double amplitude_max = 0.0;
    /// counts[phase * amplitude_bins + bin]
    std::vector<std::size_t> counts;
    std::vector<double> height_per_phase;
    int best_phase = 0;
    double eye_height = 0.0;
    /// Fraction of the symbol with positive eye height.
    double eye_width = 0.0;
};

/// Picks the sampling phase with the largest inner eye height of the real
/// component, (mean_hi - 3 sd_hi) - (mean_lo + 3 sd_lo). Equal heights go to
/// the centre of the widest run of maxima. Needs at least 500 symbols after
/// `first_symbol`.
EyeStats best_sampling_phase(const sigkit::Waveform& w, int sps, std::size_t first_symbol = 0,
                             int amplitude_bins = 64);

/// w[(first_symbol + k) * sps + phase] for every complete symbol.
std::vector<cplx> sample_symbols(const sigkit::Waveform& w, int sps, int phase,
                                 std::size_t first_symbol = 0);

/// CSV: k,x_re,x_im,y_re,y_im.
void write_constellation_csv(std::ostream& os, std::span<const cplx> x, std::span<const cplx> y);
/// CSV: pol,phase,amplitude,count.
void write_eye_csv(std::ostream& os, const EyeStats& x, const EyeStats& y);

} // namespace aaeq::metrics
