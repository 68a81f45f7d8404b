#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "aaeq/sigkit.hpp"

namespace aaeq::tx {

using Bits = std::vector<std::uint8_t>;

/// Maximal-length LFSR sequence for the standard polynomials
/// x^7+x^6+1, x^15+x^14+1 and x^23+x^18+1. The register is loaded with
/// `seed` (low `order` bits) and shifted out MSB first, so the first `order`
/// outputs reproduce the seed bits.
Bits prbs_generate(int order, std::uint32_t seed, std::size_t n);

/// Gray mapping: A*((1-2*bi) + j(1-2*bq))/sqrt(2).
std::vector<cplx> qpsk_map(std::span<const std::uint8_t> bits_i,
                           std::span<const std::uint8_t> bits_q, double amplitude);

enum class PulseShape { Nrz, RaisedCosine };

struct TxConfig {
    double symbol_rate = 10e9;
    int prbs_order = 15;
    std::uint32_t seed_i = 0x1u;
    std::uint32_t seed_q = 0x5a5au;
    std::uint64_t phase_noise_seed = 7;
    /// Extra delay of the Y branch (2 m of PM fiber by default).
    double decorrelation_delay = 10e-9;
    double laser_linewidth = 0.0;
    /// Electrical drive bandwidth (one pole); infinity disables it.
    double tx_bandwidth = 20e9;
    double amplitude = 1.0;
    PulseShape pulse = PulseShape::Nrz;
    double rolloff = 0.2;

    void validate() const;
};

/// Transmitted payload. `x_syms[k]` is the symbol occupying
/// [k*T, (k+1)*T) on the X branch; Y carries the same stream shifted by the
/// decorrelation delay, so y_syms[k] == stream[k - delay_symbols].
struct SymbolFrame {
    std::vector<cplx> x_syms, y_syms;
    Bits x_bits_i, x_bits_q, y_bits_i, y_bits_q;
    double amplitude = 1.0;
    long delay_symbols = 0;
};

/// Builds the DP-QPSK field: PRBS I/Q streams -> Gray QPSK -> pulse shaping ->
/// drive low-pass -> PBS split -> Y delay -> shared-laser phase noise.
std::pair<sigkit::DualPolWaveform, SymbolFrame> transmit(const TxConfig& cfg,
                                                         std::size_t n_symbols, int sps);

/// CSV export of a frame: k,x_re,x_im,y_re,y_im,xi,xq,yi,yq.
void write_frame_csv(std::ostream& os, const SymbolFrame& frame);

} // namespace aaeq::tx
