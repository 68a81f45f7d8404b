#include "aaeq/txchain.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "aaeq/errors.hpp"

namespace aaeq::tx {

namespace {

int feedback_tap(int order) {
    switch (order) {
    case 7:
        return 6;
    case 15:
        return 14;
    case 23:
        return 18;
    default:
        throw std::invalid_argument("prbs_generate: order must be 7, 15 or 23 (got " +
                                    std::to_string(order) + ")");
    }
}

double raised_cosine(double t_over_T, double beta) {
    const double x = t_over_T;
    const double denom = 1.0 - 4.0 * beta * beta * x * x;
    const double s = std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x);
    if (std::abs(denom) < 1e-10) {
        // Limit at t = +-T/(2*beta).
        return (kPi / 4.0) * (std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x));
    }
    return s * std::cos(kPi * beta * x) / denom;
}

} // namespace

Bits prbs_generate(int order, std::uint32_t seed, std::size_t n) {
    const int tap = feedback_tap(order);
    const std::uint32_t mask = (1u << order) - 1u;
    std::uint32_t reg = seed & mask;
    if (reg == 0) {
        throw std::invalid_argument("prbs_generate: seed must have a nonzero register state");
    }
    Bits out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t msb = (reg >> (order - 1)) & 1u;
        const std::uint32_t fb = msb ^ ((reg >> (tap - 1)) & 1u);
        out[i] = static_cast<std::uint8_t>(msb);
        reg = ((reg << 1) | fb) & mask;
    }
    return out;
}

std::vector<cplx> qpsk_map(std::span<const std::uint8_t> bits_i,
                           std::span<const std::uint8_t> bits_q, double amplitude) {
    if (bits_i.size() != bits_q.size()) {
        throw std::invalid_argument("qpsk_map: I and Q bit streams differ in length");
    }
    const double s = amplitude / std::sqrt(2.0);
    std::vector<cplx> syms(bits_i.size());
    for (std::size_t k = 0; k < syms.size(); ++k) {
        syms[k] = {s * (1.0 - 2.0 * bits_i[k]), s * (1.0 - 2.0 * bits_q[k])};
    }
    return syms;
}

void TxConfig::validate() const {
    if (!(symbol_rate > 0.0)) {
        throw ConfigError("must be positive", "tx.symbol_rate");
    }
    if (decorrelation_delay < 0.0) {
        throw ConfigError("must be non-negative", "tx.decorrelation_delay");
    }
    if (laser_linewidth < 0.0) {
        throw ConfigError("must be non-negative", "tx.laser_linewidth");
    }
    if (!(tx_bandwidth > 0.0)) {
        throw ConfigError("must be positive", "tx.tx_bandwidth");
    }
    if (!(amplitude > 0.0)) {
        throw ConfigError("must be positive", "tx.amplitude");
    }
    if (pulse == PulseShape::RaisedCosine && (rolloff < 0.0 || rolloff > 1.0)) {
        throw ConfigError("must lie in [0, 1]", "tx.rolloff");
    }
    (void)feedback_tap(prbs_order);
}

std::pair<sigkit::DualPolWaveform, SymbolFrame> transmit(const TxConfig& cfg,
                                                         std::size_t n_symbols, int sps) {
    cfg.validate();
    if (n_symbols < 1) {
        throw std::invalid_argument("transmit: n_symbols must be at least 1");
    }
    if (sps < 2) {
        throw std::invalid_argument("transmit: need at least 2 samples per symbol");
    }
    const double fs = cfg.symbol_rate * sps;
    const auto usps = static_cast<std::size_t>(sps);

    const double delay_in_symbols = cfg.decorrelation_delay * cfg.symbol_rate;
    const long delay_symbols = std::lround(delay_in_symbols);
    const std::size_t lead =
        cfg.decorrelation_delay > 0.0 ? static_cast<std::size_t>(std::ceil(delay_in_symbols)) + 1 : 0;
    const std::size_t total = n_symbols + lead;

    const Bits bi = prbs_generate(cfg.prbs_order, cfg.seed_i, total);
    const Bits bq = prbs_generate(cfg.prbs_order, cfg.seed_q, total);
    const std::vector<cplx> stream = qpsk_map(bi, bq, cfg.amplitude);

    std::vector<cplx> drive(total * usps, cplx{});
    if (cfg.pulse == PulseShape::Nrz) {
        for (std::size_t k = 0; k < total; ++k) {
            std::fill_n(drive.begin() + static_cast<std::ptrdiff_t>(k * usps), usps, stream[k]);
        }
    } else {
        constexpr int kSpan = 8;  // pulse truncated to +-8 symbols
        const double center = 0.5 * sps;
        for (std::size_t k = 0; k < total; ++k) {
            const double peak = static_cast<double>(k * usps) + center;
            const auto lo = std::max<long>(0, std::lround(peak) - kSpan * sps);
            const auto hi =
                std::min<long>(static_cast<long>(drive.size()) - 1, std::lround(peak) + kSpan * sps);
            for (long i = lo; i <= hi; ++i) {
                const double t_over_T = (static_cast<double>(i) - peak) / sps;
                drive[static_cast<std::size_t>(i)] += stream[k] * raised_cosine(t_over_T, cfg.rolloff);
            }
        }
    }

    sigkit::Waveform field(std::move(drive), fs);
    field = sigkit::single_pole_lowpass(field, 1.0, cfg.tx_bandwidth);
    const auto full = field.samples();

    const std::size_t n = n_symbols * usps;
    const std::size_t start = lead * usps;
    std::vector<cplx> xs(full.begin() + static_cast<std::ptrdiff_t>(start),
                         full.begin() + static_cast<std::ptrdiff_t>(start + n));
    std::vector<cplx> ys(n);

    const double shift = cfg.decorrelation_delay * fs;
    const double whole = std::round(shift);
    if (std::abs(shift - whole) < 1e-9) {
        const auto off = static_cast<std::ptrdiff_t>(start) - static_cast<std::ptrdiff_t>(whole);
        for (std::size_t i = 0; i < n; ++i) {
            ys[i] = full[static_cast<std::size_t>(off + static_cast<std::ptrdiff_t>(i))];
        }
    } else {
        const auto delayed = sigkit::fractional_delay(field, cfg.decorrelation_delay);
        std::copy_n(delayed.samples().begin() + static_cast<std::ptrdiff_t>(start), n, ys.begin());
    }

    const auto phase = sigkit::wiener_phase(n, 1.0 / fs, cfg.laser_linewidth, cfg.phase_noise_seed);
    if (cfg.laser_linewidth > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const cplx rot = std::polar(1.0, phase[i]);
            xs[i] *= rot;
            ys[i] *= rot;
        }
    }

    SymbolFrame frame;
    frame.amplitude = cfg.amplitude;
    frame.delay_symbols = delay_symbols;
    frame.x_syms.assign(stream.begin() + static_cast<std::ptrdiff_t>(lead), stream.end());
    frame.x_bits_i.assign(bi.begin() + static_cast<std::ptrdiff_t>(lead), bi.end());
    frame.x_bits_q.assign(bq.begin() + static_cast<std::ptrdiff_t>(lead), bq.end());
    const auto yoff = static_cast<std::ptrdiff_t>(lead) - delay_symbols;
    frame.y_syms.assign(stream.begin() + yoff, stream.begin() + yoff + static_cast<std::ptrdiff_t>(n_symbols));
    frame.y_bits_i.assign(bi.begin() + yoff, bi.begin() + yoff + static_cast<std::ptrdiff_t>(n_symbols));
    frame.y_bits_q.assign(bq.begin() + yoff, bq.begin() + yoff + static_cast<std::ptrdiff_t>(n_symbols));

    sigkit::DualPolWaveform out(sigkit::Waveform(std::move(xs), fs), sigkit::Waveform(std::move(ys), fs));
    return {std::move(out), std::move(frame)};
}

void write_frame_csv(std::ostream& os, const SymbolFrame& frame) {
    os << "k,x_re,x_im,y_re,y_im,xi,xq,yi,yq\n";
    os.precision(17);
    for (std::size_t k = 0; k < frame.x_syms.size(); ++k) {
        os << k << ',' << frame.x_syms[k].real() << ',' << frame.x_syms[k].imag() << ','
           << frame.y_syms[k].real() << ',' << frame.y_syms[k].imag() << ','
           << int(frame.x_bits_i[k]) << ',' << int(frame.x_bits_q[k]) << ','
           << int(frame.y_bits_i[k]) << ',' << int(frame.y_bits_q[k]) << '\n';
    }
}

} // namespace aaeq::tx
