#include "aaeq/refimpl.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "aaeq/errors.hpp"

namespace aaeq::ref {

void DtCmaConfig::validate() const {
    if (!(mu > 0.0)) {
        throw ConfigError("must be positive", "ref.mu");
    }
    if (taps_per_pol < 1) {
        throw ConfigError("must be at least 1", "ref.taps_per_pol");
    }
    if (!(A > 0.0)) {
        throw ConfigError("must be positive", "ref.A");
    }
    if (!(symbol_rate > 0.0)) {
        throw ConfigError("must be positive", "ref.symbol_rate");
    }
    if (cost_window_symbols < 1) {
        throw ConfigError("must be at least 1", "ref.cost_window_symbols");
    }
    if (!(convergence_cost > 0.0)) {
        throw ConfigError("must be positive", "ref.convergence_cost");
    }
    if (trace_decimation_symbols < 1) {
        throw ConfigError("must be at least 1", "ref.trace_decimation_symbols");
    }
}

sigkit::QuadWaveform decimate(const sigkit::QuadWaveform& q, int factor, int offset) {
    if (factor < 1 || offset < 0 || offset >= factor) {
        throw std::invalid_argument("decimate: need factor >= 1 and 0 <= offset < factor");
    }
    const auto pick = [&](const sigkit::RealWaveform& w) {
        std::vector<double> v;
        for (std::size_t i = static_cast<std::size_t>(offset); i < w.size(); i += static_cast<std::size_t>(factor)) {
            v.push_back(w[i]);
        }
        return sigkit::RealWaveform(std::move(v), w.sample_rate() / factor, w.time(static_cast<std::size_t>(offset)));
    };
    return {pick(q.xI), pick(q.xQ), pick(q.yI), pick(q.yQ)};
}

DtCmaResult dtcma_run(const sigkit::QuadWaveform& quad, const DtCmaConfig& cfg, int symbol_phase) {
    cfg.validate();
    const double sps = quad.sample_rate() / cfg.symbol_rate;
    if (std::abs(sps - 2.0) > 1e-9) {
        throw std::invalid_argument("dtcma_run: input must have exactly 2 samples per symbol");
    }
    if (symbol_phase != 0 && symbol_phase != 1) {
        throw std::invalid_argument("dtcma_run: symbol_phase must be 0 or 1");
    }
    const auto dual = sigkit::to_dual(quad);
    const auto& x = dual.x;
    const auto& y = dual.y;
    const std::size_t n = x.size();
    const auto taps = static_cast<std::size_t>(cfg.taps_per_pol);
    const double a2 = cfg.A * cfg.A;

    eq::ButterflyWeights h(taps);
    h.h_xx[0] = {1.0, 1.0};
    h.h_yy[0] = {1.0, 1.0};

    DtCmaResult r;
    std::vector<cplx> xo(n), yo(n);
    std::vector<cplx> ux(taps), uy(taps);
    const auto dec = static_cast<std::size_t>(2 * cfg.trace_decimation_symbols);
    const auto win = static_cast<std::size_t>(2 * cfg.cost_window_symbols);
    double acc_x = 0.0, acc_y = 0.0, acc_w = 0.0;
    std::size_t acc_n = 0, win_n = 0;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < taps; ++k) {
            ux[k] = i >= k ? x[i - k] : cplx{};
            uy[k] = i >= k ? y[i - k] : cplx{};
        }
        cplx yx{}, yy{};
        for (std::size_t k = 0; k < taps; ++k) {
            yx += h.h_xx[k] * ux[k] + h.h_xy[k] * uy[k];
            yy += h.h_yx[k] * ux[k] + h.h_yy[k] * uy[k];
        }
        xo[i] = yx;
        yo[i] = yy;
        const cplx ex = yx * (a2 - std::norm(yx));
        const cplx ey = yy * (a2 - std::norm(yy));
        for (std::size_t k = 0; k < taps; ++k) {
            h.h_xx[k] += cfg.mu * ex * std::conj(ux[k]);
            h.h_xy[k] += cfg.mu * ex * std::conj(uy[k]);
            h.h_yx[k] += cfg.mu * ey * std::conj(ux[k]);
            h.h_yy[k] += cfg.mu * ey * std::conj(uy[k]);
        }
        if (h.max_abs() > cfg.weight_max) {
            throw DivergenceError("reference CMA diverged at sample " + std::to_string(i), x.time(i));
        }
        const double cx2 = (a2 - std::norm(yx)) * (a2 - std::norm(yx));
        const double cy2 = (a2 - std::norm(yy)) * (a2 - std::norm(yy));
        acc_x += cx2;
        acc_y += cy2;
        acc_w += 0.5 * (cx2 + cy2);
        if (++win_n == win) {
            r.trace.window_end_times.push_back(x.time(i));
            r.trace.window_cost.push_back(acc_w / static_cast<double>(win_n));
            acc_w = 0.0;
            win_n = 0;
        }
        if (++acc_n == dec) {
            r.trace.times.push_back(x.time(i));
            r.trace.weights.push_back(h);
            r.trace.err_power_x.push_back(acc_x / static_cast<double>(acc_n));
            r.trace.err_power_y.push_back(acc_y / static_cast<double>(acc_n));
            acc_x = acc_y = 0.0;
            acc_n = 0;
        }
    }
    r.trace.final_weights = h;
    r.trace.steady_weights = eq::ButterflyWeights(taps);
    if (r.trace.weights.empty()) {
        r.trace.steady_weights = h;
    } else {
        const std::size_t count = std::max<std::size_t>(1, r.trace.weights.size() / 10);
        for (std::size_t j = r.trace.weights.size() - count; j < r.trace.weights.size(); ++j) {
            const auto& w = r.trace.weights[j];
            for (std::size_t k = 0; k < taps; ++k) {
                r.trace.steady_weights.h_xx[k] += w.h_xx[k] / static_cast<double>(count);
                r.trace.steady_weights.h_xy[k] += w.h_xy[k] / static_cast<double>(count);
                r.trace.steady_weights.h_yx[k] += w.h_yx[k] / static_cast<double>(count);
                r.trace.steady_weights.h_yy[k] += w.h_yy[k] / static_cast<double>(count);
            }
        }
    }
    eq::analyze_convergence(r.trace, cfg.convergence_cost);
    for (std::size_t i = static_cast<std::size_t>(symbol_phase); i < n; i += 2) {
        r.symbols_x.push_back(xo[i]);
        r.symbols_y.push_back(yo[i]);
    }
    r.out = {sigkit::Waveform(std::move(xo), x.sample_rate(), x.t0()),
             sigkit::Waveform(std::move(yo), y.sample_rate(), y.t0())};
    return r;
}

double compare_taps(const eq::ButterflyWeights& a, const eq::ButterflyWeights& b) {
    a.validate();
    b.validate();
    if (a.taps() != b.taps()) {
        throw std::invalid_argument("compare_taps: tap counts differ");
    }
    const auto row = [](const std::vector<cplx>& p, const std::vector<cplx>& q) {
        std::vector<cplx> r(p);
        r.insert(r.end(), q.begin(), q.end());
        return r;
    };
    const std::array<std::vector<cplx>, 2> ra{row(a.h_xx, a.h_xy), row(a.h_yx, a.h_yy)};
    const std::array<std::vector<cplx>, 2> rb{row(b.h_xx, b.h_xy), row(b.h_yx, b.h_yy)};
    double total = 0.0;
    for (std::size_t r = 0; r < 2; ++r) {
        double na = 0.0, nb = 0.0;
        cplx inner{};
        for (std::size_t k = 0; k < ra[r].size(); ++k) {
            na += std::norm(ra[r][k]);
            nb += std::norm(rb[r][k]);
            inner += std::conj(rb[r][k]) * ra[r][k];
        }
        if (!(na > 0.0) || !(nb > 0.0)) {
            throw DegenerateInput("compare_taps: an output row has all-zero weights");
        }
        const cplx align = std::polar(1.0, std::arg(inner)) * std::sqrt(na / nb);
        double d = 0.0;
        for (std::size_t k = 0; k < ra[r].size(); ++k) {
            d += std::norm(ra[r][k] - align * rb[r][k]);
        }
        total += d / na;
    }
    return std::sqrt(total / 2.0);
}

} // namespace aaeq::ref
