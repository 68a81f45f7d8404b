#include "aaeq/cmaeq.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "aaeq/errors.hpp"

namespace aaeq::eq {

namespace {

constexpr cplx kResetTap{1.0, 1.0};

inline cplx mul(cplx a, cplx b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

inline cplx sat(cplx v, double c, double vmax) noexcept {
    return {analog::saturate(v.real(), c, vmax), analog::saturate(v.imag(), c, vmax)};
}

// Gilbert-cell complex product with the in-loop gain normalized to one.
struct Multiplier {
    double c1 = 0.0;
    double c2 = 0.0;
    double vmax = 2.0;

    explicit Multiplier(const analog::AnalogProfile& p)
        : c1(p.multiplier_port1.nonlinearity_coeff), c2(p.multiplier_port2.nonlinearity_coeff),
          vmax(p.vmax) {}

    bool linear() const noexcept { return c1 == 0.0 && c2 == 0.0; }

    cplx operator()(cplx port1, cplx port2) const noexcept {
        if (linear()) {
            return mul(port1, port2);
        }
        return mul(sat(port1, c1, vmax), sat(port2, c2, vmax));
    }

    double square(cplx v) const noexcept {
        const cplx s = c1 == 0.0 ? v : sat(v, c1, vmax);
        return s.real() * s.real() + s.imag() * s.imag();
    }
};

double leak_rate(const EqConfig& cfg) { return 2.0 * kPi * cfg.profile.integrator.f3db; }

// Reads x(t - d) from a history ring by cubic Lagrange interpolation; `d` is
// in samples relative to the newest entry.
class DelayTap {
public:
    DelayTap() = default;
    explicit DelayTap(double delay_samples)
        : delay_(delay_samples),
          buf_(static_cast<std::size_t>(std::ceil(delay_samples)) + 8, cplx{}) {}

    void push(cplx v) noexcept {
        head_ = (head_ + 1) % buf_.size();
        buf_[head_] = v;
    }

    cplx read() const noexcept {
        if (delay_ == 0.0) {
            return buf_[head_];
        }
        // Points at lags m-1, m, m+1, m+2 around the fractional lag, never in the future.
        const double whole = std::floor(delay_);
        const double mu = delay_ - whole;
        if (mu == 0.0) {
            return at(static_cast<std::size_t>(whole));
        }
        std::size_t m = static_cast<std::size_t>(whole);
        double x = mu;  // position in lag units measured from lag m
        if (m == 0) {
            m = 1;
            x -= 1.0;
        }
        const cplx p0 = at(m - 1), p1 = at(m), p2 = at(m + 1), p3 = at(m + 2);
        // Lagrange basis on nodes -1, 0, 1, 2.
        const double l0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
        const double l1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
        const double l2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
        const double l3 = (x + 1.0) * x * (x - 1.0) / 6.0;
        return l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3;
    }

private:
    cplx at(std::size_t lag) const noexcept {
        return buf_[(head_ + buf_.size() - lag) % buf_.size()];
    }

    double delay_ = 0.0;
    std::vector<cplx> buf_{cplx{}};
    std::size_t head_ = 0;
};

std::vector<std::vector<cplx>*> rows(ButterflyWeights& w) { return {&w.h_xx, &w.h_xy, &w.h_yx, &w.h_yy}; }

std::vector<const std::vector<cplx>*> rows(const ButterflyWeights& w) {
    return {&w.h_xx, &w.h_xy, &w.h_yx, &w.h_yy};
}

// Euler step shared by update_step and run.
inline void integrate(ButterflyWeights& w, std::size_t k, cplx cx, cplx cy, cplx ex, cplx ey,
                      const Multiplier& m, double beta, double wc, double dt) {
    const cplx ccx = std::conj(cx);
    const cplx ccy = std::conj(cy);
    w.h_xx[k] += dt * (-wc * w.h_xx[k] + beta * m(ccx, ex));
    w.h_xy[k] += dt * (-wc * w.h_xy[k] + beta * m(ccy, ex));
    w.h_yx[k] += dt * (-wc * w.h_yx[k] + beta * m(ccx, ey));
    w.h_yy[k] += dt * (-wc * w.h_yy[k] + beta * m(ccy, ey));
}

std::string format_time(double t) {
    std::ostringstream os;
    os << std::setprecision(6) << t * 1e6 << " us";
    return os.str();
}

sigkit::Waveform port_filter(const sigkit::Waveform& w, const analog::CellParams& p) {
    return sigkit::single_pole_lowpass(w, 1.0, p.f3db);
}

} // namespace

ButterflyWeights::ButterflyWeights(std::size_t taps)
    : h_xx(taps), h_xy(taps), h_yx(taps), h_yy(taps) {}

void ButterflyWeights::validate() const {
    if (h_xy.size() != h_xx.size() || h_yx.size() != h_xx.size() || h_yy.size() != h_xx.size()) {
        throw std::invalid_argument("ButterflyWeights: the four filters differ in length");
    }
}

double ButterflyWeights::max_abs() const noexcept {
    double m = 0.0;
    for (const auto* r : rows(*this)) {
        for (const cplx& h : *r) {
            m = std::max(m, std::abs(h));
        }
    }
    return m;
}

std::array<cplx, 4> ButterflyWeights::tap_matrix(std::size_t k) const {
    return {h_xx.at(k), h_xy.at(k), h_yx.at(k), h_yy.at(k)};
}

void EqConfig::validate() const {
    if (!(symbol_rate > 0.0)) {
        throw ConfigError("must be positive", "eq.symbol_rate");
    }
    if (L < 1) {
        throw ConfigError("must be at least 1", "eq.L");
    }
    if (tau_d < 0.0) {
        throw ConfigError("must be positive (0 selects the default)", "eq.tau_d");
    }
    if (!(beta > 0.0)) {
        throw ConfigError("must be positive", "eq.beta");
    }
    if (!(A > 0.0)) {
        throw ConfigError("must be positive", "eq.A");
    }
    if (!(weight_max > 0.0)) {
        throw ConfigError("must be positive", "eq.weight_max");
    }
    if (trace_decimation_symbols < 1) {
        throw ConfigError("must be at least 1", "eq.trace_decimation_symbols");
    }
    if (cost_window_symbols < 1) {
        throw ConfigError("must be at least 1", "eq.cost_window_symbols");
    }
    if (max_restarts < 0) {
        throw ConfigError("must be non-negative", "eq.max_restarts");
    }
    profile.validate();
    if (resolved_tau_c() < 0.0) {
        throw ConfigError("tau_c plus residual mismatch is negative", "eq.residual_mismatch_c");
    }
    if (resolved_tau_e() < 0.0) {
        throw ConfigError("tau_e plus residual mismatch is negative", "eq.residual_mismatch_e");
    }
}

double EqConfig::resolved_tau_d() const {
    if (tau_d > 0.0) {
        return tau_d;
    }
    if (profile.delay_cell.group_delay > 0.0) {
        return profile.delay_cell.group_delay;
    }
    return 0.5 / symbol_rate;
}

double EqConfig::resolved_tau_c() const {
    // Forward path (port-1 filter, adder) plus the error's port-2 filter; the
    // tap side's own port-1 filter is shared and cancels.
    const double nominal = tau_c.value_or(sigkit::one_pole_group_delay(profile.multiplier_port1.f3db) +
                                          sigkit::one_pole_group_delay(profile.adder.f3db) +
                                          sigkit::one_pole_group_delay(profile.multiplier_port2.f3db));
    return nominal + residual_mismatch_c;
}

double EqConfig::resolved_tau_e() const {
    const double nominal = tau_e.value_or(sigkit::one_pole_group_delay(profile.multiplier_port1.f3db));
    return nominal + residual_mismatch_e;
}

std::vector<double> EqualizerState::integrator_states() const {
    std::vector<double> v;
    v.reserve(8 * weights.taps());
    for (const auto* r : rows(weights)) {
        for (const cplx& h : *r) {
            v.push_back(h.real());
            v.push_back(h.imag());
        }
    }
    return v;
}

void EqualizerState::set_integrator_states(std::span<const double> v) {
    if (v.size() != 8 * weights.taps()) {
        throw std::invalid_argument("set_integrator_states: expected 8*(L+1) values");
    }
    std::size_t i = 0;
    for (auto* r : rows(weights)) {
        for (cplx& h : *r) {
            h = {v[i], v[i + 1]};
            i += 2;
        }
    }
}

EqualizerState reset(const EqConfig& cfg) {
    if (cfg.L < 1) {
        throw ConfigError("must be at least 1", "eq.L");
    }
    EqualizerState s;
    s.weights = ButterflyWeights(static_cast<std::size_t>(cfg.L) + 1);
    s.weights.h_xx[0] = kResetTap;
    s.weights.h_yy[0] = kResetTap;
    s.time = 0.0;
    s.initialized = true;
    return s;
}

std::pair<cplx, cplx> forward(const EqualizerState& s, std::span<const cplx> xbar,
                              std::span<const cplx> ybar) {
    if (!s.initialized) {
        throw StateError("forward: equalizer state not initialized (call reset)");
    }
    const auto& w = s.weights;
    if (xbar.size() != w.taps() || ybar.size() != w.taps()) {
        throw std::invalid_argument("forward: tap vector length differs from L+1");
    }
    cplx xe{};
    cplx ye{};
    for (std::size_t k = 0; k < w.taps(); ++k) {
        xe += mul(w.h_xx[k], xbar[k]) + mul(w.h_xy[k], ybar[k]);
        ye += mul(w.h_yx[k], xbar[k]) + mul(w.h_yy[k], ybar[k]);
    }
    return {xe, ye};
}

void update_step(EqualizerState& s, std::span<const cplx> xbar_c, std::span<const cplx> ybar_c,
                 cplx eps_x, cplx eps_y, const EqConfig& cfg, double dt) {
    if (!s.initialized) {
        throw StateError("update_step: equalizer state not initialized (call reset)");
    }
    if (xbar_c.size() != s.weights.taps() || ybar_c.size() != s.weights.taps()) {
        throw std::invalid_argument("update_step: tap vector length differs from L+1");
    }
    const Multiplier m(cfg.profile);
    const double wc = leak_rate(cfg);
    for (std::size_t k = 0; k < s.weights.taps(); ++k) {
        integrate(s.weights, k, xbar_c[k], ybar_c[k], eps_x, eps_y, m, cfg.beta, wc, dt);
    }
    s.time += dt;
}

std::vector<sigkit::Waveform> tap_bank(const sigkit::Waveform& in, const EqConfig& cfg) {
    analog::CellParams cell = cfg.profile.delay_cell;
    cell.group_delay = cfg.resolved_tau_d();
    std::vector<sigkit::Waveform> bank;
    bank.reserve(static_cast<std::size_t>(cfg.L) + 1);
    bank.push_back(in);
    for (int k = 1; k <= cfg.L; ++k) {
        bank.push_back(analog::delay_cell(bank.back(), cell));
    }
    return bank;
}

sigkit::DualPolWaveform filter_frozen(const sigkit::DualPolWaveform& in, const ButterflyWeights& w,
                                      const EqConfig& cfg) {
    cfg.validate();
    w.validate();
    if (w.taps() != static_cast<std::size_t>(cfg.L) + 1) {
        throw std::invalid_argument("filter_frozen: weights do not have L+1 taps");
    }
    const auto bx = tap_bank(in.x, cfg);
    const auto by = tap_bank(in.y, cfg);
    std::vector<sigkit::Waveform> fx, fy;
    for (std::size_t k = 0; k < bx.size(); ++k) {
        fx.push_back(port_filter(bx[k], cfg.profile.multiplier_port1));
        fy.push_back(port_filter(by[k], cfg.profile.multiplier_port1));
    }
    const Multiplier m(cfg.profile);
    const double fs = in.x.sample_rate();
    sigkit::OnePole<cplx> ax(1.0, cfg.profile.adder.f3db, fs);
    sigkit::OnePole<cplx> ay(1.0, cfg.profile.adder.f3db, fs);
    const std::size_t n = in.x.size();
    std::vector<cplx> xo(n), yo(n);
    for (std::size_t i = 0; i < n; ++i) {
        cplx xe{}, ye{};
        for (std::size_t k = 0; k < w.taps(); ++k) {
            xe += m(fx[k][i], w.h_xx[k]) + m(fy[k][i], w.h_xy[k]);
            ye += m(fx[k][i], w.h_yx[k]) + m(fy[k][i], w.h_yy[k]);
        }
        xo[i] = ax.step(xe);
        yo[i] = ay.step(ye);
    }
    return {sigkit::Waveform(std::move(xo), fs, in.x.t0()), sigkit::Waveform(std::move(yo), fs, in.y.t0())};
}

void analyze_convergence(EqTrace& trace, double threshold) {
    trace.converged = false;
    trace.convergence_time.reset();
    const auto& c = trace.window_cost;
    if (c.empty()) {
        trace.final_cost = 0.0;
        return;
    }
    const std::size_t tail = std::min<std::size_t>(3, c.size());
    double f = 0.0;
    for (std::size_t i = c.size() - tail; i < c.size(); ++i) {
        f += c[i];
    }
    f /= static_cast<double>(tail);
    trace.final_cost = f;
    if (!(f < threshold) || c.size() < 2) {
        return;
    }
    const double band = 1.2 * f + 0.01;
    std::size_t first = c.size();
    while (first > 0 && c[first - 1] <= band) {
        --first;
    }
    if (first == c.size()) {
        return;
    }
    trace.converged = true;
    const double width = c.size() > 1 ? trace.window_end_times[1] - trace.window_end_times[0]
                                       : trace.window_end_times[0];
    trace.convergence_time = trace.window_end_times[first] - width;
}

EqResult run(const sigkit::QuadWaveform& quad, const EqConfig& cfg) {
    cfg.validate();
    const std::size_t n = quad.size();
    if (n == 0) {
        throw DegenerateInput("eq::run: empty input");
    }
    const double fs = quad.sample_rate();
    const double dt = 1.0 / fs;
    const double sps = fs / cfg.symbol_rate;
    const auto& prof = cfg.profile;
    const std::size_t taps = static_cast<std::size_t>(cfg.L) + 1;

    const auto dual = sigkit::to_dual(quad);
    const auto bx = tap_bank(dual.x, cfg);
    const auto by = tap_bank(dual.y, cfg);
    const double tau_c = cfg.resolved_tau_c();
    std::vector<sigkit::Waveform> fx, fy, cx, cy;
    for (std::size_t k = 0; k < taps; ++k) {
        fx.push_back(port_filter(bx[k], prof.multiplier_port1));
        fy.push_back(port_filter(by[k], prof.multiplier_port1));
        const auto dx = tau_c > 0.0 ? sigkit::fractional_delay(bx[k], tau_c) : bx[k];
        const auto dy = tau_c > 0.0 ? sigkit::fractional_delay(by[k], tau_c) : by[k];
        cx.push_back(port_filter(dx, prof.multiplier_port1));
        cy.push_back(port_filter(dy, prof.multiplier_port1));
    }

    const Multiplier m(prof);
    const double wc = leak_rate(cfg);
    const double a2 = cfg.A * cfg.A;
    const double wmax2 = cfg.weight_max * cfg.weight_max;

    sigkit::OnePole<cplx> add_x(1.0, prof.adder.f3db, fs), add_y(1.0, prof.adder.f3db, fs);
    sigkit::OnePole<cplx> sq_x(1.0, prof.multiplier_port1.f3db, fs), sq_y(1.0, prof.multiplier_port1.f3db, fs);
    sigkit::OnePole<cplx> ep_x(1.0, prof.multiplier_port2.f3db, fs), ep_y(1.0, prof.multiplier_port2.f3db, fs);
    DelayTap hist_x(cfg.resolved_tau_e() * fs), hist_y(cfg.resolved_tau_e() * fs);

    EqualizerState s = reset(cfg);
    s.time = quad.xI.t0();
    EqTrace tr;

    const auto dec = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.trace_decimation_symbols * sps)));
    const auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.cost_window_symbols * sps)));
    const double det_floor = 0.1 * std::norm(kResetTap);  // 0.1 |det| of the reset matrix
    std::size_t singular_run = 0;
    std::mt19937_64 restart_rng(cfg.restart_seed);

    std::vector<cplx> xo(n), yo(n);
    double acc_x = 0.0, acc_y = 0.0, acc_w = 0.0;
    std::size_t acc_n = 0, win_n = 0;

    for (std::size_t i = 0; i < n; ++i) {
        auto& w = s.weights;
        cplx xe{}, ye{};
        for (std::size_t k = 0; k < taps; ++k) {
            xe += m(fx[k][i], w.h_xx[k]) + m(fy[k][i], w.h_xy[k]);
            ye += m(fx[k][i], w.h_yx[k]) + m(fy[k][i], w.h_yy[k]);
        }
        xe = add_x.step(xe);
        ye = add_y.step(ye);
        xo[i] = xe;
        yo[i] = ye;
        hist_x.push(xe);
        hist_y.push(ye);

        const double mod_x = a2 - m.square(sq_x.step(xe));
        const double mod_y = a2 - m.square(sq_y.step(ye));
        const cplx ex = ep_x.step(m(hist_x.read(), cplx{mod_x, 0.0}));
        const cplx ey = ep_y.step(m(hist_y.read(), cplx{mod_y, 0.0}));

        for (std::size_t k = 0; k < taps; ++k) {
            integrate(w, k, cx[k][i], cy[k][i], ex, ey, m, cfg.beta, wc, dt);
        }
        s.time += dt;

        for (const auto* r : rows(std::as_const(w))) {
            for (const cplx& h : *r) {
                if (!(std::norm(h) <= wmax2)) {
                    throw DivergenceError("equalizer weights diverged at t = " + format_time(s.time),
                                          s.time);
                }
            }
        }

        const double cx2 = (a2 - std::norm(xe)) * (a2 - std::norm(xe));
        const double cy2 = (a2 - std::norm(ye)) * (a2 - std::norm(ye));
        acc_x += cx2;
        acc_y += cy2;
        acc_w += 0.5 * (cx2 + cy2);
        ++acc_n;
        ++win_n;

        if (win_n == win) {
            tr.window_end_times.push_back(s.time);
            tr.window_cost.push_back(acc_w / static_cast<double>(win_n));
            acc_w = 0.0;
            win_n = 0;
        }

        if (acc_n == dec) {
            tr.times.push_back(s.time);
            tr.weights.push_back(w);
            tr.err_power_x.push_back(acc_x / static_cast<double>(acc_n));
            tr.err_power_y.push_back(acc_y / static_cast<double>(acc_n));
            acc_x = acc_y = 0.0;
            acc_n = 0;

            const std::size_t c = cfg.center_tap();
            const double det = std::abs(w.h_xx[c] * w.h_yy[c] - w.h_xy[c] * w.h_yx[c]);
            singular_run = det < det_floor ? singular_run + dec : 0;
            if (singular_run >= win) {
                singular_run = 0;
                if (!tr.singularity_detected) {
                    tr.warnings.push_back("center-tap determinant collapsed at t = " + format_time(s.time) +
                                          " (both outputs locked to one polarization)");
                }
                tr.singularity_detected = true;
                if (cfg.restart_on_singularity && tr.restarts < cfg.max_restarts) {
                    std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
                    const double a = ang(restart_rng), b = ang(restart_rng), d = ang(restart_rng);
                    w = ButterflyWeights(taps);
                    w.h_xx[c] = kResetTap * std::cos(a) * std::polar(1.0, b);
                    w.h_xy[c] = -kResetTap * std::sin(a) * std::polar(1.0, d);
                    w.h_yx[c] = kResetTap * std::sin(a) * std::polar(1.0, -d);
                    w.h_yy[c] = kResetTap * std::cos(a) * std::polar(1.0, -b);
                    ++tr.restarts;
                    tr.warnings.push_back("weights re-randomized at t = " + format_time(s.time));
                }
            }
        }
    }

    tr.final_weights = s.weights;
    tr.steady_weights = ButterflyWeights(taps);
    if (!tr.weights.empty()) {
        const std::size_t count = std::max<std::size_t>(1, tr.weights.size() / 10);
        const std::size_t from = tr.weights.size() - count;
        for (std::size_t j = from; j < tr.weights.size(); ++j) {
            auto dst = rows(tr.steady_weights);
            const auto src = rows(tr.weights[j]);
            for (std::size_t r = 0; r < 4; ++r) {
                for (std::size_t k = 0; k < taps; ++k) {
                    (*dst[r])[k] += (*src[r])[k] / static_cast<double>(count);
                }
            }
        }
    } else {
        tr.steady_weights = s.weights;
    }
    analyze_convergence(tr, cfg.convergence_cost);

    sigkit::Waveform x(std::move(xo), fs, quad.xI.t0());
    sigkit::Waveform y(std::move(yo), fs, quad.yI.t0());
    x = sigkit::single_pole_lowpass(x, prof.buffer.dc_gain, prof.buffer.f3db);
    y = sigkit::single_pole_lowpass(y, prof.buffer.dc_gain, prof.buffer.f3db);
    return {sigkit::to_quad(sigkit::DualPolWaveform(std::move(x), std::move(y))), std::move(tr)};
}

void write_trace_csv(std::ostream& os, const EqTrace& trace) {
    os << "time";
    const std::size_t taps = trace.weights.empty() ? 0 : trace.weights.front().taps();
    for (const char* name : {"xx", "xy", "yx", "yy"}) {
        for (std::size_t k = 0; k < taps; ++k) {
            os << ",h" << name << k << "_re,h" << name << k << "_im";
        }
    }
    os << ",err_power_x,err_power_y\n";
    os << std::setprecision(17);
    for (std::size_t j = 0; j < trace.times.size(); ++j) {
        os << trace.times[j];
        for (const auto* r : rows(trace.weights[j])) {
            for (const cplx& h : *r) {
                os << ',' << h.real() << ',' << h.imag();
            }
        }
        os << ',' << trace.err_power_x[j] << ',' << trace.err_power_y[j] << '\n';
    }
}

} // namespace aaeq::eq
