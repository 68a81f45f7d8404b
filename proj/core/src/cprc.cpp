#include "aaeq/cprc.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "aaeq/errors.hpp"

namespace aaeq::cprc {

void CprcConfig::validate() const {
    if (kp < 0.0 || ki < 0.0 || (kp == 0.0 && ki == 0.0)) {
        throw ConfigError("kp and ki must be non-negative and not both zero", "cprc.kp");
    }
    if (!(qvco_gain > 0.0)) {
        throw ConfigError("must be positive", "cprc.qvco_gain");
    }
    if (!(A > 0.0)) {
        throw ConfigError("must be positive", "cprc.A");
    }
    if (!(symbol_rate > 0.0)) {
        throw ConfigError("must be positive", "cprc.symbol_rate");
    }
    if (!(lock_threshold > 0.0)) {
        throw ConfigError("must be positive", "cprc.lock_threshold");
    }
    if (lock_window_symbols < 1) {
        throw ConfigError("must be at least 1", "cprc.lock_window_symbols");
    }
    if (trace_decimation_symbols < 1) {
        throw ConfigError("must be at least 1", "cprc.trace_decimation_symbols");
    }
}

CprcConfig CprcConfig::design(double symbol_rate, double bl_norm, double zeta, double qvco_gain) {
    const double bl = bl_norm * symbol_rate;
    const double wn = 2.0 * bl / (zeta + 1.0 / (4.0 * zeta));
    const double k0 = 2.0 * kPi * qvco_gain;
    CprcConfig c;
    c.symbol_rate = symbol_rate;
    c.qvco_gain = qvco_gain;
    c.kp = 2.0 * zeta * wn / k0;
    c.ki = wn * wn / k0;
    return c;
}

cplx qpsk_decide(cplx v, double A) noexcept {
    const bool re_pos = v.real() > 0.0 || (v.real() == 0.0 && v.imag() > 0.0);
    const bool im_pos = v.imag() >= 0.0;
    const double s = A / std::sqrt(2.0);
    return {re_pos ? s : -s, im_pos ? s : -s};
}

double phase_detect(cplx v, double A) noexcept {
    const cplx d = qpsk_decide(v, A);
    return (v * std::conj(d)).imag() / (A * A);
}

CprcResult costas_run(const sigkit::Waveform& x_eq, const CprcConfig& cfg) {
    cfg.validate();
    const std::size_t n = x_eq.size();
    const double fs = x_eq.sample_rate();
    const double dt = 1.0 / fs;
    const double sps = fs / cfg.symbol_rate;
    const double k0 = 2.0 * kPi * cfg.qvco_gain;

    const auto win = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.lock_window_symbols * sps)));
    const auto dec = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.trace_decimation_symbols * sps)));

    std::vector<cplx> out(n);
    std::vector<double> e2(n);
    CprcTrace tr;
    double theta = 0.0;
    double integ = 0.0;
    double window_sum = 0.0;
    bool lock_now = false;

    for (std::size_t i = 0; i < n; ++i) {
        const cplx z = x_eq[i] * std::polar(1.0, -theta);
        out[i] = z;
        const double e = phase_detect(z, cfg.A);
        integ += cfg.ki * e * dt;
        const double control = cfg.kp * e + integ;
        theta += k0 * control * dt;

        e2[i] = e * e;
        window_sum += e2[i];
        if (i >= win) {
            window_sum -= e2[i - win];
        }
        if (i + 1 >= win) {
            const double rms = std::sqrt(std::max(0.0, window_sum) / static_cast<double>(win));
            lock_now = rms < cfg.lock_threshold;
            if (lock_now && !tr.lock_time) {
                tr.lock_time = x_eq.time(i + 1 - win);
            }
        }
        if (i % dec == 0) {
            tr.times.push_back(x_eq.time(i));
            tr.phase.push_back(theta);
            tr.control.push_back(control);
            tr.lock.push_back(lock_now);
        }
    }
    tr.locked = lock_now;
    const std::size_t tail = std::min(win, n);
    double s = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) {
        s += e2[i];
    }
    tr.final_error_rms = tail ? std::sqrt(s / static_cast<double>(tail)) : 0.0;
    return {sigkit::Waveform(std::move(out), fs, x_eq.t0()), std::move(tr)};
}

void write_trace_csv(std::ostream& os, const CprcTrace& x, const CprcTrace* y) {
    os << std::setprecision(17);
    if (!y) {
        os << "time,theta,control,lock\n";
        for (std::size_t i = 0; i < x.times.size(); ++i) {
            os << x.times[i] << ',' << x.phase[i] << ',' << x.control[i] << ',' << int(x.lock[i]) << '\n';
        }
        return;
    }
    os << "time,theta_x,control_x,lock_x,theta_y,control_y,lock_y\n";
    const std::size_t n = std::min(x.times.size(), y->times.size());
    for (std::size_t i = 0; i < n; ++i) {
        os << x.times[i] << ',' << x.phase[i] << ',' << x.control[i] << ',' << int(x.lock[i]) << ','
           << y->phase[i] << ',' << y->control[i] << ',' << int(y->lock[i]) << '\n';
    }
}

} // namespace aaeq::cprc
