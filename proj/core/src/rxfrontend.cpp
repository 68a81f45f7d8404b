#include "aaeq/rxfrontend.hpp"

#include <cmath>
#include <stdexcept>

#include "aaeq/errors.hpp"

namespace aaeq::rx {

void RxConfig::validate() const {
    if (!(agc_target > 0.0)) {
        throw ConfigError("must be positive", "rx.agc_target");
    }
    if (lo_linewidth < 0.0) {
        throw ConfigError("must be non-negative", "rx.lo_linewidth");
    }
    if (rx_bandwidth < 0.0) {
        throw ConfigError("must be non-negative", "rx.rx_bandwidth");
    }
    if (lo_path_delay < 0.0) {
        throw ConfigError("must be non-negative", "rx.lo_path_delay");
    }
}

std::vector<double> lo_phase_noise(std::size_t n, double fs, const RxConfig& cfg) {
    const double dt = 1.0 / fs;
    if (!cfg.shared_laser) {
        return sigkit::wiener_phase(n, dt, cfg.lo_linewidth, cfg.lo_phase_noise_seed);
    }
    const auto shared = sigkit::wiener_phase(n, dt, cfg.lo_linewidth, cfg.tx_phase_noise_seed);
    const auto lag = static_cast<std::size_t>(std::llround(cfg.lo_path_delay * fs));
    if (lag == 0) {
        return shared;
    }
    std::vector<double> phi(n);
    for (std::size_t i = 0; i < n; ++i) {
        phi[i] = shared[i >= lag ? i - lag : 0];
    }
    return phi;
}

sigkit::QuadWaveform coherent_detect(const sigkit::DualPolWaveform& sig, const RxConfig& cfg) {
    cfg.validate();
    const std::size_t n = sig.x.size();
    const double fs = sig.x.sample_rate();
    const auto phi = lo_phase_noise(n, fs, cfg);

    std::vector<cplx> xs(n);
    std::vector<cplx> ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = sig.x.time(i);
        const cplx lo_conj = std::polar(1.0, -(2.0 * kPi * cfg.lo_frequency_offset * t + cfg.lo_phase + phi[i]));
        xs[i] = sig.x[i] * lo_conj;
        ys[i] = sig.y[i] * lo_conj;
    }
    sigkit::Waveform x(std::move(xs), fs, sig.x.t0());
    sigkit::Waveform y(std::move(ys), fs, sig.y.t0());
    if (cfg.rx_bandwidth > 0.0) {
        x = sigkit::single_pole_lowpass(x, 1.0, cfg.rx_bandwidth);
        y = sigkit::single_pole_lowpass(y, 1.0, cfg.rx_bandwidth);
    }
    return sigkit::to_quad(sigkit::DualPolWaveform(std::move(x), std::move(y)));
}

namespace {

double pol_gain(const sigkit::RealWaveform& i, const sigkit::RealWaveform& q, double target,
                const char* name) {
    double p = 0.0;
    for (std::size_t k = 0; k < i.size(); ++k) {
        p += i[k] * i[k] + q[k] * q[k];
    }
    if (i.size() == 0 || !(p > 0.0)) {
        throw DegenerateInput(std::string("agc: polarization ") + name + " carries no signal");
    }
    return target / std::sqrt(p / static_cast<double>(i.size()));
}

sigkit::RealWaveform scaled(const sigkit::RealWaveform& w, double g) {
    std::vector<double> v(w.samples().begin(), w.samples().end());
    for (auto& s : v) {
        s *= g;
    }
    return sigkit::RealWaveform(std::move(v), w.sample_rate(), w.t0());
}

} // namespace

AgcResult agc(const sigkit::QuadWaveform& quad, double target) {
    if (!(target > 0.0)) {
        throw ConfigError("agc target must be positive", "rx.agc_target");
    }
    AgcResult r;
    r.gain_x = pol_gain(quad.xI, quad.xQ, target, "X");
    r.gain_y = pol_gain(quad.yI, quad.yQ, target, "Y");
    r.out = sigkit::QuadWaveform(scaled(quad.xI, r.gain_x), scaled(quad.xQ, r.gain_x),
                                 scaled(quad.yI, r.gain_y), scaled(quad.yQ, r.gain_y));
    return r;
}

} // namespace aaeq::rx
