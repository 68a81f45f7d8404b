#include "aaeq/analogcells.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aaeq/errors.hpp"

namespace aaeq::analog {

double db_to_linear(double db) noexcept { return std::pow(10.0, db / 20.0); }

void CellParams::validate(const std::string& field) const {
    if (!(f3db > 0.0)) {
        throw ConfigError("f3db must be positive", field + ".f3db");
    }
    if (nonlinearity_coeff < 0.0 || nonlinearity_coeff >= 1.0) {
        throw ConfigError("nonlinearity_coeff must lie in [0, 1)", field + ".nonlinearity_coeff");
    }
    if (!(dc_gain > 0.0) || !std::isfinite(dc_gain)) {
        throw ConfigError("dc_gain must be positive and finite", field + ".dc_gain");
    }
    if (group_delay < 0.0) {
        throw ConfigError("group_delay must be non-negative", field + ".group_delay");
    }
}

void AnalogProfile::validate() const {
    delay_cell.validate("profile.delay_cell");
    multiplier_port1.validate("profile.multiplier_port1");
    multiplier_port2.validate("profile.multiplier_port2");
    adder.validate("profile.adder");
    integrator.validate("profile.integrator");
    buffer.validate("profile.buffer");
    if (!std::isfinite(integrator.f3db)) {
        throw ConfigError("integrator bandwidth must be finite", "profile.integrator.f3db");
    }
    if (!(vmax > 0.0)) {
        throw ConfigError("must be positive", "profile.vmax");
    }
}

namespace {

// 103.9 dB DC gain with a 56.2 Hz corner.
const double kPaperIntegratorGain = db_to_linear(103.9);
constexpr double kPaperIntegratorCorner = 56.2;

} // namespace

AnalogProfile AnalogProfile::ideal() {
    AnalogProfile p;
    p.name = "ideal";
    p.integrator.dc_gain = 1e10;
    p.integrator.f3db = kPaperIntegratorGain * kPaperIntegratorCorner / p.integrator.dc_gain;
    return p;
}

AnalogProfile AnalogProfile::paper() {
    AnalogProfile p;
    p.name = "paper";
    p.delay_cell = {db_to_linear(-1.4), 20.7e9, 24.3e-12, 0.0};
    p.multiplier_port1 = {db_to_linear(7.4), 20.2e9, 0.0, kPaperNonlinearity};
    p.multiplier_port2 = {db_to_linear(6.02), 17.9e9, 0.0, kPaperNonlinearity};
    p.adder = {db_to_linear(12.3), 18.4e9, 0.0, 0.0};
    p.integrator = {kPaperIntegratorGain, kPaperIntegratorCorner, 0.0, 0.0};
    p.buffer = {db_to_linear(4.9), 37.8e9, 0.0, 0.0};
    return p;
}

AnalogProfile AnalogProfile::named(const std::string& name) {
    if (name == "ideal") {
        return ideal();
    }
    if (name == "paper") {
        return paper();
    }
    throw ConfigError("unknown analog profile '" + name + "' (expected ideal or paper)",
                      "eq.profile");
}

double gain_bandwidth(const CellParams& integrator) noexcept {
    return integrator.dc_gain * integrator.f3db;
}

double saturate(double v, double coeff, double vmax) noexcept {
    if (coeff == 0.0) {
        return v;
    }
    const double c = std::clamp(v, -vmax, vmax);
    const double r = c / vmax;
    return c * (1.0 - coeff * r * r);
}

namespace {

template <typename W>
W delay_cell_impl(const W& w, const CellParams& p) {
    p.validate("delay_cell");
    const double pole = sigkit::one_pole_group_delay(p.f3db);
    const double pure = p.group_delay - pole;
    if (pure < -1e-18) {
        throw ConfigError("group_delay is shorter than the pole delay 1/(2 pi f3db)",
                          "delay_cell.group_delay");
    }
    const W delayed = pure > 0.0 ? sigkit::fractional_delay(w, pure) : w;
    W out = sigkit::single_pole_lowpass(delayed, p.dc_gain, p.f3db);
    return out.with_valid_range(delayed.valid_begin(), delayed.valid_end());
}

sigkit::RealWaveform port(const sigkit::RealWaveform& w, const CellParams& p, double vmax) {
    const auto f = sigkit::single_pole_lowpass(w, 1.0, p.f3db);
    std::vector<double> v(f.samples().begin(), f.samples().end());
    for (auto& s : v) {
        s = saturate(s, p.nonlinearity_coeff, vmax);
    }
    return sigkit::RealWaveform(std::move(v), w.sample_rate(), w.t0());
}

sigkit::RealWaveform sum_cell(const sigkit::RealWaveform& a, const sigkit::RealWaveform& b,
                              double sign, const CellParams& p) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = a[i] + sign * b[i];
    }
    return sigkit::single_pole_lowpass(sigkit::RealWaveform(std::move(v), a.sample_rate(), a.t0()),
                                       p.dc_gain, p.f3db);
}

} // namespace

sigkit::Waveform delay_cell(const sigkit::Waveform& w, const CellParams& p) {
    return delay_cell_impl(w, p);
}

sigkit::RealWaveform delay_cell(const sigkit::RealWaveform& w, const CellParams& p) {
    return delay_cell_impl(w, p);
}

sigkit::RealWaveform gilbert_multiply(const sigkit::RealWaveform& a, const sigkit::RealWaveform& b,
                                      const CellParams& p1, const CellParams& p2, double vmax) {
    if (a.size() != b.size() || a.sample_rate() != b.sample_rate()) {
        throw std::invalid_argument("gilbert_multiply: operands are on different grids");
    }
    p1.validate("multiplier_port1");
    p2.validate("multiplier_port2");
    const auto fa = port(a, p1, vmax);
    const auto fb = port(b, p2, vmax);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = p1.dc_gain * fa[i] * fb[i];
    }
    return sigkit::RealWaveform(std::move(out), a.sample_rate(), a.t0());
}

sigkit::Waveform complex_multiply(const sigkit::Waveform& a, const sigkit::Waveform& b,
                                  const AnalogProfile& profile) {
    if (a.size() != b.size() || a.sample_rate() != b.sample_rate()) {
        throw std::invalid_argument("complex_multiply: operands are on different grids");
    }
    const auto ai = sigkit::real_part(a);
    const auto aq = sigkit::imag_part(a);
    const auto bi = sigkit::real_part(b);
    const auto bq = sigkit::imag_part(b);
    const auto& p1 = profile.multiplier_port1;
    const auto& p2 = profile.multiplier_port2;
    const double vm = profile.vmax;
    const auto ii = gilbert_multiply(ai, bi, p1, p2, vm);
    const auto qq = gilbert_multiply(aq, bq, p1, p2, vm);
    const auto iq = gilbert_multiply(ai, bq, p1, p2, vm);
    const auto qi = gilbert_multiply(aq, bi, p1, p2, vm);
    return sigkit::make_complex(sum_cell(ii, qq, -1.0, profile.adder),
                                sum_cell(iq, qi, +1.0, profile.adder));
}

sigkit::Waveform leaky_integrate(const sigkit::Waveform& u, const CellParams& p, cplx initial) {
    LeakyIntegrator integ(p, u.dt(), 1.0, initial);
    std::vector<cplx> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        v[i] = integ.step(u[i]);
    }
    return sigkit::Waveform(std::move(v), u.sample_rate(), u.t0());
}

LeakyIntegrator::LeakyIntegrator(const CellParams& p, double dt, double input_scale, cplx initial)
    : wc_(2.0 * kPi * p.f3db), k_(p.dc_gain * 2.0 * kPi * p.f3db * input_scale), dt_(dt), v_(initial) {
    p.validate("integrator");
    if (!std::isfinite(p.f3db)) {
        throw ConfigError("integrator bandwidth must be finite", "integrator.f3db");
    }
    if (dt * wc_ >= 2.0) {
        throw ConfigError("Euler step unstable: dt * 2 pi f3db >= 2", "integrator.f3db");
    }
}

} // namespace aaeq::analog
