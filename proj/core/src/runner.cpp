#include "aaeq/runner.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "aaeq/errors.hpp"
#include "aaeq/refimpl.hpp"

namespace aaeq::runner {

using json = nlohmann::ordered_json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) { return splitmix64(seed ^ splitmix64(tag)); }

enum SeedTag : std::uint64_t { kJones = 1, kNoise = 2, kTxPhase = 3, kLoPhase = 4 };

// Sum of squared impulse-response taps of the receiver low-pass.
double noise_gain(double f3db, double fs) {
    if (!(f3db > 0.0) || !std::isfinite(f3db)) {
        return 1.0;
    }
    sigkit::OnePole<double> f(1.0, f3db, fs);
    double g = 0.0;
    double y = f.step(1.0);
    g += y * y;
    for (int i = 0; i < 1 << 20; ++i) {
        y = f.step(0.0);
        g += y * y;
        if (std::abs(y) < 1e-12) {
            break;
        }
    }
    return g;
}

double mean_power(const sigkit::DualPolWaveform& w) {
    return 0.5 * (sigkit::energy(w.x) + sigkit::energy(w.y)) / static_cast<double>(w.x.size());
}

tx::SymbolFrame slice(const tx::SymbolFrame& f, std::size_t first) {
    tx::SymbolFrame s;
    s.amplitude = f.amplitude;
    s.delay_symbols = f.delay_symbols;
    const auto off = static_cast<std::ptrdiff_t>(first);
    s.x_syms.assign(f.x_syms.begin() + off, f.x_syms.end());
    s.y_syms.assign(f.y_syms.begin() + off, f.y_syms.end());
    s.x_bits_i.assign(f.x_bits_i.begin() + off, f.x_bits_i.end());
    s.x_bits_q.assign(f.x_bits_q.begin() + off, f.x_bits_q.end());
    s.y_bits_i.assign(f.y_bits_i.begin() + off, f.y_bits_i.end());
    s.y_bits_q.assign(f.y_bits_q.begin() + off, f.y_bits_q.end());
    return s;
}

double rms_pair(double a, double b) { return std::sqrt(0.5 * (a * a + b * b)); }

struct StageContext {
    const ScenarioConfig& cfg;
    const tx::SymbolFrame& window_frame;
    std::size_t first_symbol;
};

// Removes the constant fourth-power phase of the evaluation window so the
// eye of the in-phase rail is open for a rotated constellation.
sigkit::Waveform derotated(const sigkit::Waveform& w, int sps, std::size_t first_symbol) {
    cplx m4{};
    for (std::size_t i = first_symbol * static_cast<std::size_t>(sps); i < w.size(); ++i) {
        const cplx s = w[i] * w[i];
        m4 += s * s;
    }
    const cplx r = std::polar(1.0, -std::arg(-m4) / 4.0);
    std::vector<cplx> v(w.samples().begin(), w.samples().end());
    for (auto& s : v) {
        s *= r;
    }
    return sigkit::Waveform(std::move(v), w.sample_rate(), w.t0());
}

StageMetrics evaluate_stage(const std::string& name, const sigkit::DualPolWaveform& w,
                            const StageContext& ctx, bool with_modulus_error,
                            const StageMetrics* timing = nullptr) {
    const auto& cfg = ctx.cfg;
    const double A = ctx.window_frame.amplitude;
    StageMetrics m;
    m.stage = name;
    m.eye_x = metrics::best_sampling_phase(derotated(w.x, cfg.sps, ctx.first_symbol), cfg.sps, ctx.first_symbol,
                                           cfg.metrics.eye_bins);
    m.eye_y = metrics::best_sampling_phase(derotated(w.y, cfg.sps, ctx.first_symbol), cfg.sps, ctx.first_symbol,
                                           cfg.metrics.eye_bins);
    m.sampling_phase = {m.eye_x.best_phase, m.eye_y.best_phase};
    if (timing) {
        // Rotation-only stages downstream share this stage's timing.
        m.sampling_phase = timing->sampling_phase;
    }
    m.eye_height = {m.eye_x.height_per_phase[static_cast<std::size_t>(m.sampling_phase[0])],
                    m.eye_y.height_per_phase[static_cast<std::size_t>(m.sampling_phase[1])]};
    m.eye_width = {m.eye_x.eye_width, m.eye_y.eye_width};
    m.constellation_x = metrics::sample_symbols(w.x, cfg.sps, m.sampling_phase[0], ctx.first_symbol);
    m.constellation_y = metrics::sample_symbols(w.y, cfg.sps, m.sampling_phase[1], ctx.first_symbol);
    m.N = std::min(m.constellation_x.size(), m.constellation_y.size());
    m.constellation_x.resize(m.N);
    m.constellation_y.resize(m.N);

    if (with_modulus_error) {
        const double ex = metrics::modulus_error(m.constellation_x, cfg.eq.A);
        const double ey = metrics::modulus_error(m.constellation_y, cfg.eq.A);
        m.modulus_error = rms_pair(ex, ey);
    }

    const auto nx = metrics::normalize_radius(m.constellation_x, A);
    const auto ny = metrics::normalize_radius(m.constellation_y, A);
    try {
        const auto al = metrics::resolve_ambiguity(nx, ny, ctx.window_frame, cfg.metrics.max_delay);
        const auto pols = metrics::apply_alignment(nx, ny, ctx.window_frame, al);
        for (int p = 0; p < 2; ++p) {
            m.evm_pol_percent[p] = metrics::evm(pols[p].rx, pols[p].ref, A).evm_percent;
            const auto c = metrics::count_ber(pols[p]);
            m.bit_errors += c.errors;
            m.bits += c.bits;
        }
        m.data_aided = true;
        m.alignment = al;
        m.ber_counted = m.bits ? static_cast<double>(m.bit_errors) / static_cast<double>(m.bits) : 0.0;
    } catch (const AlignmentFailure&) {
        m.evm_pol_percent = {metrics::blind_evm(nx, A).evm_percent, metrics::blind_evm(ny, A).evm_percent};
    }
    m.evm_percent = rms_pair(m.evm_pol_percent[0], m.evm_pol_percent[1]);
    m.ber_estimate = metrics::ber_from_evm(m.evm_percent / 100.0).ber;
    return m;
}

// Data-aided EVM after radius normalization and removal of each polarization's
// fourth-power phase, so a static CMA rotation does not count.
double derotated_evm(std::span<const cplx> x, std::span<const cplx> y, const tx::SymbolFrame& frame, int max_delay) {
    const double A = frame.amplitude;
    const auto prep = [A](std::span<const cplx> s) {
        auto v = metrics::normalize_radius(s, A);
        cplx m4{};
        for (const cplx& c : v) {
            m4 += (c * c) * (c * c);
        }
        const cplx r = std::polar(1.0, -std::arg(-m4) / 4.0);
        for (auto& c : v) {
            c *= r;
        }
        return v;
    };
    const auto nx = prep(x);
    const auto ny = prep(y);
    try {
        const auto al = metrics::resolve_ambiguity(nx, ny, frame, max_delay);
        const auto pols = metrics::apply_alignment(nx, ny, frame, al);
        return rms_pair(metrics::evm(pols[0].rx, pols[0].ref, A).evm_percent,
                        metrics::evm(pols[1].rx, pols[1].ref, A).evm_percent);
    } catch (const AlignmentFailure&) {
        return rms_pair(metrics::blind_evm(nx, A).evm_percent, metrics::blind_evm(ny, A).evm_percent);
    }
}

json optional_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json weights_json(const eq::ButterflyWeights& w) {
    const auto vec = [](const std::vector<cplx>& h) {
        json a = json::array();
        for (const cplx& c : h) {
            a.push_back({c.real(), c.imag()});
        }
        return a;
    };
    return {{"h_xx", vec(w.h_xx)}, {"h_xy", vec(w.h_xy)}, {"h_yx", vec(w.h_yx)}, {"h_yy", vec(w.h_yy)}};
}

json stage_json(const StageMetrics& s) {
    json j = {{"N", s.N},
              {"sampling_phase", {s.sampling_phase[0], s.sampling_phase[1]}},
              {"eye_height", {s.eye_height[0], s.eye_height[1]}},
              {"eye_width", {s.eye_width[0], s.eye_width[1]}},
              {"evm_mode", s.data_aided ? "data_aided" : "blind"},
              {"evm_percent", s.evm_percent},
              {"evm_percent_x", s.evm_pol_percent[0]},
              {"evm_percent_y", s.evm_pol_percent[1]},
              {"ber_estimate", s.ber_estimate},
              {"ber_counted", optional_num(s.ber_counted)},
              {"bit_errors", s.bit_errors},
              {"bits", s.bits},
              {"modulus_error", optional_num(s.modulus_error)}};
    if (s.alignment) {
        const auto& a = *s.alignment;
        j["alignment"] = {{"swap", a.swap},
                          {"rotation_quarter_turns", {a.rotation[0], a.rotation[1]}},
                          {"delay_symbols", {a.delay[0], a.delay[1]}},
                          {"symbol_error_rate", a.symbol_error_rate}};
    } else {
        j["alignment"] = nullptr;
    }
    return j;
}

json cprc_json(const cprc::CprcTrace& t) {
    return {{"locked", t.locked}, {"lock_time_s", optional_num(t.lock_time)}, {"final_error_rms", t.final_error_rms}};
}

const char* status_name(RunStatus s) {
    switch (s) {
    case RunStatus::Ok:
        return "ok";
    case RunStatus::Divergence:
        return "divergence";
    case RunStatus::NoLock:
        return "no_lock";
    }
    return "ok";
}

} // namespace

int exit_code(RunStatus s) noexcept {
    switch (s) {
    case RunStatus::Ok:
        return 0;
    case RunStatus::Divergence:
        return 2;
    case RunStatus::NoLock:
        return 3;
    }
    return 0;
}

const StageMetrics* RunReport::stage(const std::string& name) const {
    for (const auto& s : stages) {
        if (s.stage == name) {
            return &s;
        }
    }
    return nullptr;
}

RunReport run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    RunReport rep;
    const double rs = cfg.tx.symbol_rate;
    const double fs = rs * cfg.sps;

    tx::TxConfig txc = cfg.tx;
    txc.phase_noise_seed = sub_seed(cfg.seed, kTxPhase ^ (cfg.tx.phase_noise_seed << 8));
    auto [field, frame] = tx::transmit(txc, cfg.n_symbols, cfg.sps);

    fiber::ChannelConfig ch = cfg.channel;
    if (cfg.jones_mode == JonesMode::Random) {
        std::mt19937_64 jr(sub_seed(cfg.seed, kJones));
        std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
        ch.jones.theta = ang(jr);
        ch.jones.phi = ang(jr);
        ch.jones.psi = ang(jr);
    }
    rep.jones = ch.jones;
    ch.noise = {};

    rx::RxConfig rxc = cfg.rx;
    rxc.lo_frequency_offset = cfg.channel.lo_frequency_offset;
    rxc.lo_path_delay = cfg.channel.lo_path_delay;
    rxc.tx_phase_noise_seed = txc.phase_noise_seed;
    rxc.lo_phase_noise_seed = sub_seed(cfg.seed, kLoPhase ^ (cfg.rx.lo_phase_noise_seed << 8));
    if (rxc.rx_bandwidth == 0.0) {
        rxc.rx_bandwidth = 0.75 * rs;
    }

    auto received = fiber::propagate(field, ch);
    double sigma = 0.0;
    switch (cfg.noise.mode) {
    case NoiseTarget::None:
        break;
    case NoiseTarget::Sigma:
        sigma = cfg.noise.value;
        break;
    case NoiseTarget::ChannelEvm:
        sigma = fiber::sigma_for_evm(cfg.noise.value, mean_power(received));
        break;
    case NoiseTarget::ReceivedEvm: {
        const auto filtered_x = sigkit::single_pole_lowpass(received.x, 1.0, rxc.rx_bandwidth);
        const auto filtered_y = sigkit::single_pole_lowpass(received.y, 1.0, rxc.rx_bandwidth);
        const double p = mean_power(sigkit::DualPolWaveform(filtered_x, filtered_y));
        sigma = fiber::sigma_for_evm(cfg.noise.value, p / noise_gain(rxc.rx_bandwidth, fs));
        break;
    }
    }
    rep.noise_sigma = sigma;
    if (sigma > 0.0) {
        std::mt19937_64 nr(sub_seed(cfg.seed, kNoise));
        received = fiber::add_awgn(received, sigma, sigma, nr);
    }

    const auto detected = rx::coherent_detect(received, rxc);
    const auto agc = rx::agc(detected, rxc.agc_target);
    rep.agc_gain = {agc.gain_x, agc.gain_y};

    const std::size_t eval = std::min(cfg.metrics.eval_symbols, cfg.n_symbols);
    const std::size_t first = cfg.n_symbols - eval;
    const tx::SymbolFrame window = slice(frame, first);
    const StageContext ctx{cfg, window, first};

    {
        // The transmitter stage is judged without the laser phase noise.
        const auto phi = sigkit::wiener_phase(field.x.size(), 1.0 / fs, txc.laser_linewidth, txc.phase_noise_seed);
        std::vector<cplx> xs(field.x.samples().begin(), field.x.samples().end());
        std::vector<cplx> ys(field.y.samples().begin(), field.y.samples().end());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const cplx r = std::polar(1.0, -phi[i]);
            xs[i] *= r;
            ys[i] *= r;
        }
        rep.stages.push_back(evaluate_stage(
            "tx", sigkit::DualPolWaveform(sigkit::Waveform(std::move(xs), fs), sigkit::Waveform(std::move(ys), fs)),
            ctx, false));
    }
    rep.stages.push_back(evaluate_stage("rx", sigkit::to_dual(agc.out), ctx, false));

    eq::EqConfig eqc = cfg.eq;
    eqc.symbol_rate = rs;
    std::optional<sigkit::DualPolWaveform> eq_out;
    try {
        auto res = eq::run(agc.out, eqc);
        rep.eq_trace = std::move(res.trace);
        auto dual = sigkit::to_dual(res.out);
        // Remove the known output-buffer gain so downstream stages see modulus A.
        const double g = 1.0 / eqc.profile.buffer.dc_gain;
        std::vector<cplx> xs(dual.x.samples().begin(), dual.x.samples().end());
        std::vector<cplx> ys(dual.y.samples().begin(), dual.y.samples().end());
        for (auto& v : xs) v *= g;
        for (auto& v : ys) v *= g;
        eq_out = sigkit::DualPolWaveform(sigkit::Waveform(std::move(xs), fs), sigkit::Waveform(std::move(ys), fs));
    } catch (const DivergenceError& e) {
        rep.status = RunStatus::Divergence;
        rep.message = e.what();
    }

    if (eq_out) {

        cprc::CprcConfig cc = cprc::CprcConfig::design(rs, cfg.cprc.bl_norm, cfg.cprc.zeta, cfg.cprc.qvco_gain);
        if (cfg.cprc.kp) cc.kp = *cfg.cprc.kp;
        if (cfg.cprc.ki) cc.ki = *cfg.cprc.ki;
        cc.A = cfg.eq.A;
        cc.lock_threshold = cfg.cprc.lock_threshold;
        cc.lock_window_symbols = cfg.cprc.lock_window_symbols;
        cc.trace_decimation_symbols = cfg.cprc.trace_decimation_symbols;
        auto cx = cprc::costas_run(eq_out->x, cc);
        auto cy = cprc::costas_run(eq_out->y, cc);
        rep.cprc_x = std::move(cx.trace);
        rep.cprc_y = std::move(cy.trace);
        auto post_cprc =
            evaluate_stage("post_cprc", sigkit::DualPolWaveform(std::move(cx.out), std::move(cy.out)), ctx, false);
        rep.stages.push_back(evaluate_stage("post_eq", *eq_out, ctx, true, &post_cprc));
        rep.stages.push_back(std::move(post_cprc));
        if (!rep.cprc_x.locked || !rep.cprc_y.locked) {
            rep.status = RunStatus::NoLock;
            rep.message = "carrier recovery did not lock";
        }

        if (cfg.metrics.run_oracle) {
            if (cfg.sps % 2 != 0) {
                throw ConfigError("the reference CMA needs an even sps", "metrics.run_oracle");
            }
            const int half = cfg.sps / 2;
            const int p = rep.stage("post_eq")->sampling_phase[0];
            ref::DtCmaConfig dc;
            dc.mu = ref::DtCmaConfig::mu_from_beta(eqc.beta, rs);
            dc.taps_per_pol = eqc.L + 1;
            dc.A = eqc.A;
            dc.symbol_rate = rs;
            const auto dt_in = ref::decimate(agc.out, half, p % half);
            const auto dt = ref::dtcma_run(dt_in, dc, p / half);
            OracleSummary o;
            std::vector<cplx> sx(dt.symbols_x.begin() + static_cast<std::ptrdiff_t>(std::min(first, dt.symbols_x.size())),
                                 dt.symbols_x.end());
            std::vector<cplx> sy(dt.symbols_y.begin() + static_cast<std::ptrdiff_t>(std::min(first, dt.symbols_y.size())),
                                 dt.symbols_y.end());
            const auto* pe = rep.stage("post_eq");
            o.evm_percent = derotated_evm(sx, sy, window, cfg.metrics.max_delay);
            o.analog_evm_percent = derotated_evm(pe->constellation_x, pe->constellation_y, window, cfg.metrics.max_delay);
            o.tap_distance = ref::compare_taps(rep.eq_trace.steady_weights, dt.trace.steady_weights);
            rep.oracle = o;
        }
    }

    json j;
    j["schema"] = kReportSchema;
    j["status"] = status_name(rep.status);
    j["message"] = rep.message;
    j["config"] = json::parse(to_json_text(cfg, -1));
    j["resolved"] = {{"symbol_rate", rs},
                     {"sample_rate", fs},
                     {"tau_d", eqc.resolved_tau_d()},
                     {"tau_c", eqc.resolved_tau_c()},
                     {"tau_e", eqc.resolved_tau_e()},
                     {"rx_bandwidth", rxc.rx_bandwidth},
                     {"noise_sigma", sigma},
                     {"jones", {{"theta", ch.jones.theta}, {"phi", ch.jones.phi}, {"psi", ch.jones.psi}}},
                     {"agc_gain", {agc.gain_x, agc.gain_y}},
                     {"eval_first_symbol", first},
                     {"eval_symbols", eval}};
    json stages = json::object();
    for (const auto& s : rep.stages) {
        stages[s.stage] = stage_json(s);
    }
    j["stages"] = stages;
    if (eq_out) {
        const auto& t = rep.eq_trace;
        j["equalizer"] = {{"converged", t.converged},
                          {"convergence_time_s", optional_num(t.convergence_time)},
                          {"convergence_symbols", t.convergence_time ? json(*t.convergence_time * rs) : json(nullptr)},
                          {"final_cost", t.final_cost},
                          {"singularity_detected", t.singularity_detected},
                          {"restarts", t.restarts},
                          {"warnings", t.warnings},
                          {"final_weights", weights_json(t.final_weights)},
                          {"steady_weights", weights_json(t.steady_weights)},
                          {"trace", "taps.csv"}};
        j["cprc"] = {{"x", cprc_json(rep.cprc_x)}, {"y", cprc_json(rep.cprc_y)}, {"trace", "cprc_trace.csv"}};
    } else {
        j["equalizer"] = nullptr;
        j["cprc"] = nullptr;
    }
    if (rep.oracle) {
        j["oracle"] = {{"evm_percent", rep.oracle->evm_percent},
                       {"analog_evm_percent", rep.oracle->analog_evm_percent},
                       {"tap_distance", rep.oracle->tap_distance}};
    } else {
        j["oracle"] = nullptr;
    }
    rep.json = j.dump(2) + "\n";
    return rep;
}

void write_artifacts(const RunReport& r, const std::filesystem::path& dir, ExportMode mode) {
    std::filesystem::create_directories(dir);
    const auto open = [&](const std::string& name) {
        std::ofstream os(dir / name);
        if (!os) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        return os;
    };
    if (mode != ExportMode::Csv) {
        auto os = open("report.json");
        os << r.json;
    }
    if (mode == ExportMode::Json) {
        return;
    }
    if (!r.eq_trace.times.empty()) {
        auto os = open("taps.csv");
        eq::write_trace_csv(os, r.eq_trace);
    }
    if (!r.cprc_x.times.empty()) {
        auto os = open("cprc_trace.csv");
        cprc::write_trace_csv(os, r.cprc_x, &r.cprc_y);
    }
    for (const auto& s : r.stages) {
        {
            auto os = open("constellation_" + s.stage + ".csv");
            metrics::write_constellation_csv(os, s.constellation_x, s.constellation_y);
        }
        auto os = open("eye_" + s.stage + ".csv");
        metrics::write_eye_csv(os, s.eye_x, s.eye_y);
    }
}

std::uint64_t derive_seed(std::uint64_t base_seed, const Assignment& assignment) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto feed = [&h](unsigned char b) {
        h ^= b;
        h *= 0x100000001b3ULL;
    };
    for (int i = 0; i < 8; ++i) {
        feed(static_cast<unsigned char>((base_seed >> (8 * i)) & 0xffu));
    }
    for (const auto& [k, v] : assignment) {
        for (const char c : k + "=" + v + "\n") {
            feed(static_cast<unsigned char>(c));
        }
    }
    return h;
}

std::vector<SweepRun> sweep(const ScenarioConfig& base, const std::vector<SweepAxis>& grid, const SweepOptions& opts) {
    for (const auto& axis : grid) {
        if (axis.values.empty()) {
            throw ConfigError("sweep axis has no values", axis.key);
        }
        for (const auto& v : axis.values) {
            ScenarioConfig probe = base;
            apply_override(probe, axis.key, v);
            probe.validate();
        }
    }
    std::size_t total = 1;
    for (const auto& axis : grid) {
        total *= axis.values.size();
    }
    std::vector<SweepRun> runs;
    runs.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        SweepRun run;
        std::size_t rem = idx;
        std::vector<std::size_t> pick(grid.size());
        for (std::size_t a = grid.size(); a-- > 0;) {
            pick[a] = rem % grid[a].values.size();
            rem /= grid[a].values.size();
        }
        ScenarioConfig cfg = base;
        for (std::size_t a = 0; a < grid.size(); ++a) {
            run.assignment.emplace_back(grid[a].key, grid[a].values[pick[a]]);
            apply_override(cfg, grid[a].key, grid[a].values[pick[a]]);
        }
        run.seed = grid.empty() || !opts.derive_seeds ? base.seed : derive_seed(base.seed, run.assignment);
        cfg.seed = run.seed;
        run.report = run_scenario(cfg);
        if (opts.on_run) {
            opts.on_run(idx, run);
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

void write_sweep_summary(std::ostream& os, const std::vector<SweepAxis>& grid, const std::vector<SweepRun>& runs) {
    os << "run,seed";
    for (const auto& a : grid) {
        os << ',' << a.key;
    }
    os << ",status,converged,convergence_symbols,final_cost,modulus_error,post_eq_evm_percent,"
          "post_cprc_evm_percent,ber_estimate,ber_counted\n";
    os << std::setprecision(10);
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i].report;
        const auto j = json::parse(r.json);
        os << i << ',' << runs[i].seed;
        for (const auto& [k, v] : runs[i].assignment) {
            os << ',' << v;
        }
        os << ',' << j["status"].get<std::string>();
        const auto* eq_stage = r.stage("post_eq");
        const auto* cp = r.stage("post_cprc");
        const double rs = j["resolved"]["symbol_rate"].get<double>();
        os << ',' << (r.eq_trace.converged ? "true" : "false") << ',';
        if (r.eq_trace.convergence_time) os << *r.eq_trace.convergence_time * rs;
        os << ',' << r.eq_trace.final_cost << ',';
        if (eq_stage && eq_stage->modulus_error) os << *eq_stage->modulus_error;
        os << ',';
        if (eq_stage) os << eq_stage->evm_percent;
        os << ',';
        if (cp) os << cp->evm_percent;
        os << ',';
        if (cp) os << cp->ber_estimate;
        os << ',';
        if (cp && cp->ber_counted) os << *cp->ber_counted;
        os << '\n';
    }
}

} // namespace aaeq::runner
