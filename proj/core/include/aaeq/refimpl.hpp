#pragma once

#include <vector>

#include "aaeq/cmaeq.hpp"
#include "aaeq/sigkit.hpp"

namespace aaeq::ref {

struct DtCmaConfig {
    double mu = 5e-5;
    int taps_per_pol = 2;
    double A = 1.0;
    double symbol_rate = 10e9;
    double weight_max = 10.0 * 1.4142135623730951;
    int trace_decimation_symbols = 100;
    int cost_window_symbols = 1000;
    double convergence_cost = 0.25;

    void validate() const;

    /// Step size equivalent to a continuous-time loop gain beta when the
    /// update runs once per T/2 sample.
    static double mu_from_beta(double beta, double symbol_rate) noexcept { return beta * 0.5 / symbol_rate; }
};

struct DtCmaResult {
    /// Output at every T/2 sample.
    sigkit::DualPolWaveform out;
    /// Every second output sample starting at `symbol_phase`.
    std::vector<cplx> symbols_x, symbols_y;
    eq::EqTrace trace;
};

/// Keeps every `factor`-th sample starting at `offset`.
sigkit::QuadWaveform decimate(const sigkit::QuadWaveform& q, int factor, int offset);

/// T/2-spaced butterfly CMA: y = H^T u, e = y (A^2 - |y|^2), h += mu e conj(u)
/// at every input sample, from the same reset weights as the analog model.
/// Throws DivergenceError when a tap exceeds weight_max.
DtCmaResult dtcma_run(const sigkit::QuadWaveform& quad, const DtCmaConfig& cfg, int symbol_phase = 0);

/// Distance between two tap sets after normalizing each output row
/// (h_xx|h_xy and h_yx|h_yy) to unit norm and removing its best-fit phase:
/// sqrt(mean over rows of ||a - e^{j phi} b||^2). 0 for equal sets up to a
/// complex scale per row, sqrt(2) for orthogonal rows.
double compare_taps(const eq::ButterflyWeights& a, const eq::ButterflyWeights& b);

} // namespace aaeq::ref
