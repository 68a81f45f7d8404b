#include <benchmark/benchmark.h>

#include "aaeq/cmaeq.hpp"
#include "aaeq/cprc.hpp"
#include "aaeq/refimpl.hpp"
#include "aaeq/sigkit.hpp"
#include "aaeq/txchain.hpp"

using namespace aaeq;

namespace {

sigkit::DualPolWaveform qpsk(std::size_t n_symbols, int sps) {
    tx::TxConfig t;
    if (sps < 8) {
        t.tx_bandwidth = kInf;
    }
    return tx::transmit(t, n_symbols, sps).first;
}

} // namespace

static void BM_FractionalDelay(benchmark::State& state) {
    const auto w = qpsk(static_cast<std::size_t>(state.range(0)), 16).x;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sigkit::fractional_delay(w, 7.3e-12));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.size()));
}
BENCHMARK(BM_FractionalDelay)->Arg(1000)->Arg(10000);

static void BM_EqRun(benchmark::State& state) {
    const auto quad = sigkit::to_quad(qpsk(static_cast<std::size_t>(state.range(0)), 16));
    eq::EqConfig c;
    c.profile = state.range(1) ? analog::AnalogProfile::paper() : analog::AnalogProfile::ideal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(eq::run(quad, c));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(quad.size()));
}
BENCHMARK(BM_EqRun)->Args({5000, 0})->Args({5000, 1})->Unit(benchmark::kMillisecond);

static void BM_DtCma(benchmark::State& state) {
    const auto quad = sigkit::to_quad(qpsk(static_cast<std::size_t>(state.range(0)), 2));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ref::dtcma_run(quad, ref::DtCmaConfig{}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(quad.size()));
}
BENCHMARK(BM_DtCma)->Arg(20000)->Unit(benchmark::kMillisecond);

static void BM_Costas(benchmark::State& state) {
    const auto w = qpsk(static_cast<std::size_t>(state.range(0)), 16).x;
    const auto cfg = cprc::CprcConfig::design(10e9);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cprc::costas_run(w, cfg));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.size()));
}
BENCHMARK(BM_Costas)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
