#include <benchmark/benchmark.h>

#include <cmath>

#include "qndsim/protocol.hpp"
#include "qndsim/tomography.hpp"

using namespace qndsim;

static void BM_BuildBasis(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_quadrature_basis(0.43, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_BuildBasis)->Arg(4)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_Sample(benchmark::State& state) {
    const QuantumState c = QuantumState::pure({5}, coherent_vector(5, std::sqrt(0.137)));
    const auto phases = phase_settings(100);
    std::uint64_t seed = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample(c, phases, 10000, 0.43, seed++));
    }
}
BENCHMARK(BM_Sample)->Unit(benchmark::kMillisecond);

static void BM_Mle(benchmark::State& state) {
    const QuantumState c = QuantumState::pure({5}, coherent_vector(5, std::sqrt(0.137)));
    const MeasurementRecord r = sample(c, phase_settings(100), 10000, 0.43, 3);
    MleOptions o;
    o.eta = 0.43;
    o.correct_efficiency = state.range(0) != 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(mle_reconstruct(r, o));
    }
}
BENCHMARK(BM_Mle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_CompositeMle(benchmark::State& state) {
    const MeasurementRecord r = sample_composite(ideal_composite(0.165, 2), phase_settings(100), 10000, 0.43, 5);
    MleOptions o;
    o.n_tomo = 3;
    o.correct_efficiency = false;
    for (auto _ : state) {
        benchmark::DoNotOptimize(composite_mle(r, o));
    }
}
BENCHMARK(BM_CompositeMle)->Unit(benchmark::kMillisecond);

static void BM_Wigner(benchmark::State& state) {
    const QuantumState c = QuantumState::pure({5}, coherent_vector(5, std::sqrt(0.137)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(wigner(c, 3.0, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_Wigner)->Arg(61)->Arg(121)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
