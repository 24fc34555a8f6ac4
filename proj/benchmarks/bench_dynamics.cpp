#include <benchmark/benchmark.h>

#include <cmath>

#include "qndsim/dynamics.hpp"
#include "qndsim/protocol.hpp"

using namespace qndsim;

static void BM_Evolve(benchmark::State& state) {
    const LindbladModel m = build_model(SystemParams::device(), static_cast<int>(state.range(0)));
    const PulseSchedule s = PulseSchedule::standard(800e-9, 500e-9, std::sqrt(0.165));
    for (auto _ : state) {
        benchmark::DoNotOptimize(evolve(m, s, m.ground_state(), 1 << 30));
    }
}
BENCHMARK(BM_Evolve)->Arg(7)->Arg(9)->Arg(11)->Unit(benchmark::kMillisecond);

static void BM_OutputMoments(benchmark::State& state) {
    const LindbladModel m = build_model(SystemParams::device(), 7);
    PulseSchedule s = PulseSchedule::standard(800e-9, 500e-9, std::sqrt(0.165));
    s.output_delay = optimal_output_delay(SystemParams::device(), s);
    for (auto _ : state) {
        benchmark::DoNotOptimize(output_mode_moments(m, s, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_OutputMoments)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_Protocol(benchmark::State& state) {
    ProtocolOptions o;
    o.input_model = state.range(0) == 0 ? InputModel::Coherent : InputModel::SinglePhotonSuperposition;
    ScheduleSpec spec;
    spec.gate_interval = 1100e-9;
    const PulseSchedule s = spec.build(std::sqrt(0.165));
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_protocol(SystemParams::device(), s, o));
    }
}
BENCHMARK(BM_Protocol)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
