// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include <benchmark/benchmark.h>

#include "mbrec/presets.hpp"
#include "mbrec/sage.hpp"
#include "mbrec/simulate.hpp"

namespace {

using namespace mbrec;

void BM_TraceScene(benchmark::State& state) {
    const PresetScenario pre = preset_scenario("blocked");
    for (auto _ : state) {
        auto sim = trace_scene_paths(pre.scene, pre.rf, pre.trace);
        benchmark::DoNotOptimize(sim);
    }
}
BENCHMARK(BM_TraceScene)->Unit(benchmark::kMillisecond);

void BM_SynthesizeChannel(benchmark::State& state) {
    const PresetScenario pre = preset_scenario("blocked");
    const SimulatedScenario sim = trace_scene_paths(pre.scene, pre.rf, pre.trace);
    for (auto _ : state) {
        auto y = synthesize_channel(sim.paths, pre.rf);
        benchmark::DoNotOptimize(y);
    }
}
BENCHMARK(BM_SynthesizeChannel)->Unit(benchmark::kMillisecond);

void BM_ReferenceChannel(benchmark::State& state) {
    const PresetScenario pre = preset_scenario("blocked");
    const SimulatedScenario sim = trace_scene_paths(pre.scene, pre.rf, pre.trace);
    ChannelTensor y = synthesize_channel(sim.paths, pre.rf);
    y = add_noise(y, pre.rf.snr_db, 1, sim.noise_reference_power);
    const std::span<const cplx> siso(y.channel(0, 0), y.P);
    for (auto _ : state) {
        auto list = estimate_reference_channel(siso, pre.rf);
        benchmark::DoNotOptimize(list);
    }
}
BENCHMARK(BM_ReferenceChannel)->Unit(benchmark::kMillisecond);

void BM_MStepOneBounce(benchmark::State& state) {
    const PresetScenario pre = preset_scenario("blocked");
    const SimulatedScenario sim = trace_scene_paths(pre.scene, pre.rf, pre.trace);
    ChannelTensor y = synthesize_channel({sim.paths[1]}, pre.rf);  // upper wall
    const double tau = sim.truth[1].reference_delay;
    const SearchDictionary dict =
        build_dictionary(1, tau, pre.scene, 0.1, 1.5 * pre.rf.delay_bin());
    for (auto _ : state) {
        auto est = m_step(y, dict, pre.scene, pre.rf, 1.0, 1e-3);
        benchmark::DoNotOptimize(est);
    }
    state.counters["candidates"] = static_cast<double>(dict.entries.size());
}
BENCHMARK(BM_MStepOneBounce)->Unit(benchmark::kMillisecond);

void BM_MStepTwoBounce(benchmark::State& state) {
    const PresetScenario pre = preset_scenario("blocked");
    const SimulatedScenario sim = trace_scene_paths(pre.scene, pre.rf, pre.trace);
    // First two-bounce truth path.
    std::size_t idx = 0;
    for (std::size_t i = 0; i < sim.truth.size(); ++i)
        if (sim.truth[i].bounce_order == 2) {
            idx = i;
            break;
        }
    ChannelTensor y = synthesize_channel({sim.paths[idx]}, pre.rf);
    const SearchDictionary dict =
        build_dictionary(2, sim.truth[idx].reference_delay, pre.scene, 0.2,
                         1.5 * pre.rf.delay_bin());
    for (auto _ : state) {
        auto est = m_step(y, dict, pre.scene, pre.rf, 1.0, 1e-3);
        benchmark::DoNotOptimize(est);
    }
    state.counters["candidates"] = static_cast<double>(dict.entries.size());
}
BENCHMARK(BM_MStepTwoBounce)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
