#include <benchmark/benchmark.h>

#include "washboard/coupling.hpp"
#include "washboard/echo.hpp"

using namespace washboard;

namespace {

LatticeConfig depth18() {
    LatticeConfig c;
    c.depth_s = 18.0;
    return c;
}

void BM_SolveBands(benchmark::State& state) {
    LatticeConfig c = depth18();
    c.num_plane_waves = static_cast<int>(state.range(0));
    double q = -1.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_bands(c, q));
        q = q > 0.9 ? -1.0 : q + 0.01;
    }
}
BENCHMARK(BM_SolveBands)->Arg(15)->Arg(30);

void BM_BandStructure(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(band_structure(depth18(), 64));
}
BENCHMARK(BM_BandStructure);

void BM_CouplingProbabilities(benchmark::State& state) {
    const auto model = make_model(depth18());
    const PulseSpec specs[] = {PulseSpec::single_step(0.25), PulseSpec::square(0.154, 0.35),
                               PulseSpec::gaussian(0.186, 0.294)};
    const auto& spec = specs[state.range(0)];
    for (auto _ : state) benchmark::DoNotOptimize(coupling_probabilities(model, spec));
    state.SetLabel(std::string(to_string(spec.kind)));
}
BENCHMARK(BM_CouplingProbabilities)->DenseRange(0, 2);

void BM_OptimizeSquare(benchmark::State& state) {
    const auto model = make_model(depth18());
    PulseTemplate t;
    t.kind = PulseKind::square;
    auto grid = SearchGrid::defaults(PulseKind::square);
    grid.temporal = GridAxis{0.2, 0.5, 0.05};
    for (auto _ : state) benchmark::DoNotOptimize(optimize_pulse(model, t, grid));
}
BENCHMARK(BM_OptimizeSquare)->Unit(benchmark::kMillisecond);

void BM_EchoTrace(benchmark::State& state) {
    LatticeConfig base = depth18();
    base.depth_s = 20.0;
    EnsembleSpec spec;
    spec.depth_sigma_s = 3.5;
    spec.n_members = static_cast<int>(state.range(0));
    const auto ens = build_ensemble(base, spec);
    const auto times = time_grid(0.0, 3e-3, 4e-6);
    const auto pulse = EchoPulse::lattice(PulseSpec::square(0.17, 0.40));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_echo(ens, 1.0 / 6, pulse, 1.04e-3, times));
}
BENCHMARK(BM_EchoTrace)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
