#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pbfrec/rasterizer.hpp"

using namespace pbfrec;

namespace {

struct TraceFixture {
    BinaryLaserSignal laser;
    std::vector<double> gx, gy;
    LayerBoundaries boundaries;
};

TraceFixture make_fixture(std::size_t n, std::size_t layers) {
    TraceFixture f;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> volts(-0.2, 0.2);
    std::bernoulli_distribution on(0.7);
    f.laser.states.resize(n);
    f.gx.resize(n);
    f.gy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.laser.states[i] = on(rng) ? LaserState::On : LaserState::Off;
        f.gx[i] = volts(rng);
        f.gy[i] = volts(rng);
    }
    const std::size_t span = n / layers;
    for (std::size_t l = 0; l < layers; ++l)
        f.boundaries.layers.push_back({l * span, l * span + span - 1});
    return f;
}

void BM_RasterizeLayers(benchmark::State& state) {
    const TraceFixture f = make_fixture(static_cast<std::size_t>(state.range(0)), 50);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rasterize_layers(f.laser, f.gx, f.gy, f.boundaries, {0.0025}));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RasterizeLayers)->Arg(100000)->Arg(1000000);

void BM_DifferentialVoxelization(benchmark::State& state) {
    const TraceFixture f = make_fixture(500000, 50);
    std::vector<VoxelGrid> grids;
    for (int i = 0; i < 3; ++i)
        grids.push_back(rasterize_layers(f.laser, f.gx, f.gy, f.boundaries, {0.0025}));
    for (auto _ : state) {
        benchmark::DoNotOptimize(differential_voxelization(grids));
    }
}
BENCHMARK(BM_DifferentialVoxelization);

}  // namespace
