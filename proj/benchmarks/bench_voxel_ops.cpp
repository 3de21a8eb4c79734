#include <benchmark/benchmark.h>

#include <random>

#include "pbfrec/synth_sim.hpp"
#include "pbfrec/voxel_ops.hpp"

using namespace pbfrec;

namespace {

VoxelGrid big_grid() {
    // A solid disk across many layers with a sparse noise halo around it.
    VoxelGrid grid = make_cylinder_model(80, 40);
    std::mt19937 rng(4);
    std::uniform_int_distribution<std::int32_t> xy(-20, 100);
    std::uniform_int_distribution<std::int32_t> layer(0, 39);
    for (int i = 0; i < 20000; ++i)
        grid.cells.try_emplace(VoxelKey{layer(rng), xy(rng), xy(rng)}, 1u);
    return grid;
}

void BM_PruneByNeighbors(benchmark::State& state) {
    const VoxelGrid grid = big_grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            prune_by_neighbors(grid, static_cast<std::int32_t>(state.range(0)), 33));
    }
    state.SetItemsProcessed(state.iterations() * grid.occupied_count());
}
BENCHMARK(BM_PruneByNeighbors)->Arg(4)->Arg(5);

void BM_ProjectAndFill(benchmark::State& state) {
    const VoxelGrid grid = big_grid();
    for (auto _ : state) {
        const ColumnProjection proj = project_columns(grid, ProjectionDirection::Up, 20);
        benchmark::DoNotOptimize(fill_gaps(grid, proj));
    }
}
BENCHMARK(BM_ProjectAndFill);

void BM_GapStretchHistogram(benchmark::State& state) {
    const VoxelGrid grid = big_grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(gap_stretch_histogram(grid));
    }
}
BENCHMARK(BM_GapStretchHistogram);

}  // namespace
