#include <benchmark/benchmark.h>

#include <cmath>

#include "pbfrec/evaluation.hpp"
#include "pbfrec/trace_io.hpp"

using namespace pbfrec;

namespace {

// Icosphere-ish ball approximated by a latitude/longitude triangulation.
TriangleMesh ball_mesh(double radius, int stacks = 24, int slices = 48) {
    TriangleMesh mesh;
    auto vertex = [&](int stack, int slice) -> Vec3 {
        const double phi = 3.14159265358979323846 * stack / stacks;
        const double theta = 2.0 * 3.14159265358979323846 * slice / slices;
        return {radius * std::sin(phi) * std::cos(theta), radius * std::sin(phi) * std::sin(theta),
                radius * std::cos(phi)};
    };
    for (int stack = 0; stack < stacks; ++stack) {
        for (int slice = 0; slice < slices; ++slice) {
            const Vec3 a = vertex(stack, slice), b = vertex(stack + 1, slice),
                       c = vertex(stack + 1, slice + 1), d = vertex(stack, slice + 1);
            if (stack > 0) mesh.triangles.push_back({a, b, d});
            if (stack < stacks - 1) mesh.triangles.push_back({b, c, d});
        }
    }
    return mesh;
}

void BM_VoxelizeMesh(benchmark::State& state) {
    const TriangleMesh mesh = ball_mesh(10.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(voxelize_mesh(mesh, 0.25));
    }
}
BENCHMARK(BM_VoxelizeMesh);

void BM_CompareVoxels(benchmark::State& state) {
    const TriangleMesh mesh = ball_mesh(10.0);
    const OccupancyGrid a = voxelize_mesh(mesh, 0.25);
    const OccupancyGrid b = voxelize_mesh(ball_mesh(9.8), 0.25);
    OccupancyGrid b_matched = a;
    b_matched.occupied = b.occupied;  // same geometry, different occupancy
    for (auto _ : state) {
        benchmark::DoNotOptimize(compare_voxels(a, b_matched));
    }
}
BENCHMARK(BM_CompareVoxels);

}  // namespace

BENCHMARK_MAIN();
