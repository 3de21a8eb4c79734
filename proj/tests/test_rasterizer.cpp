#include <doctest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "pbfrec/errors.hpp"
#include "pbfrec/rasterizer.hpp"
#include "pbfrec/synth_sim.hpp"

using namespace pbfrec;

namespace {

BinaryLaserSignal from_bits(const std::vector<int>& bits) {
    BinaryLaserSignal s;
    for (int b : bits) s.states.push_back(b ? LaserState::On : LaserState::Off);
    return s;
}

}  // namespace

TEST_CASE("rasterize: floor semantics including negative voltages") {
    const BinaryLaserSignal laser = from_bits({1});
    const std::vector<double> gx{0.0051}, gy{-0.0001};
    LayerBoundaries b;
    b.layers = {{0, 0}};
    const VoxelGrid grid = rasterize_layers(laser, gx, gy, b, {0.0025});
    REQUIRE(grid.occupied_count() == 1);
    CHECK(grid.hit_at({0, 2, -1}) == 1);
    CHECK(grid.layer_count == 1);
}

TEST_CASE("rasterize: OFF samples and out-of-interval samples are ignored") {
    const BinaryLaserSignal laser = from_bits({0, 0, 1, 0, 1, 0});
    const std::vector<double> g(6, 0.1);
    LayerBoundaries b;
    b.layers = {{1, 3}};  // only index 2 is ON inside
    const VoxelGrid grid = rasterize_layers(laser, g, g, b, {0.0025});
    CHECK(grid.occupied_count() == 1);

    const VoxelGrid empty = rasterize_layers(from_bits({0, 0, 0}), std::vector<double>(3, 0.0),
                                             std::vector<double>(3, 0.0),
                                             LayerBoundaries{{{0, 2}}}, {0.0025});
    CHECK(empty.occupied_count() == 0);
}

TEST_CASE("rasterize: validation errors") {
    const BinaryLaserSignal laser = from_bits({1});
    const std::vector<double> g{0.0};
    LayerBoundaries b;
    b.layers = {{0, 0}};
    CHECK_THROWS_AS(rasterize_layers(laser, g, g, b, {0.0}), ConfigError);
    CHECK_THROWS_AS(rasterize_layers(laser, g, g, b, {-1.0}), ConfigError);
    CHECK_THROWS_AS(rasterize_layers(laser, std::vector<double>{0.0, 1.0}, g, b, {0.1}), DataError);
    LayerBoundaries out_of_range;
    out_of_range.layers = {{0, 5}};
    CHECK_THROWS_AS(rasterize_layers(laser, g, g, out_of_range, {0.1}), DataError);
}

TEST_CASE("rasterize matches the dense-array oracle and conserves hits") {
    std::mt19937 rng(53);
    std::uniform_real_distribution<double> volts(-0.02, 0.02);
    std::bernoulli_distribution on(0.6);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1000;
        std::vector<int> bits(n);
        std::vector<double> gx(n), gy(n);
        for (std::size_t i = 0; i < n; ++i) {
            bits[i] = on(rng) ? 1 : 0;
            gx[i] = volts(rng);
            gy[i] = volts(rng);
        }
        std::vector<std::pair<std::size_t, std::size_t>> layers{{0, 299}, {400, 699}, {800, 999}};
        LayerBoundaries boundaries;
        for (auto [s, e] : layers) boundaries.layers.push_back({s, e});

        const double raster = 0.0025;
        const VoxelGrid grid = rasterize_layers(from_bits(bits), gx, gy, boundaries, {raster});
        const auto expected = oracles::dense_rasterize(bits, gx, gy, layers, raster);
        const auto got = grid.sorted_cells();
        REQUIRE(got.size() == expected.size());
        std::uint64_t total_hits = 0;
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].first == expected[i].first);
            CHECK(got[i].second == expected[i].second);
            total_hits += got[i].second;
        }
        std::uint64_t on_inside = 0;
        for (const auto& [s, e] : layers)
            for (std::size_t i = s; i <= e; ++i) on_inside += bits[i];
        CHECK(total_hits == on_inside);
    }
}

TEST_CASE("rasterize: shifting by a whole number of cells shifts indices") {
    std::mt19937 rng(59);
    // Values quantized to 2^-20 so adding k * 0.25 stays exact in binary.
    std::uniform_int_distribution<int> q(-2000000, 2000000);
    const std::size_t n = 500;
    std::vector<int> bits(n, 1);
    std::vector<double> gx(n), gy(n);
    for (std::size_t i = 0; i < n; ++i) {
        gx[i] = static_cast<double>(q(rng)) * 0x1p-20;
        gy[i] = static_cast<double>(q(rng)) * 0x1p-20;
    }
    LayerBoundaries b;
    b.layers = {{0, n - 1}};
    const double raster = 0.25;
    const int shift = 3;
    std::vector<double> gx_shifted(gx), gy_shifted(gy);
    for (double& v : gx_shifted) v += shift * raster;
    for (double& v : gy_shifted) v -= shift * raster;

    const auto base = rasterize_layers(from_bits(bits), gx, gy, b, {raster}).sorted_cells();
    const auto moved =
        rasterize_layers(from_bits(bits), gx_shifted, gy_shifted, b, {raster}).sorted_cells();
    REQUIRE(base.size() == moved.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(moved[i].first.rx == base[i].first.rx + shift);
        CHECK(moved[i].first.ry == base[i].first.ry - shift);
        CHECK(moved[i].second == base[i].second);
    }
}

TEST_CASE("differential voxelization sums hit counters") {
    VoxelGrid a;
    a.raster.raster_size_volts = 0.0025;
    a.layer_count = 2;
    a.cells[{0, 0, 0}] = 1;

    VoxelGrid b = a;
    b.cells.clear();
    b.cells[{0, 0, 1}] = 2;

    const VoxelGrid merged = differential_voxelization(std::vector<VoxelGrid>{a, b});
    CHECK(merged.hit_at({0, 0, 0}) == 1);
    CHECK(merged.hit_at({0, 0, 1}) == 2);

    const VoxelGrid doubled = differential_voxelization(std::vector<VoxelGrid>{a, a});
    CHECK(doubled.hit_at({0, 0, 0}) == 2);
}

TEST_CASE("differential voxelization rejects incompatible grids") {
    VoxelGrid a;
    a.raster.raster_size_volts = 0.0025;
    a.layer_count = 2;
    VoxelGrid wrong_raster = a;
    wrong_raster.raster.raster_size_volts = 0.005;
    VoxelGrid wrong_layers = a;
    wrong_layers.layer_count = 3;
    CHECK_THROWS_AS(differential_voxelization(std::vector<VoxelGrid>{a, wrong_raster}), DataError);
    CHECK_THROWS_AS(differential_voxelization(std::vector<VoxelGrid>{a, wrong_layers}), DataError);
    CHECK_THROWS_AS(differential_voxelization(std::vector<VoxelGrid>{}), DataError);
}

TEST_CASE("differential voxelization is commutative and associative") {
    std::mt19937 rng(61);
    const VoxelGrid a = oracles::random_grid(rng, 6, 6, 3, 0.4);
    VoxelGrid b = oracles::random_grid(rng, 6, 6, 3, 0.4);
    VoxelGrid c = oracles::random_grid(rng, 6, 6, 3, 0.4);

    const auto abc = differential_voxelization(std::vector<VoxelGrid>{a, b, c}).sorted_cells();
    const auto cba = differential_voxelization(std::vector<VoxelGrid>{c, b, a}).sorted_cells();
    CHECK(abc == cba);

    const VoxelGrid ab = differential_voxelization(std::vector<VoxelGrid>{a, b});
    const auto nested = differential_voxelization(std::vector<VoxelGrid>{ab, c}).sorted_cells();
    CHECK(abc == nested);
}

TEST_CASE("three noisy traces of one model: true cells aggregate to >= 3") {
    const VoxelGrid model = make_box_model(10, 10, 3);
    SimConfig cfg;
    cfg.raster_size_volts = 0.1;
    cfg.noise_sigma_volts = 0.015;
    cfg.layer_gap_samples = 1200;

    std::vector<VoxelGrid> grids;
    VoxelGrid truth;
    for (int i = 0; i < 3; ++i) {
        const SimResult sim = simulate_print_trace(model, cfg, 500 + i);
        truth = sim.ground_truth;
        const BinaryLaserSignal laser = normalize_laser(sim.trace.laser, {2.2, 1.1});
        const LayerBoundaries b = segment_layers(laser, {1000});
        grids.push_back(
            rasterize_layers(laser, sim.trace.galvo_x, sim.trace.galvo_y, b, {0.1}));
    }
    const VoxelGrid merged = differential_voxelization(grids);
    std::uint32_t min_true_aggregate = UINT32_MAX;
    for (const auto& [key, hits] : truth.cells) {
        bool in_all = true;
        for (const VoxelGrid& g : grids)
            if (!g.occupied(key)) in_all = false;
        if (in_all) {
            CHECK(merged.hit_at(key) >= 3);
            min_true_aggregate = std::min(min_true_aggregate, merged.hit_at(key));
        }
    }
    // Noise-only cells stay far below the sintered cells' aggregate.
    std::uint32_t max_stray = 0;
    for (const auto& [key, hits] : merged.cells)
        if (!truth.occupied(key)) max_stray = std::max(max_stray, hits);
    CHECK(max_stray < min_true_aggregate);
}
