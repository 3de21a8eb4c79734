#pragma once

// Independent test oracles. Everything here is deliberately written as the
// dumbest correct implementation (replay automata, dense arrays, triple
// loops) and must stay independent of the library code paths it checks.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "pbfrec/evaluation.hpp"
#include "pbfrec/layer_segmentation.hpp"
#include "pbfrec/rasterizer.hpp"
#include "pbfrec/signal_prep.hpp"

namespace oracles {

// Direct two-state automaton replay of the hysteresis rule.
inline std::vector<int> replay_hysteresis(const std::vector<double>& raw, double on, double off) {
    std::vector<int> out;
    out.reserve(raw.size());
    int state = 0;
    for (double v : raw) {
        if (v >= on)
            state = 1;
        else if (v <= off)
            state = 0;
        out.push_back(state);
    }
    return out;
}

// Run-length-encoding oracle: maximal ON runs merged across OFF runs of
// length <= threshold.
inline std::vector<std::pair<std::size_t, std::size_t>> rle_merge_segments(
    const std::vector<int>& states, std::size_t threshold) {
    struct Run {
        int value;
        std::size_t start, length;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < states.size();) {
        std::size_t j = i;
        while (j < states.size() && states[j] == states[i]) ++j;
        runs.push_back({states[i], i, j - i});
        i = j;
    }
    std::vector<std::pair<std::size_t, std::size_t>> layers;
    bool open = false;
    std::size_t start = 0, last_on_end = 0;
    for (const Run& run : runs) {
        if (run.value == 1) {
            if (!open) {
                open = true;
                start = run.start;
            }
            last_on_end = run.start + run.length - 1;
        } else if (open && run.length > threshold) {
            layers.emplace_back(start, last_on_end);
            open = false;
        }
    }
    if (open) layers.emplace_back(start, last_on_end);
    return layers;
}

// Dense-array rasterizer over the bounding box of the galvo values.
inline std::vector<std::pair<pbfrec::VoxelKey, std::uint32_t>> dense_rasterize(
    const std::vector<int>& laser_on, const std::vector<double>& gx, const std::vector<double>& gy,
    const std::vector<std::pair<std::size_t, std::size_t>>& layers, double raster) {
    std::int64_t min_x = 1 << 20, max_x = -(1 << 20), min_y = 1 << 20, max_y = -(1 << 20);
    for (std::size_t i = 0; i < gx.size(); ++i) {
        min_x = std::min<std::int64_t>(min_x, static_cast<std::int64_t>(std::floor(gx[i] / raster)));
        max_x = std::max<std::int64_t>(max_x, static_cast<std::int64_t>(std::floor(gx[i] / raster)));
        min_y = std::min<std::int64_t>(min_y, static_cast<std::int64_t>(std::floor(gy[i] / raster)));
        max_y = std::max<std::int64_t>(max_y, static_cast<std::int64_t>(std::floor(gy[i] / raster)));
    }
    const std::size_t width = static_cast<std::size_t>(max_x - min_x + 1);
    const std::size_t height = static_cast<std::size_t>(max_y - min_y + 1);
    std::vector<std::uint32_t> dense(layers.size() * width * height, 0);
    for (std::size_t layer = 0; layer < layers.size(); ++layer) {
        for (std::size_t i = layers[layer].first; i <= layers[layer].second; ++i) {
            if (!laser_on[i]) continue;
            const std::size_t ix = static_cast<std::size_t>(
                static_cast<std::int64_t>(std::floor(gx[i] / raster)) - min_x);
            const std::size_t iy = static_cast<std::size_t>(
                static_cast<std::int64_t>(std::floor(gy[i] / raster)) - min_y);
            ++dense[(layer * height + iy) * width + ix];
        }
    }
    std::vector<std::pair<pbfrec::VoxelKey, std::uint32_t>> cells;
    for (std::size_t layer = 0; layer < layers.size(); ++layer)
        for (std::size_t iy = 0; iy < height; ++iy)
            for (std::size_t ix = 0; ix < width; ++ix) {
                const std::uint32_t hits = dense[(layer * height + iy) * width + ix];
                if (hits > 0)
                    cells.push_back({pbfrec::VoxelKey{static_cast<std::int32_t>(layer),
                                                      static_cast<std::int32_t>(min_x + ix),
                                                      static_cast<std::int32_t>(min_y + iy)},
                                     hits});
            }
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
        const auto& ka = a.first;
        const auto& kb = b.first;
        return std::tuple(ka.layer, ka.rx, ka.ry) < std::tuple(kb.layer, kb.rx, kb.ry);
    });
    return cells;
}

// Brute-force 3D neighbor pruning: triple loop over the box per voxel.
inline pbfrec::VoxelGrid brute_force_neighbor_prune(const pbfrec::VoxelGrid& grid, std::int32_t range,
                                                    std::uint32_t min_neighbors) {
    pbfrec::VoxelGrid out;
    out.raster = grid.raster;
    out.layer_count = grid.layer_count;
    for (const auto& [key, hits] : grid.cells) {
        std::int64_t neighbors = -1;  // discount the voxel itself
        for (std::int32_t l = key.layer - range; l <= key.layer + range; ++l)
            for (std::int32_t x = key.rx - range; x <= key.rx + range; ++x)
                for (std::int32_t y = key.ry - range; y <= key.ry + range; ++y)
                    if (grid.occupied(pbfrec::VoxelKey{l, x, y})) ++neighbors;
        if (neighbors >= static_cast<std::int64_t>(min_neighbors)) out.cells.emplace(key, hits);
    }
    return out;
}

// Random sparse grid for oracle-equivalence suites.
inline pbfrec::VoxelGrid random_grid(std::mt19937& rng, std::int32_t nx, std::int32_t ny,
                                     std::uint32_t layers, double fill_probability) {
    pbfrec::VoxelGrid grid;
    grid.raster.raster_size_volts = 1.0;
    grid.layer_count = layers;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::uint32_t> hit(1, 9);
    for (std::uint32_t l = 0; l < layers; ++l)
        for (std::int32_t x = 0; x < nx; ++x)
            for (std::int32_t y = 0; y < ny; ++y)
                if (coin(rng) < fill_probability)
                    grid.cells.emplace(pbfrec::VoxelKey{static_cast<std::int32_t>(l), x, y}, hit(rng));
    return grid;
}

// Steady-state amplitude of a filtered sinusoid via quadrature projection
// over an integer number of periods.
inline double steady_amplitude(const std::vector<double>& samples, double frequency_hz,
                               double sample_rate_hz) {
    const std::size_t period = static_cast<std::size_t>(sample_rate_hz / frequency_hz);
    const std::size_t periods_available = samples.size() / period;
    const std::size_t use_periods = periods_available / 2;
    const std::size_t n = use_periods * period;
    const std::size_t start = samples.size() - n;
    double in_phase = 0.0, quadrature = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double phase = 2.0 * 3.14159265358979323846 * frequency_hz *
                             static_cast<double>(start + i) / sample_rate_hz;
        in_phase += samples[start + i] * std::sin(phase);
        quadrature += samples[start + i] * std::cos(phase);
    }
    return 2.0 * std::sqrt(in_phase * in_phase + quadrature * quadrature) / static_cast<double>(n);
}

inline std::filesystem::path temp_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "pbfrec_tests" / name;
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<int> to_int_states(const pbfrec::BinaryLaserSignal& signal) {
    std::vector<int> out;
    out.reserve(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i) out.push_back(signal.on(i) ? 1 : 0);
    return out;
}

}  // namespace oracles
