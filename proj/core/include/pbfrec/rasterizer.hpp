#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "pbfrec/layer_segmentation.hpp"
#include "pbfrec/signal_prep.hpp"

namespace pbfrec {

/// Quadratic raster: X and Y share the same cell edge length in volts.
struct RasterSpec {
    double raster_size_volts = 0.0025;
};

struct VoxelKey {
    std::int32_t layer = 0;
    std::int32_t rx = 0;
    std::int32_t ry = 0;

    friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
    std::size_t operator()(const VoxelKey& k) const {
        auto mix = [](std::uint64_t v) {
            v += 0x9e3779b97f4a7c15ull;
            v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
            v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
            return v ^ (v >> 31);
        };
        std::uint64_t h = mix(static_cast<std::uint32_t>(k.layer));
        h = mix(h ^ static_cast<std::uint32_t>(k.rx));
        h = mix(h ^ static_cast<std::uint32_t>(k.ry));
        return static_cast<std::size_t>(h);
    }
};

/// Sparse hit-counted voxel grid in (layer, rasterX, rasterY) coordinates.
/// Cells with zero hits are absent from the map.
struct VoxelGrid {
    std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> cells;
    RasterSpec raster{};
    std::uint32_t layer_count = 0;

    std::uint32_t hit_at(const VoxelKey& key) const {
        auto it = cells.find(key);
        return it == cells.end() ? 0u : it->second;
    }
    bool occupied(const VoxelKey& key) const { return cells.find(key) != cells.end(); }
    void add_hits(const VoxelKey& key, std::uint32_t n) {
        if (n > 0) cells[key] += n;
    }
    std::size_t occupied_count() const { return cells.size(); }

    /// Cells in deterministic (layer, rx, ry) order, for stable exports.
    std::vector<std::pair<VoxelKey, std::uint32_t>> sorted_cells() const;
};

/// Bins every laser-ON sample inside a layer interval into the voxel
/// (layer, floor(gx/raster), floor(gy/raster)) and counts hits. Samples
/// outside all layer intervals are ignored. Floor division keeps negative
/// voltages binning consistently.
VoxelGrid rasterize_layers(const BinaryLaserSignal& laser, std::span<const double> galvo_x,
                           std::span<const double> galvo_y, const LayerBoundaries& boundaries,
                           const RasterSpec& raster);

/// Cell-wise sum of hit counters across traces of the same print. All grids
/// must share raster size and layer count; prints must share position and
/// orientation, which is the caller's responsibility.
VoxelGrid differential_voxelization(std::span<const VoxelGrid> grids);

/// Grid CSV (`rx,ry,layer,hit` rows) plus a `<path>.meta.json` sidecar
/// holding raster size and layer count.
void write_grid_csv(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid load_grid_csv(const std::filesystem::path& path);

}  // namespace pbfrec
