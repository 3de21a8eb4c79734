#pragma once

#include <array>
#include <cstdint>
#include <unordered_set>

#include "pbfrec/rasterizer.hpp"
#include "pbfrec/trace_io.hpp"

namespace pbfrec {

struct CellIndex {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t z = 0;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

struct CellIndexHash {
    std::size_t operator()(const CellIndex& c) const {
        auto mix = [](std::uint64_t v) {
            v += 0x9e3779b97f4a7c15ull;
            v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
            v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
            return v ^ (v >> 31);
        };
        std::uint64_t h = mix(static_cast<std::uint32_t>(c.x));
        h = mix(h ^ static_cast<std::uint32_t>(c.y));
        h = mix(h ^ static_cast<std::uint32_t>(c.z));
        return static_cast<std::size_t>(h);
    }
};

/// Equidistant occupancy grid used for volumetric comparison.
struct OccupancyGrid {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    double cell_size = 0.25;
    std::unordered_set<CellIndex, CellIndexHash> occupied;

    bool in_bounds(const CellIndex& c) const {
        return c.x >= 0 && c.y >= 0 && c.z >= 0 && static_cast<std::size_t>(c.x) < dims[0] &&
               static_cast<std::size_t>(c.y) < dims[1] && static_cast<std::size_t>(c.z) < dims[2];
    }
    std::array<double, 3> cell_center(const CellIndex& c) const {
        return {origin[0] + (c.x + 0.5) * cell_size, origin[1] + (c.y + 0.5) * cell_size,
                origin[2] + (c.z + 0.5) * cell_size};
    }
};

struct VoxelizeStats {
    bool watertight = false;
    std::size_t degenerate_triangles = 0;
    std::size_t surface_cells = 0;
    std::size_t interior_cells = 0;
};

/// Solid voxelization of a triangle mesh: a cell is occupied when its center
/// lies inside the mesh (parity of +x ray crossings, with a small off-axis
/// jitter to dodge edge/vertex hits) or when the cell box intersects the
/// surface. Non-watertight meshes fall back to surface-only voxelization;
/// check stats.watertight when that matters.
OccupancyGrid voxelize_mesh(const TriangleMesh& mesh, double cell_size,
                            VoxelizeStats* stats = nullptr);

enum class ScaleRule { GearBaseDiameter, AstmMeanAxis, Explicit };

struct AlignSpec {
    ScaleRule rule = ScaleRule::AstmMeanAxis;
    std::array<double, 3> explicit_scale{1.0, 1.0, 1.0};
};

/// Scales the cloud per rule (base-diameter ratio, mean per-axis ratio, or an
/// explicit factor triple) and translates its centroid onto the centroid of
/// the reference's occupied cell centers.
PointCloud align_and_scale(const PointCloud& cloud, const OccupancyGrid& reference,
                           const AlignSpec& spec);

/// Marks every cell of the template grid that contains at least one point.
/// Out-of-bounds points are tallied, not fatal.
OccupancyGrid revoxelize_cloud(const PointCloud& cloud, const OccupancyGrid& grid_template,
                               std::size_t* out_of_bounds = nullptr);

struct EvaluationReport {
    std::uint64_t true_pos = 0;
    std::uint64_t false_pos = 0;
    std::uint64_t false_neg = 0;
    std::uint64_t reference_count = 0;
    double true_pos_pct = 0.0;
    double false_pos_pct = 0.0;
    double false_neg_pct = 0.0;
};

/// Percentages are always relative to the reference count.
EvaluationReport make_report(std::uint64_t true_pos, std::uint64_t false_pos, std::uint64_t false_neg);

struct ComparisonClouds {
    PointCloud true_pos;
    PointCloud false_pos;
    PointCloud false_neg;
};

/// Volumetric TP/FP/FN comparison of two grids with identical geometry.
/// Optionally emits the three classification clouds (cell centers, weight 1).
EvaluationReport compare_voxels(const OccupancyGrid& reference, const OccupancyGrid& reconstructed,
                                ComparisonClouds* clouds = nullptr);

/// Occupancy view of a voxel grid: unit cells at integer (rx, ry, layer)
/// coordinates, for simulator-ground-truth comparisons.
OccupancyGrid occupancy_from_voxel_grid(const VoxelGrid& grid);

}  // namespace pbfrec
