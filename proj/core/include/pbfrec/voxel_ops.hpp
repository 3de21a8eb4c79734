#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>

#include "pbfrec/rasterizer.hpp"

namespace pbfrec {

/// Parameters for the two pruning strategies. min_neighbors may not exceed
/// the box capacity (2*range+1)^2 - 1 in the plane.
struct PruneConfig {
    std::uint32_t min_hit = 1;
    std::int32_t neighbor_range = 5;
    std::uint32_t min_neighbors = 33;
};

/// Removes voxels whose hit counter is below min_hit.
VoxelGrid prune_by_hit_count(const VoxelGrid& grid, std::uint32_t min_hit);

/// Removes voxels with fewer than min_neighbors occupied cells inside the 3D
/// box [layer +- range] x [rx +- range] x [ry +- range], the voxel itself
/// excluded. Counts are taken against the input grid; removal of one voxel
/// never affects another voxel's count (single sweep, no cascade).
VoxelGrid prune_by_neighbors(const VoxelGrid& grid, std::int32_t range, std::uint32_t min_neighbors);

/// Lengths of maximal empty runs along the X axis that lie strictly between
/// two occupied cells of the same (layer, ry) row. Leading and trailing
/// empties are not stretches.
std::map<std::size_t, std::size_t> gap_stretch_histogram(const VoxelGrid& grid);

/// Distribution of within-layer (2D) neighbor counts at the given range over
/// all occupied voxels. This is the plane variant used for diagnostics; the
/// pruning pass above counts in 3D.
std::map<std::size_t, std::size_t> neighbor_count_histogram(const VoxelGrid& grid, std::int32_t range);

enum class ProjectionDirection { Up, Down, Bidirectional };

struct CellXY {
    std::int32_t rx = 0;
    std::int32_t ry = 0;

    friend bool operator==(const CellXY&, const CellXY&) = default;
};

struct CellXYHash {
    std::size_t operator()(const CellXY& c) const {
        std::uint64_t v = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.rx)) << 32) |
                          static_cast<std::uint32_t>(c.ry);
        v += 0x9e3779b97f4a7c15ull;
        v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
        v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
        return static_cast<std::size_t>(v ^ (v >> 31));
    }
};

struct SurfaceEntry {
    std::int32_t layer = 0;          // extreme layer of the column
    std::uint64_t aggregated_hits = 0;  // sum of hits over the projected layers
};

using SurfaceMap = std::unordered_map<CellXY, SurfaceEntry, CellXYHash>;

/// Column projection of a grid. Up keeps, per (rx, ry), the highest occupied
/// layer; Down the lowest. Bidirectional splits the stack at middle_layer:
/// the bottom half (layers <= middle) projects down, the top half
/// (layers >= middle) projects up, with the middle layer counted in both.
/// Columns whose aggregated hits fall below min_hit_filter are dropped.
struct ColumnProjection {
    ProjectionDirection direction = ProjectionDirection::Up;
    std::int32_t middle_layer = 0;  // meaningful for Bidirectional only
    std::uint32_t min_hit_filter = 1;
    SurfaceMap up;    // populated for Up and Bidirectional
    SurfaceMap down;  // populated for Down and Bidirectional
};

ColumnProjection project_columns(const VoxelGrid& grid, ProjectionDirection direction,
                                 std::uint32_t min_hit_filter, std::int32_t middle_layer = -1);

/// Fills infill gaps using a column projection: every empty voxel admitted by
/// the projection rule (Up: layer < surface; Down: layer > surface;
/// Bidirectional: both half rules) receives hit 1, and every originally
/// occupied voxel gets +1 so filled and original voxels stay distinguishable.
VoxelGrid fill_gaps(const VoxelGrid& grid, const ColumnProjection& projection);

}  // namespace pbfrec
