#include "pbfrec/voxel_ops.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "pbfrec/errors.hpp"

namespace pbfrec {

namespace {

// Per-layer occupancy with a 2D prefix-sum table, so a neighbor-box query is
// four lookups instead of a (2r+1)^2 scan. Falls back to probing the sparse
// map when the occupied bounding boxes are too large to tabulate.
class LayerIndex {
public:
    explicit LayerIndex(const VoxelGrid& grid) : grid_(grid) {
        for (const auto& [key, hits] : grid.cells) {
            LayerTable& t = tables_[key.layer];
            t.min_x = std::min(t.min_x, key.rx);
            t.max_x = std::max(t.max_x, key.rx);
            t.min_y = std::min(t.min_y, key.ry);
            t.max_y = std::max(t.max_y, key.ry);
        }
        std::size_t total_entries = 0;
        for (auto& [layer, t] : tables_) {
            t.width = static_cast<std::int64_t>(t.max_x) - t.min_x + 1;
            t.height = static_cast<std::int64_t>(t.max_y) - t.min_y + 1;
            total_entries += static_cast<std::size_t>(t.width + 1) * static_cast<std::size_t>(t.height + 1);
        }
        // ~1 GB of tables is the cutoff; beyond that probe the hash map.
        if (total_entries > (std::size_t{1} << 28)) {
            tables_.clear();
            tabulated_ = false;
            return;
        }
        for (auto& [layer, t] : tables_)
            t.prefix.assign(static_cast<std::size_t>(t.width + 1) * (t.height + 1), 0);
        for (const auto& [key, hits] : grid.cells) {
            LayerTable& t = tables_[key.layer];
            t.at(key.rx - t.min_x + 1, key.ry - t.min_y + 1) = 1;
        }
        for (auto& [layer, t] : tables_) {
            for (std::int64_t x = 1; x <= t.width; ++x)
                for (std::int64_t y = 1; y <= t.height; ++y)
                    t.at(x, y) += t.at(x - 1, y) + t.at(x, y - 1) - t.at(x - 1, y - 1);
        }
    }

    // Occupied cells of one layer inside [x0,x1] x [y0,y1] (inclusive).
    std::uint32_t count_in_box(std::int32_t layer, std::int32_t x0, std::int32_t x1, std::int32_t y0,
                               std::int32_t y1) const {
        if (!tabulated_) {
            std::uint32_t count = 0;
            for (std::int32_t x = x0; x <= x1; ++x)
                for (std::int32_t y = y0; y <= y1; ++y)
                    if (grid_.occupied(VoxelKey{layer, x, y})) ++count;
            return count;
        }
        auto it = tables_.find(layer);
        if (it == tables_.end()) return 0;
        const LayerTable& t = it->second;
        std::int64_t cx0 = std::max<std::int64_t>(x0, t.min_x) - t.min_x;
        std::int64_t cx1 = std::min<std::int64_t>(x1, t.max_x) - t.min_x;
        std::int64_t cy0 = std::max<std::int64_t>(y0, t.min_y) - t.min_y;
        std::int64_t cy1 = std::min<std::int64_t>(y1, t.max_y) - t.min_y;
        if (cx0 > cx1 || cy0 > cy1) return 0;
        return t.at(cx1 + 1, cy1 + 1) - t.at(cx0, cy1 + 1) - t.at(cx1 + 1, cy0) + t.at(cx0, cy0);
    }

private:
    struct LayerTable {
        std::int32_t min_x = std::numeric_limits<std::int32_t>::max();
        std::int32_t max_x = std::numeric_limits<std::int32_t>::min();
        std::int32_t min_y = std::numeric_limits<std::int32_t>::max();
        std::int32_t max_y = std::numeric_limits<std::int32_t>::min();
        std::int64_t width = 0, height = 0;
        std::vector<std::uint32_t> prefix;

        std::uint32_t& at(std::int64_t x, std::int64_t y) {
            return prefix[static_cast<std::size_t>(y * (width + 1) + x)];
        }
        std::uint32_t at(std::int64_t x, std::int64_t y) const {
            return prefix[static_cast<std::size_t>(y * (width + 1) + x)];
        }
    };
    const VoxelGrid& grid_;
    std::unordered_map<std::int32_t, LayerTable> tables_;
    bool tabulated_ = true;
};

void validate_range(std::int32_t range) {
    if (range < 1)
        throw ConfigError("neighbor range must be >= 1");
}

}  // namespace

VoxelGrid prune_by_hit_count(const VoxelGrid& grid, std::uint32_t min_hit) {
    if (min_hit < 1)
        throw ConfigError("min_hit must be >= 1");
    VoxelGrid out;
    out.raster = grid.raster;
    out.layer_count = grid.layer_count;
    for (const auto& [key, hits] : grid.cells)
        if (hits >= min_hit) out.cells.emplace(key, hits);
    return out;
}

VoxelGrid prune_by_neighbors(const VoxelGrid& grid, std::int32_t range, std::uint32_t min_neighbors) {
    validate_range(range);

    VoxelGrid out;
    out.raster = grid.raster;
    out.layer_count = grid.layer_count;
    if (grid.cells.empty()) return out;

    const LayerIndex index(grid);
    for (const auto& [key, hits] : grid.cells) {
        std::uint64_t neighbors = 0;
        for (std::int32_t layer = key.layer - range; layer <= key.layer + range; ++layer)
            neighbors += index.count_in_box(layer, key.rx - range, key.rx + range, key.ry - range,
                                            key.ry + range);
        --neighbors;  // the voxel itself
        if (neighbors >= min_neighbors) out.cells.emplace(key, hits);
    }
    return out;
}

std::map<std::size_t, std::size_t> gap_stretch_histogram(const VoxelGrid& grid) {
    std::map<std::size_t, std::size_t> histogram;

    // Bucket occupied rx values per (layer, ry) row.
    std::unordered_map<std::uint64_t, std::vector<std::int32_t>> rows;
    rows.reserve(grid.cells.size() / 4 + 1);
    for (const auto& [key, hits] : grid.cells) {
        const std::uint64_t row_key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(key.layer)) << 32) |
                                      static_cast<std::uint32_t>(key.ry);
        rows[row_key].push_back(key.rx);
    }
    for (auto& [row_key, xs] : rows) {
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 1; i < xs.size(); ++i) {
            const std::int64_t gap = static_cast<std::int64_t>(xs[i]) - xs[i - 1] - 1;
            if (gap > 0) ++histogram[static_cast<std::size_t>(gap)];
        }
    }
    return histogram;
}

std::map<std::size_t, std::size_t> neighbor_count_histogram(const VoxelGrid& grid, std::int32_t range) {
    validate_range(range);
    std::map<std::size_t, std::size_t> histogram;
    if (grid.cells.empty()) return histogram;

    const LayerIndex index(grid);
    for (const auto& [key, hits] : grid.cells) {
        const std::uint32_t in_box = index.count_in_box(key.layer, key.rx - range, key.rx + range,
                                                        key.ry - range, key.ry + range);
        ++histogram[in_box - 1];
    }
    return histogram;
}

ColumnProjection project_columns(const VoxelGrid& grid, ProjectionDirection direction,
                                 std::uint32_t min_hit_filter, std::int32_t middle_layer) {
    if (min_hit_filter < 1)
        throw ConfigError("projection min hit filter must be >= 1");

    ColumnProjection proj;
    proj.direction = direction;
    proj.min_hit_filter = min_hit_filter;

    if (direction == ProjectionDirection::Bidirectional) {
        if (middle_layer < 0)
            middle_layer = grid.layer_count > 0 ? static_cast<std::int32_t>((grid.layer_count - 1) / 2) : 0;
        if (grid.layer_count > 0 &&
            (middle_layer < 0 || middle_layer >= static_cast<std::int32_t>(grid.layer_count)))
            throw ConfigError("bidirectional projection: middle layer outside [0, layer_count)");
        proj.middle_layer = middle_layer;
    }

    auto accumulate = [](SurfaceMap& map, const CellXY& xy, std::int32_t layer, std::uint32_t hits,
                         bool keep_max) {
        auto [it, inserted] = map.try_emplace(xy, SurfaceEntry{layer, hits});
        if (!inserted) {
            it->second.aggregated_hits += hits;
            if (keep_max ? layer > it->second.layer : layer < it->second.layer)
                it->second.layer = layer;
        }
    };

    for (const auto& [key, hits] : grid.cells) {
        const CellXY xy{key.rx, key.ry};
        switch (direction) {
            case ProjectionDirection::Up:
                accumulate(proj.up, xy, key.layer, hits, true);
                break;
            case ProjectionDirection::Down:
                accumulate(proj.down, xy, key.layer, hits, false);
                break;
            case ProjectionDirection::Bidirectional:
                if (key.layer <= proj.middle_layer)
                    accumulate(proj.down, xy, key.layer, hits, false);
                if (key.layer >= proj.middle_layer)
                    accumulate(proj.up, xy, key.layer, hits, true);
                break;
        }
    }

    auto filter = [min_hit_filter](SurfaceMap& map) {
        for (auto it = map.begin(); it != map.end();) {
            if (it->second.aggregated_hits < min_hit_filter)
                it = map.erase(it);
            else
                ++it;
        }
    };
    filter(proj.up);
    filter(proj.down);
    return proj;
}

VoxelGrid fill_gaps(const VoxelGrid& grid, const ColumnProjection& projection) {
    VoxelGrid out;
    out.raster = grid.raster;
    out.layer_count = grid.layer_count;

    // Mark originals so that filled voxels (hit 1) stay distinguishable.
    for (const auto& [key, hits] : grid.cells)
        out.cells.emplace(key, hits + 1);

    const std::int32_t layer_count = static_cast<std::int32_t>(grid.layer_count);
    auto fill_cell = [&](std::int32_t layer, const CellXY& xy) {
        if (layer < 0 || layer >= layer_count) return;
        out.cells.try_emplace(VoxelKey{layer, xy.rx, xy.ry}, 1u);
    };

    switch (projection.direction) {
        case ProjectionDirection::Up:
            for (const auto& [xy, entry] : projection.up)
                for (std::int32_t layer = 0; layer < entry.layer; ++layer) fill_cell(layer, xy);
            break;
        case ProjectionDirection::Down:
            for (const auto& [xy, entry] : projection.down)
                for (std::int32_t layer = entry.layer + 1; layer < layer_count; ++layer)
                    fill_cell(layer, xy);
            break;
        case ProjectionDirection::Bidirectional:
            for (const auto& [xy, entry] : projection.down)
                for (std::int32_t layer = entry.layer + 1; layer <= projection.middle_layer; ++layer)
                    fill_cell(layer, xy);
            for (const auto& [xy, entry] : projection.up)
                for (std::int32_t layer = projection.middle_layer; layer < entry.layer; ++layer)
                    fill_cell(layer, xy);
            break;
    }
    return out;
}

}  // namespace pbfrec
