#include "pbfrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "pbfrec/errors.hpp"

namespace pbfrec {

namespace {

struct Bounds {
    Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
    Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};

    void extend(const Vec3& v) {
        for (int i = 0; i < 3; ++i) {
            min[i] = std::min(min[i], v[i]);
            max[i] = std::max(max[i], v[i]);
        }
    }
};

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

bool is_degenerate(const Triangle& t) {
    const Vec3 n = cross(sub(t.v1, t.v0), sub(t.v2, t.v0));
    return dot(n, n) <= 0.0;
}

// Separating-axis triangle/axis-aligned-box overlap test (box given by center
// and half extents).
bool triangle_box_overlap(const Triangle& tri, const Vec3& center, double half) {
    const Vec3 v0 = sub(tri.v0, center);
    const Vec3 v1 = sub(tri.v1, center);
    const Vec3 v2 = sub(tri.v2, center);

    auto axis_test = [&](const Vec3& axis) {
        const double p0 = dot(v0, axis);
        const double p1 = dot(v1, axis);
        const double p2 = dot(v2, axis);
        const double r = half * (std::abs(axis[0]) + std::abs(axis[1]) + std::abs(axis[2]));
        const double mn = std::min({p0, p1, p2});
        const double mx = std::max({p0, p1, p2});
        return mn <= r && mx >= -r;
    };

    // Box face normals.
    for (int i = 0; i < 3; ++i) {
        const double mn = std::min({v0[i], v1[i], v2[i]});
        const double mx = std::max({v0[i], v1[i], v2[i]});
        if (mn > half || mx < -half) return false;
    }
    // Triangle normal.
    const Vec3 e0 = sub(v1, v0);
    const Vec3 e1 = sub(v2, v1);
    const Vec3 e2 = sub(v0, v2);
    if (!axis_test(cross(e0, e1))) return false;
    // Nine edge cross products.
    const Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (const Vec3& a : axes)
        for (const Vec3& e : {e0, e1, e2})
            if (!axis_test(cross(a, e))) return false;
    return true;
}

// Vertex key with exact bit equality; STL files repeat shared vertices
// verbatim, so no quantization is needed for the manifold check.
struct VertexKey {
    std::array<double, 3> v;
    friend bool operator<(const VertexKey& a, const VertexKey& b) { return a.v < b.v; }
    friend bool operator==(const VertexKey& a, const VertexKey& b) { return a.v == b.v; }
};

bool mesh_is_watertight(const TriangleMesh& mesh) {
    std::map<std::pair<VertexKey, VertexKey>, int> edge_count;
    for (const Triangle& t : mesh.triangles) {
        if (is_degenerate(t)) continue;
        const VertexKey keys[3] = {{t.v0}, {t.v1}, {t.v2}};
        for (int i = 0; i < 3; ++i) {
            VertexKey a = keys[i];
            VertexKey b = keys[(i + 1) % 3];
            if (b < a) std::swap(a, b);
            ++edge_count[{a, b}];
        }
    }
    if (edge_count.empty()) return false;
    for (const auto& [edge, count] : edge_count)
        if (count != 2) return false;
    return true;
}

}  // namespace

OccupancyGrid voxelize_mesh(const TriangleMesh& mesh, double cell_size, VoxelizeStats* stats) {
    if (cell_size <= 0.0)
        throw ConfigError("voxelization cell size must be positive");
    if (mesh.triangles.empty())
        throw DataError("cannot voxelize an empty mesh");

    Bounds bounds;
    for (const Triangle& t : mesh.triangles) {
        bounds.extend(t.v0);
        bounds.extend(t.v1);
        bounds.extend(t.v2);
    }

    OccupancyGrid grid;
    grid.cell_size = cell_size;
    grid.origin = bounds.min;
    for (int i = 0; i < 3; ++i) {
        const double extent = bounds.max[i] - bounds.min[i];
        grid.dims[i] = static_cast<std::size_t>(std::max(1.0, std::ceil(extent / cell_size - 1e-9)));
    }

    VoxelizeStats local_stats;
    local_stats.watertight = mesh_is_watertight(mesh);

    std::vector<const Triangle*> usable;
    usable.reserve(mesh.triangles.size());
    for (const Triangle& t : mesh.triangles) {
        if (is_degenerate(t))
            ++local_stats.degenerate_triangles;
        else
            usable.push_back(&t);
    }

    // Surface cells: every cell whose box the triangle touches.
    const double half = cell_size / 2.0;
    // One extra ring of candidate cells on each side so triangles lying
    // exactly on a cell boundary still meet their neighbors; the overlap
    // test filters the rest.
    auto cell_range = [&](double lo, double hi, int axis, std::int64_t& i0, std::int64_t& i1) {
        i0 = static_cast<std::int64_t>(std::floor((lo - grid.origin[axis]) / cell_size)) - 1;
        i1 = static_cast<std::int64_t>(std::floor((hi - grid.origin[axis]) / cell_size)) + 1;
        i0 = std::max<std::int64_t>(i0, 0);
        i1 = std::min<std::int64_t>(i1, static_cast<std::int64_t>(grid.dims[axis]) - 1);
    };
    for (const Triangle* t : usable) {
        Bounds tb;
        tb.extend(t->v0);
        tb.extend(t->v1);
        tb.extend(t->v2);
        std::int64_t x0, x1, y0, y1, z0, z1;
        cell_range(tb.min[0], tb.max[0], 0, x0, x1);
        cell_range(tb.min[1], tb.max[1], 1, y0, y1);
        cell_range(tb.min[2], tb.max[2], 2, z0, z1);
        for (std::int64_t z = z0; z <= z1; ++z)
            for (std::int64_t y = y0; y <= y1; ++y)
                for (std::int64_t x = x0; x <= x1; ++x) {
                    const CellIndex c{static_cast<std::int32_t>(x), static_cast<std::int32_t>(y),
                                      static_cast<std::int32_t>(z)};
                    const Vec3 center = grid.cell_center(c);
                    if (triangle_box_overlap(*t, center, half)) grid.occupied.insert(c);
                }
    }
    local_stats.surface_cells = grid.occupied.size();

    // Interior fill by ray parity, one +x ray per (y, z) cell-center column.
    // The ray is nudged off the lattice so it cannot hit edges or vertices
    // that lie exactly on cell-center coordinates.
    if (local_stats.watertight) {
        const double jitter_y = cell_size * 1.9e-7;
        const double jitter_z = cell_size * 3.1e-7;

        // Bin triangles over (y, z) columns to avoid the full cross product.
        const std::size_t ny = grid.dims[1];
        const std::size_t nz = grid.dims[2];
        std::vector<std::vector<std::uint32_t>> bins(ny * nz);
        for (std::uint32_t ti = 0; ti < usable.size(); ++ti) {
            const Triangle& t = *usable[ti];
            Bounds tb;
            tb.extend(t.v0);
            tb.extend(t.v1);
            tb.extend(t.v2);
            std::int64_t y0, y1, z0, z1;
            // Column (iy, iz) samples at origin + (i + 0.5 + eps) * cell.
            y0 = static_cast<std::int64_t>(std::floor((tb.min[1] - grid.origin[1]) / cell_size - 0.5));
            y1 = static_cast<std::int64_t>(std::ceil((tb.max[1] - grid.origin[1]) / cell_size - 0.5));
            z0 = static_cast<std::int64_t>(std::floor((tb.min[2] - grid.origin[2]) / cell_size - 0.5));
            z1 = static_cast<std::int64_t>(std::ceil((tb.max[2] - grid.origin[2]) / cell_size - 0.5));
            y0 = std::max<std::int64_t>(y0, 0);
            z0 = std::max<std::int64_t>(z0, 0);
            y1 = std::min<std::int64_t>(y1, static_cast<std::int64_t>(ny) - 1);
            z1 = std::min<std::int64_t>(z1, static_cast<std::int64_t>(nz) - 1);
            for (std::int64_t z = z0; z <= z1; ++z)
                for (std::int64_t y = y0; y <= y1; ++y)
                    bins[static_cast<std::size_t>(z) * ny + static_cast<std::size_t>(y)].push_back(ti);
        }

        std::vector<double> crossings;
        for (std::size_t iz = 0; iz < nz; ++iz) {
            for (std::size_t iy = 0; iy < ny; ++iy) {
                const auto& bin = bins[iz * ny + iy];
                if (bin.empty()) continue;
                const double ray_y = grid.origin[1] + (iy + 0.5) * cell_size + jitter_y;
                const double ray_z = grid.origin[2] + (iz + 0.5) * cell_size + jitter_z;
                crossings.clear();
                for (std::uint32_t ti : bin) {
                    const Triangle& t = *usable[ti];
                    // Solve for the ray/triangle-plane hit in the (y, z)
                    // projection, then interpolate x.
                    const double ay = t.v1[1] - t.v0[1], az = t.v1[2] - t.v0[2];
                    const double by = t.v2[1] - t.v0[1], bz = t.v2[2] - t.v0[2];
                    const double det = ay * bz - az * by;
                    if (det == 0.0) continue;  // parallel to the ray
                    const double py = ray_y - t.v0[1], pz = ray_z - t.v0[2];
                    const double u = (py * bz - pz * by) / det;
                    const double v = (ay * pz - az * py) / det;
                    if (u < 0.0 || v < 0.0 || u + v > 1.0) continue;
                    crossings.push_back(t.v0[0] + u * (t.v1[0] - t.v0[0]) + v * (t.v2[0] - t.v0[0]));
                }
                if (crossings.empty()) continue;
                std::sort(crossings.begin(), crossings.end());
                // Walk cell centers and crossings together; odd remaining
                // crossings to the right means inside.
                std::size_t next = 0;
                for (std::size_t ix = 0; ix < grid.dims[0]; ++ix) {
                    const double cx = grid.origin[0] + (ix + 0.5) * cell_size;
                    while (next < crossings.size() && crossings[next] <= cx) ++next;
                    if ((crossings.size() - next) % 2 == 1)
                        grid.occupied.insert(CellIndex{static_cast<std::int32_t>(ix),
                                                       static_cast<std::int32_t>(iy),
                                                       static_cast<std::int32_t>(iz)});
                }
            }
        }
    }
    local_stats.interior_cells = grid.occupied.size() - local_stats.surface_cells;

    if (stats) *stats = local_stats;
    return grid;
}

namespace {

struct CloudBounds {
    Vec3 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity()};
    Vec3 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()};
    Vec3 centroid{0.0, 0.0, 0.0};
};

CloudBounds cloud_bounds(const PointCloud& cloud) {
    CloudBounds b;
    for (const PointXYZW& p : cloud.points) {
        const Vec3 v{p.x, p.y, p.z};
        for (int i = 0; i < 3; ++i) {
            b.min[i] = std::min(b.min[i], v[i]);
            b.max[i] = std::max(b.max[i], v[i]);
            b.centroid[i] += v[i];
        }
    }
    for (int i = 0; i < 3; ++i) b.centroid[i] /= static_cast<double>(cloud.points.size());
    return b;
}

CloudBounds reference_bounds(const OccupancyGrid& grid) {
    CloudBounds b;
    for (const CellIndex& c : grid.occupied) {
        const Vec3 v = grid.cell_center(c);
        for (int i = 0; i < 3; ++i) {
            b.min[i] = std::min(b.min[i], v[i]);
            b.max[i] = std::max(b.max[i], v[i]);
            b.centroid[i] += v[i];
        }
    }
    for (int i = 0; i < 3; ++i) b.centroid[i] /= static_cast<double>(grid.occupied.size());
    return b;
}

}  // namespace

PointCloud align_and_scale(const PointCloud& cloud, const OccupancyGrid& reference,
                           const AlignSpec& spec) {
    if (cloud.empty())
        throw DataError("cannot align an empty cloud");
    if (reference.occupied.empty())
        throw DataError("cannot align against an empty reference grid");

    const CloudBounds cb = cloud_bounds(cloud);
    const CloudBounds rb = reference_bounds(reference);

    std::array<double, 3> scale{1.0, 1.0, 1.0};
    switch (spec.rule) {
        case ScaleRule::GearBaseDiameter: {
            const double cloud_diameter = std::max(cb.max[0] - cb.min[0], cb.max[1] - cb.min[1]);
            const double ref_diameter = std::max(rb.max[0] - rb.min[0], rb.max[1] - rb.min[1]);
            if (cloud_diameter <= 0.0)
                throw DataError("degenerate cloud: zero base diameter");
            const double s = ref_diameter / cloud_diameter;
            scale = {s, s, s};
            break;
        }
        case ScaleRule::AstmMeanAxis: {
            double sum = 0.0;
            for (int i = 0; i < 3; ++i) {
                const double ce = cb.max[i] - cb.min[i];
                if (ce <= 0.0)
                    throw DataError("degenerate cloud: zero extent on an axis");
                sum += (rb.max[i] - rb.min[i]) / ce;
            }
            const double s = sum / 3.0;
            scale = {s, s, s};
            break;
        }
        case ScaleRule::Explicit:
            scale = spec.explicit_scale;
            for (double s : scale)
                if (s <= 0.0)
                    throw ConfigError("explicit scale factors must be positive");
            break;
    }

    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const PointXYZW& p : cloud.points) {
        PointXYZW q = p;
        q.x = (p.x - cb.centroid[0]) * scale[0] + rb.centroid[0];
        q.y = (p.y - cb.centroid[1]) * scale[1] + rb.centroid[1];
        q.z = (p.z - cb.centroid[2]) * scale[2] + rb.centroid[2];
        out.points.push_back(q);
    }
    return out;
}

OccupancyGrid revoxelize_cloud(const PointCloud& cloud, const OccupancyGrid& grid_template,
                               std::size_t* out_of_bounds) {
    OccupancyGrid out;
    out.dims = grid_template.dims;
    out.origin = grid_template.origin;
    out.cell_size = grid_template.cell_size;

    std::size_t dropped = 0;
    for (const PointXYZW& p : cloud.points) {
        const CellIndex c{
            static_cast<std::int32_t>(std::floor((p.x - out.origin[0]) / out.cell_size)),
            static_cast<std::int32_t>(std::floor((p.y - out.origin[1]) / out.cell_size)),
            static_cast<std::int32_t>(std::floor((p.z - out.origin[2]) / out.cell_size))};
        if (out.in_bounds(c))
            out.occupied.insert(c);
        else
            ++dropped;
    }
    if (out_of_bounds) *out_of_bounds = dropped;
    return out;
}

EvaluationReport make_report(std::uint64_t true_pos, std::uint64_t false_pos, std::uint64_t false_neg) {
    EvaluationReport r;
    r.true_pos = true_pos;
    r.false_pos = false_pos;
    r.false_neg = false_neg;
    r.reference_count = true_pos + false_neg;
    if (r.reference_count == 0)
        throw DataError("evaluation reference contains no voxels");
    const double ref = static_cast<double>(r.reference_count);
    r.true_pos_pct = static_cast<double>(true_pos) / ref * 100.0;
    r.false_pos_pct = static_cast<double>(false_pos) / ref * 100.0;
    r.false_neg_pct = static_cast<double>(false_neg) / ref * 100.0;
    return r;
}

EvaluationReport compare_voxels(const OccupancyGrid& reference, const OccupancyGrid& reconstructed,
                                ComparisonClouds* clouds) {
    if (reference.dims != reconstructed.dims || reference.origin != reconstructed.origin ||
        reference.cell_size != reconstructed.cell_size)
        throw DataError("compare_voxels: grids have mismatched geometry");

    std::uint64_t tp = 0, fp = 0, fn = 0;
    auto emit = [&](PointCloud* cloud, const CellIndex& c) {
        if (!cloud) return;
        const Vec3 v = reference.cell_center(c);
        cloud->points.push_back({v[0], v[1], v[2], 1});
    };

    for (const CellIndex& c : reference.occupied) {
        if (reconstructed.occupied.contains(c)) {
            ++tp;
            emit(clouds ? &clouds->true_pos : nullptr, c);
        } else {
            ++fn;
            emit(clouds ? &clouds->false_neg : nullptr, c);
        }
    }
    for (const CellIndex& c : reconstructed.occupied) {
        if (!reference.occupied.contains(c)) {
            ++fp;
            emit(clouds ? &clouds->false_pos : nullptr, c);
        }
    }

    if (clouds) {
        auto sort_cloud = [](PointCloud& cloud) {
            std::sort(cloud.points.begin(), cloud.points.end(), [](const PointXYZW& a, const PointXYZW& b) {
                if (a.z != b.z) return a.z < b.z;
                if (a.y != b.y) return a.y < b.y;
                return a.x < b.x;
            });
        };
        sort_cloud(clouds->true_pos);
        sort_cloud(clouds->false_pos);
        sort_cloud(clouds->false_neg);
    }
    return make_report(tp, fp, fn);
}

OccupancyGrid occupancy_from_voxel_grid(const VoxelGrid& grid) {
    OccupancyGrid out;
    out.cell_size = 1.0;
    if (grid.cells.empty()) {
        out.dims = {0, 0, 0};
        return out;
    }
    std::int32_t min_x = std::numeric_limits<std::int32_t>::max(), max_x = std::numeric_limits<std::int32_t>::min();
    std::int32_t min_y = min_x, max_y = max_x;
    std::int32_t min_z = min_x, max_z = max_x;
    for (const auto& [key, hits] : grid.cells) {
        min_x = std::min(min_x, key.rx);
        max_x = std::max(max_x, key.rx);
        min_y = std::min(min_y, key.ry);
        max_y = std::max(max_y, key.ry);
        min_z = std::min(min_z, key.layer);
        max_z = std::max(max_z, key.layer);
    }
    out.origin = {static_cast<double>(min_x), static_cast<double>(min_y), static_cast<double>(min_z)};
    out.dims = {static_cast<std::size_t>(max_x - min_x + 1), static_cast<std::size_t>(max_y - min_y + 1),
                static_cast<std::size_t>(max_z - min_z + 1)};
    for (const auto& [key, hits] : grid.cells)
        out.occupied.insert(CellIndex{key.rx - min_x, key.ry - min_y, key.layer - min_z});
    return out;
}

}  // namespace pbfrec
