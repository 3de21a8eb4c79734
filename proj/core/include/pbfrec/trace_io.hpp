#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pbfrec {

/// Multi-channel, uniformly sampled power side-channel recording.
/// Only the three channels relevant for reconstruction are kept:
/// laser supply voltage and the two galvanometer position voltages.
struct SignalTrace {
    double sample_rate_hz = 0.0;
    std::vector<double> laser;
    std::vector<double> galvo_x;
    std::vector<double> galvo_y;

    std::size_t size() const { return laser.size(); }
};

/// Column-name mapping for trace CSV ingestion. Different DAQ exports name
/// their columns differently; the defaults match the files this toolkit
/// writes itself.
struct TraceSchema {
    std::string laser_column = "laser";
    std::string galvo_x_column = "galvo_x";
    std::string galvo_y_column = "galvo_y";
    double sample_rate_hz = 20000.0;
};

struct PointXYZW {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::uint64_t weight = 1;
};

struct PointCloud {
    std::vector<PointXYZW> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

using Vec3 = std::array<double, 3>;

struct Triangle {
    Vec3 v0{}, v1{}, v2{};
};

struct TriangleMesh {
    std::vector<Triangle> triangles;
};

/// Loads a trace from CSV. The file must have a header row naming the three
/// schema columns; extra columns (e.g. a `time` column) are ignored. An
/// optional leading `# sample_rate_hz=<value>` comment overrides the schema
/// rate. Non-finite samples are rejected rather than repaired.
SignalTrace load_trace_csv(const std::filesystem::path& path, const TraceSchema& schema = {});

/// Writes a trace in the format load_trace_csv reads back bit-exactly.
void write_trace_csv(const SignalTrace& trace, const std::filesystem::path& path,
                     const TraceSchema& schema = {});

/// Point cloud CSV: `x,y,z,weight` header, one row per point.
void write_point_cloud_csv(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud load_point_cloud_csv(const std::filesystem::path& path);

/// Loads a binary or ASCII STL file; the format is autodetected.
TriangleMesh load_stl(const std::filesystem::path& path);

}  // namespace pbfrec
