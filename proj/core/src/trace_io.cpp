#include "pbfrec/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "csv_util.hpp"
#include "pbfrec/errors.hpp"

namespace pbfrec {

namespace {

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in)
        throw DataError("cannot open file: " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out)
        throw DataError("cannot open file for writing: " + path.string());
    return out;
}

}  // namespace

SignalTrace load_trace_csv(const std::filesystem::path& path, const TraceSchema& schema) {
    std::ifstream in = open_input(path);

    SignalTrace trace;
    trace.sample_rate_hz = schema.sample_rate_hz;

    std::string line;
    std::size_t line_no = 0;

    // Optional metadata comments before the header.
    std::string header;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v = csv::trim(line);
        if (v.empty()) continue;
        if (v.front() == '#') {
            constexpr std::string_view kRateKey = "sample_rate_hz=";
            std::size_t pos = v.find(kRateKey);
            if (pos != std::string_view::npos) {
                double rate = 0.0;
                if (!csv::parse_double(v.substr(pos + kRateKey.size()), rate) || rate <= 0.0)
                    throw DataError(path.string() + ": invalid sample_rate_hz metadata on line " +
                                    std::to_string(line_no));
                trace.sample_rate_hz = rate;
            }
            continue;
        }
        header = std::string(v);
        break;
    }
    if (header.empty())
        throw DataError(path.string() + ": empty trace file");

    auto columns = csv::split_fields(header);
    auto find_column = [&](const std::string& name) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (csv::trim(columns[i]) == name) return i;
        throw DataError(path.string() + ": schema error: missing column '" + name + "'");
    };
    const std::size_t laser_idx = find_column(schema.laser_column);
    const std::size_t gx_idx = find_column(schema.galvo_x_column);
    const std::size_t gy_idx = find_column(schema.galvo_y_column);

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v = csv::trim(line);
        if (v.empty()) continue;
        auto fields = csv::split_fields(v);
        if (fields.size() != columns.size())
            throw DataError(path.string() + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(columns.size()));
        double laser = 0.0, gx = 0.0, gy = 0.0;
        if (!csv::parse_double(fields[laser_idx], laser) || !csv::parse_double(fields[gx_idx], gx) ||
            !csv::parse_double(fields[gy_idx], gy))
            throw DataError(path.string() + ": non-numeric or non-finite value on row " +
                            std::to_string(line_no));
        trace.laser.push_back(laser);
        trace.galvo_x.push_back(gx);
        trace.galvo_y.push_back(gy);
    }

    if (trace.laser.empty())
        throw DataError(path.string() + ": trace contains no samples");
    if (trace.sample_rate_hz <= 0.0)
        throw ConfigError("sample rate must be positive");
    return trace;
}

void write_trace_csv(const SignalTrace& trace, const std::filesystem::path& path,
                     const TraceSchema& schema) {
    if (trace.galvo_x.size() != trace.laser.size() || trace.galvo_y.size() != trace.laser.size())
        throw DataError("trace channels have mismatched lengths");
    std::ofstream out = open_output(path);
    out << "# sample_rate_hz=" << csv::format_double(trace.sample_rate_hz) << "\n";
    out << schema.laser_column << ',' << schema.galvo_x_column << ',' << schema.galvo_y_column << "\n";
    for (std::size_t i = 0; i < trace.laser.size(); ++i) {
        out << csv::format_double(trace.laser[i]) << ',' << csv::format_double(trace.galvo_x[i]) << ','
            << csv::format_double(trace.galvo_y[i]) << "\n";
    }
    if (!out)
        throw DataError("write failed: " + path.string());
}

void write_point_cloud_csv(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "x,y,z,weight\n";
    for (const PointXYZW& p : cloud.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw DataError("point cloud contains non-finite coordinates");
        if (p.weight == 0)
            throw DataError("point cloud contains zero-weight point");
        out << csv::format_double(p.x) << ',' << csv::format_double(p.y) << ','
            << csv::format_double(p.z) << ',' << p.weight << "\n";
    }
    if (!out)
        throw DataError("write failed: " + path.string());
}

PointCloud load_point_cloud_csv(const std::filesystem::path& path) {
    std::ifstream in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    std::string header;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v = csv::trim(line);
        if (v.empty() || v.front() == '#') continue;
        header = std::string(v);
        break;
    }
    if (header.empty())
        throw DataError(path.string() + ": empty point cloud file");
    auto columns = csv::split_fields(header);
    auto index_of = [&](std::string_view name) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (csv::trim(columns[i]) == name) return i;
        throw DataError(path.string() + ": schema error: missing column '" + std::string(name) + "'");
    };
    const std::size_t xi = index_of("x"), yi = index_of("y"), zi = index_of("z"),
                      wi = index_of("weight");

    PointCloud cloud;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v = csv::trim(line);
        if (v.empty()) continue;
        auto fields = csv::split_fields(v);
        if (fields.size() != columns.size())
            throw DataError(path.string() + ": row " + std::to_string(line_no) + " has wrong field count");
        PointXYZW p;
        std::uint64_t w = 0;
        if (!csv::parse_double(fields[xi], p.x) || !csv::parse_double(fields[yi], p.y) ||
            !csv::parse_double(fields[zi], p.z) || !csv::parse_uint64(fields[wi], w))
            throw DataError(path.string() + ": non-numeric value on row " + std::to_string(line_no));
        if (w == 0)
            throw DataError(path.string() + ": zero weight on row " + std::to_string(line_no));
        p.weight = w;
        cloud.points.push_back(p);
    }
    return cloud;
}

namespace {

float read_le_float(const unsigned char* p) {
    float f;
    std::memcpy(&f, p, sizeof(f));
    return f;
}

std::uint32_t read_le_u32(const unsigned char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, sizeof(v));
    return v;
}

TriangleMesh parse_binary_stl(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
    if (bytes.size() < 84)
        throw DataError(path.string() + ": malformed binary STL: shorter than header");
    const std::uint32_t count = read_le_u32(bytes.data() + 80);
    const std::size_t expected = 84 + static_cast<std::size_t>(count) * 50;
    if (bytes.size() < expected)
        throw DataError(path.string() + ": malformed binary STL: declares " + std::to_string(count) +
                        " facets but file holds only " +
                        std::to_string((bytes.size() - 84) / 50));
    TriangleMesh mesh;
    mesh.triangles.reserve(count);
    const unsigned char* p = bytes.data() + 84;
    for (std::uint32_t i = 0; i < count; ++i, p += 50) {
        // 12 bytes facet normal (ignored), then 3 vertices.
        Triangle t;
        Vec3* verts[3] = {&t.v0, &t.v1, &t.v2};
        for (int vi = 0; vi < 3; ++vi)
            for (int c = 0; c < 3; ++c)
                (*verts[vi])[c] = static_cast<double>(read_le_float(p + 12 + vi * 12 + c * 4));
        for (const Vec3* vptr : verts)
            for (double c : *vptr)
                if (!std::isfinite(c))
                    throw DataError(path.string() + ": non-finite vertex in facet " + std::to_string(i));
        mesh.triangles.push_back(t);
    }
    if (mesh.triangles.empty())
        throw DataError(path.string() + ": STL contains no triangles");
    return mesh;
}

TriangleMesh parse_ascii_stl(const std::string& text, const std::filesystem::path& path) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    TriangleMesh mesh;

    auto fail = [&](const std::string& what) -> void {
        throw DataError(path.string() + ": STL parse error on line " + std::to_string(line_no) + ": " + what);
    };

    Triangle current;
    int vertex_count = 0;
    bool in_facet = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "solid" || tok == "endsolid" || tok == "outer" || tok == "endloop") continue;
        if (tok == "facet") {
            if (in_facet) fail("nested facet");
            in_facet = true;
            vertex_count = 0;
            continue;
        }
        if (tok == "vertex") {
            if (!in_facet || vertex_count >= 3) fail("vertex outside facet");
            Vec3 v{};
            if (!(ls >> v[0] >> v[1] >> v[2])) fail("expected three vertex coordinates");
            if (!std::isfinite(v[0]) || !std::isfinite(v[1]) || !std::isfinite(v[2]))
                fail("non-finite vertex");
            (vertex_count == 0 ? current.v0 : vertex_count == 1 ? current.v1 : current.v2) = v;
            ++vertex_count;
            continue;
        }
        if (tok == "endfacet") {
            if (!in_facet || vertex_count != 3) fail("facet with fewer than three vertices");
            mesh.triangles.push_back(current);
            in_facet = false;
            continue;
        }
        fail("unexpected token '" + tok + "'");
    }
    if (in_facet) fail("unterminated facet");
    if (mesh.triangles.empty())
        throw DataError(path.string() + ": STL contains no triangles");
    return mesh;
}

}  // namespace

TriangleMesh load_stl(const std::filesystem::path& path) {
    std::ifstream in = open_input(path, std::ios::in | std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.empty())
        throw DataError(path.string() + ": empty STL file");

    // Binary files carry the exact length implied by the facet count; ASCII
    // files begin with "solid" and contain a "facet" keyword.
    if (bytes.size() >= 84) {
        const std::uint32_t count = read_le_u32(bytes.data() + 80);
        if (bytes.size() == 84 + static_cast<std::size_t>(count) * 50 && count > 0)
            return parse_binary_stl(bytes, path);
    }
    std::string head(reinterpret_cast<const char*>(bytes.data()),
                     std::min<std::size_t>(bytes.size(), 512));
    std::size_t first = head.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && head.compare(first, 5, "solid") == 0 &&
        head.find("facet") != std::string::npos) {
        return parse_ascii_stl(std::string(bytes.begin(), bytes.end()), path);
    }
    return parse_binary_stl(bytes, path);
}

}  // namespace pbfrec
