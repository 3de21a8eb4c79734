#include "pbfrec/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "pbfrec/errors.hpp"

namespace pbfrec {

std::vector<std::pair<VoxelKey, std::uint32_t>> VoxelGrid::sorted_cells() const {
    std::vector<std::pair<VoxelKey, std::uint32_t>> out(cells.begin(), cells.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        const VoxelKey& ka = a.first;
        const VoxelKey& kb = b.first;
        if (ka.layer != kb.layer) return ka.layer < kb.layer;
        if (ka.rx != kb.rx) return ka.rx < kb.rx;
        return ka.ry < kb.ry;
    });
    return out;
}

VoxelGrid rasterize_layers(const BinaryLaserSignal& laser, std::span<const double> galvo_x,
                           std::span<const double> galvo_y, const LayerBoundaries& boundaries,
                           const RasterSpec& raster) {
    if (raster.raster_size_volts <= 0.0)
        throw ConfigError("raster size must be positive");
    if (galvo_x.size() != laser.size() || galvo_y.size() != laser.size())
        throw DataError("rasterize: channel lengths differ from laser signal");

    VoxelGrid grid;
    grid.raster = raster;
    grid.layer_count = static_cast<std::uint32_t>(boundaries.layer_count());
    const double cell = raster.raster_size_volts;

    for (std::size_t layer = 0; layer < boundaries.layers.size(); ++layer) {
        const LayerInterval& interval = boundaries.layers[layer];
        if (interval.end_index >= laser.size() || interval.start_index > interval.end_index)
            throw DataError("rasterize: layer interval outside trace range");
        for (std::size_t i = interval.start_index; i <= interval.end_index; ++i) {
            if (!laser.on(i)) continue;
            VoxelKey key;
            key.layer = static_cast<std::int32_t>(layer);
            key.rx = static_cast<std::int32_t>(std::floor(galvo_x[i] / cell));
            key.ry = static_cast<std::int32_t>(std::floor(galvo_y[i] / cell));
            ++grid.cells[key];
        }
    }
    return grid;
}

VoxelGrid differential_voxelization(std::span<const VoxelGrid> grids) {
    if (grids.empty())
        throw DataError("differential voxelization requires at least one grid");

    VoxelGrid out;
    out.raster = grids.front().raster;
    out.layer_count = grids.front().layer_count;
    for (const VoxelGrid& g : grids) {
        if (g.raster.raster_size_volts != out.raster.raster_size_volts)
            throw DataError("differential voxelization: grids have mismatched raster sizes");
        if (g.layer_count != out.layer_count)
            throw DataError("differential voxelization: grids have mismatched layer counts");
    }
    for (const VoxelGrid& g : grids)
        for (const auto& [key, hits] : g.cells)
            out.cells[key] += hits;
    return out;
}

void write_grid_csv(const VoxelGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open file for writing: " + path.string());
    out << "rx,ry,layer,hit\n";
    for (const auto& [key, hits] : grid.sorted_cells())
        out << key.rx << ',' << key.ry << ',' << key.layer << ',' << hits << "\n";
    if (!out)
        throw DataError("write failed: " + path.string());

    nlohmann::json meta;
    meta["raster_size_volts"] = grid.raster.raster_size_volts;
    meta["layer_count"] = grid.layer_count;
    std::filesystem::path meta_path = path;
    meta_path += ".meta.json";
    std::ofstream meta_out(meta_path);
    if (!meta_out)
        throw DataError("cannot open file for writing: " + meta_path.string());
    meta_out << meta.dump(2) << "\n";
}

VoxelGrid load_grid_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path.string());

    VoxelGrid grid;
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
        throw DataError(path.string() + ": empty grid file");
    auto columns = csv::split_fields(header);
    auto index_of = [&](std::string_view name) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (csv::trim(columns[i]) == name) return i;
        throw DataError(path.string() + ": schema error: missing column '" + std::string(name) + "'");
    };
    const std::size_t rxi = index_of("rx"), ryi = index_of("ry"), li = index_of("layer"),
                      hi = index_of("hit");

    std::int32_t max_layer = -1;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v = csv::trim(line);
        if (v.empty()) continue;
        auto fields = csv::split_fields(v);
        if (fields.size() != columns.size())
            throw DataError(path.string() + ": row " + std::to_string(line_no) + " has wrong field count");
        double rx = 0, ry = 0, layer = 0;
        std::uint64_t hits = 0;
        if (!csv::parse_double(fields[rxi], rx) || !csv::parse_double(fields[ryi], ry) ||
            !csv::parse_double(fields[li], layer) || !csv::parse_uint64(fields[hi], hits))
            throw DataError(path.string() + ": non-numeric value on row " + std::to_string(line_no));
        if (hits == 0)
            throw DataError(path.string() + ": zero hit count on row " + std::to_string(line_no));
        VoxelKey key{static_cast<std::int32_t>(layer), static_cast<std::int32_t>(rx),
                     static_cast<std::int32_t>(ry)};
        if (key.layer < 0)
            throw DataError(path.string() + ": negative layer on row " + std::to_string(line_no));
        grid.cells[key] += static_cast<std::uint32_t>(hits);
        max_layer = std::max(max_layer, key.layer);
    }

    std::filesystem::path meta_path = path;
    meta_path += ".meta.json";
    if (std::filesystem::exists(meta_path)) {
        std::ifstream meta_in(meta_path);
        nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, true, true);
        grid.raster.raster_size_volts = meta.at("raster_size_volts").get<double>();
        grid.layer_count = meta.at("layer_count").get<std::uint32_t>();
    } else {
        grid.layer_count = static_cast<std::uint32_t>(max_layer + 1);
    }
    return grid;
}

}  // namespace pbfrec
