// Command-line frontend for the PBF side-channel reconstruction toolkit.
// Subcommands mirror the pipeline stages so each can be re-run in isolation
// on persisted artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pbfrec/calibration.hpp"
#include "pbfrec/errors.hpp"
#include "pbfrec/evaluation.hpp"
#include "pbfrec/geometry.hpp"
#include "pbfrec/layer_segmentation.hpp"
#include "pbfrec/pipeline.hpp"
#include "pbfrec/rasterizer.hpp"
#include "pbfrec/signal_prep.hpp"
#include "pbfrec/synth_sim.hpp"
#include "pbfrec/trace_io.hpp"
#include "pbfrec/voxel_ops.hpp"

namespace fs = std::filesystem;
using namespace pbfrec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;

struct GlobalOptions {
    std::string config_path;
    std::vector<std::string> overrides;
};

PipelineConfig resolve_config(const GlobalOptions& opts) {
    PipelineConfig config = opts.config_path.empty() ? PipelineConfig::defaults(PipelineMode::Simple)
                                                     : load_config_file(opts.config_path);
    for (const std::string& kv : opts.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return config;
}

TraceSchema schema_of(const PipelineConfig& c) {
    return TraceSchema{c.laser_column, c.galvo_x_column, c.galvo_y_column, c.sample_rate_hz};
}

struct PreparedTrace {
    BinaryLaserSignal laser;
    std::vector<double> galvo_x;
    std::vector<double> galvo_y;
    double sample_rate_hz = 0.0;
};

// Raw traces get the full preprocessing; a file whose laser channel is
// already 0/1 is a persisted preprocess artifact and is taken as-is.
PreparedTrace prepare_trace(const std::string& path, const PipelineConfig& config) {
    const SignalTrace trace = load_trace_csv(path, schema_of(config));
    bool normalized = true;
    for (double v : trace.laser) {
        if (v != 0.0 && v != 1.0) {
            normalized = false;
            break;
        }
    }
    PreparedTrace p;
    p.sample_rate_hz = trace.sample_rate_hz;
    if (normalized) {
        p.laser.states.reserve(trace.laser.size());
        for (double v : trace.laser)
            p.laser.states.push_back(v >= 0.5 ? LaserState::On : LaserState::Off);
        p.galvo_x = trace.galvo_x;
        p.galvo_y = trace.galvo_y;
    } else {
        p.laser = normalize_laser(
            trace.laser, HysteresisThresholds{config.laser_threshold_on, config.laser_threshold_off});
        const FilterSpec lpf{config.filter_order, config.filter_cutoff_hz, trace.sample_rate_hz};
        p.galvo_x = lowpass_filter(trace.galvo_x, lpf);
        p.galvo_y = lowpass_filter(trace.galvo_y, lpf);
    }
    return p;
}

void write_histogram_csv(const std::map<std::size_t, std::size_t>& histogram, const fs::path& path,
                         const char* key_name) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open file for writing: " + path.string());
    out << key_name << ",count\n";
    for (const auto& [k, v] : histogram) out << k << ',' << v << "\n";
}

int cmd_simulate(const PipelineConfig& config, const std::string& model_spec,
                 const std::string& out_trace, const std::string& out_truth, std::uint64_t seed) {
    const VoxelGrid model = load_model_spec(model_spec);
    const SimResult sim = simulate_print_trace(model, config.sim_config(), seed);
    write_trace_csv(sim.trace, out_trace, schema_of(config));
    if (!out_truth.empty()) write_grid_csv(sim.ground_truth, out_truth);
    std::printf("simulated %zu samples over %u layers (%zu solid cells)\n", sim.trace.size(),
                sim.ground_truth.layer_count, sim.ground_truth.occupied_count());
    return kExitOk;
}

int cmd_preprocess(const PipelineConfig& config, const std::string& trace_path,
                   const std::string& out_path) {
    const SignalTrace raw = load_trace_csv(trace_path, schema_of(config));
    const BinaryLaserSignal laser = normalize_laser(
        raw.laser, HysteresisThresholds{config.laser_threshold_on, config.laser_threshold_off});
    const FilterSpec lpf{config.filter_order, config.filter_cutoff_hz, raw.sample_rate_hz};
    SignalTrace out;
    out.sample_rate_hz = raw.sample_rate_hz;
    out.laser.reserve(laser.size());
    for (std::size_t i = 0; i < laser.size(); ++i) out.laser.push_back(laser.on(i) ? 1.0 : 0.0);
    out.galvo_x = lowpass_filter(raw.galvo_x, lpf);
    out.galvo_y = lowpass_filter(raw.galvo_y, lpf);
    write_trace_csv(out, out_path, schema_of(config));
    std::printf("preprocessed %zu samples -> %s\n", out.size(), out_path.c_str());
    return kExitOk;
}

int cmd_segment(const PipelineConfig& config, const std::string& trace_path,
                const std::string& out_path) {
    const PreparedTrace p = prepare_trace(trace_path, config);
    const LayerBoundaries boundaries =
        segment_layers(p.laser, SegmentationConfig{config.off_run_threshold});
    write_layer_stats_csv(boundaries, p.sample_rate_hz, out_path);
    std::printf("detected %zu layers -> %s\n", boundaries.layer_count(), out_path.c_str());
    return kExitOk;
}

int cmd_calibrate(const PipelineConfig& config, const std::string& trace_path,
                  const std::string& histogram_path) {
    const PreparedTrace p = prepare_trace(trace_path, config);
    const LayerBoundaries boundaries =
        segment_layers(p.laser, SegmentationConfig{config.off_run_threshold});
    if (boundaries.layers.empty())
        throw DataError("no layers detected; cannot calibrate");
    const std::size_t layer_index = config.calibration_layer >= 0
                                        ? static_cast<std::size_t>(config.calibration_layer)
                                        : (boundaries.layer_count() - 1) / 2;
    if (layer_index >= boundaries.layer_count())
        throw ConfigError("calibration.layer outside detected layer range");

    const LayerInterval layer = boundaries.layers[layer_index];
    const FilterSpec calibration_lpf{config.filter_order, config.calibration_cutoff_hz,
                                     p.sample_rate_hz};
    const std::span<const double> gx(p.galvo_x.data() + layer.start_index, layer.duration_samples());
    const std::span<const double> gy(p.galvo_y.data() + layer.start_index, layer.duration_samples());
    const double delta_x = max_consecutive_peak_delta(gx, calibration_lpf);
    const double delta_y = max_consecutive_peak_delta(gy, calibration_lpf);
    const SwingMeasurement swing = make_swing(delta_x, delta_y);

    std::printf("calibration layer %zu (1-based): max deltas X %.6f V, Y %.6f V, combined %.6f V\n",
                layer_index + 1, swing.max_delta_x, swing.max_delta_y, swing.combined);
    std::printf("derived cubical raster: %.6f V over %zu layers (operational: %.6f V)\n",
                derive_raster_size(swing, boundaries.layer_count()), boundaries.layer_count(),
                config.raster_size_volts);

    if (!histogram_path.empty()) {
        LayerBoundaries single;
        single.layers.push_back(layer);
        const VoxelGrid layer_grid = rasterize_layers(p.laser, p.galvo_x, p.galvo_y, single,
                                                      RasterSpec{config.raster_size_volts});
        std::map<std::size_t, std::size_t> hist;
        for (const auto& [hits, count] : hit_count_histogram(layer_grid)) hist[hits] = count;
        write_histogram_csv(hist, histogram_path, "hit_count");
        std::printf("hit-count histogram -> %s\n", histogram_path.c_str());
    }
    return kExitOk;
}

int cmd_rasterize(const PipelineConfig& config, const std::string& trace_path,
                  const std::string& out_path) {
    const PreparedTrace p = prepare_trace(trace_path, config);
    const LayerBoundaries boundaries =
        segment_layers(p.laser, SegmentationConfig{config.off_run_threshold});
    const VoxelGrid grid = rasterize_layers(p.laser, p.galvo_x, p.galvo_y, boundaries,
                                            RasterSpec{config.raster_size_volts});
    write_grid_csv(grid, out_path);
    std::printf("rasterized %zu occupied voxels over %u layers -> %s\n", grid.occupied_count(),
                grid.layer_count, out_path.c_str());
    return kExitOk;
}

int cmd_diff(const std::vector<std::string>& grid_paths, const std::string& out_path) {
    std::vector<VoxelGrid> grids;
    grids.reserve(grid_paths.size());
    for (const std::string& path : grid_paths) grids.push_back(load_grid_csv(path));
    const VoxelGrid merged = differential_voxelization(grids);
    write_grid_csv(merged, out_path);
    std::printf("aggregated %zu grids -> %zu occupied voxels -> %s\n", grids.size(),
                merged.occupied_count(), out_path.c_str());
    return kExitOk;
}

int cmd_prune(const PipelineConfig& config, const std::string& grid_path,
              const std::string& out_path) {
    const VoxelGrid grid = load_grid_csv(grid_path);
    VoxelGrid pruned = prune_by_hit_count(grid, config.prune_min_hit);
    pruned = prune_by_neighbors(pruned, config.prune_range, config.prune_min_neighbors);
    write_grid_csv(pruned, out_path);
    std::printf("pruned %zu -> %zu voxels (min_hit %u, range %d, min_neighbors %u) -> %s\n",
                grid.occupied_count(), pruned.occupied_count(), config.prune_min_hit,
                config.prune_range, config.prune_min_neighbors, out_path.c_str());
    return kExitOk;
}

int cmd_stats(const PipelineConfig& config, const std::string& grid_path, const std::string& out_dir) {
    const VoxelGrid grid = load_grid_csv(grid_path);
    fs::create_directories(out_dir);

    const auto gaps = gap_stretch_histogram(grid);
    write_histogram_csv(gaps, fs::path(out_dir) / "gap_stretches.csv", "stretch_length");
    const auto neighbors = neighbor_count_histogram(grid, config.prune_range);
    write_histogram_csv(neighbors, fs::path(out_dir) / "neighbor_counts.csv", "neighbor_count");
    std::map<std::size_t, std::size_t> hits;
    for (const auto& [h, count] : hit_count_histogram(grid)) hits[h] = count;
    write_histogram_csv(hits, fs::path(out_dir) / "hit_counts.csv", "hit_count");

    std::size_t total_stretches = 0, short_stretches = 0, max_stretch = 0;
    for (const auto& [len, count] : gaps) {
        total_stretches += count;
        if (len < 5) short_stretches += count;
        max_stretch = std::max(max_stretch, len);
    }
    std::size_t below = 0, total_voxels = 0;
    for (const auto& [n, count] : neighbors) {
        total_voxels += count;
        if (n < config.prune_min_neighbors) below += count;
    }
    std::printf("voxels: %zu\n", grid.occupied_count());
    if (total_stretches > 0)
        std::printf("gap stretches: %zu (%.2f%% shorter than 5, longest %zu)\n", total_stretches,
                    100.0 * static_cast<double>(short_stretches) / static_cast<double>(total_stretches),
                    max_stretch);
    if (total_voxels > 0)
        std::printf("voxels with < %u neighbors at range %d: %.2f%%\n", config.prune_min_neighbors,
                    config.prune_range,
                    100.0 * static_cast<double>(below) / static_cast<double>(total_voxels));
    std::printf("histograms -> %s\n", out_dir.c_str());
    return kExitOk;
}

int cmd_fill(const PipelineConfig& config, const std::string& grid_path, const std::string& out_path) {
    const VoxelGrid grid = load_grid_csv(grid_path);
    if (config.fill_strategy == FillStrategy::None) {
        write_grid_csv(grid, out_path);
        std::printf("fill.strategy = none; grid copied unchanged -> %s\n", out_path.c_str());
        return kExitOk;
    }
    ColumnProjection projection;
    if (config.fill_strategy == FillStrategy::GearUp) {
        projection = project_columns(grid, ProjectionDirection::Up, config.fill_projection_min_hit);
    } else {
        projection = project_columns(grid, ProjectionDirection::Bidirectional,
                                     config.fill_projection_min_hit,
                                     config.fill_middle_layer >= 0
                                         ? static_cast<std::int32_t>(config.fill_middle_layer)
                                         : -1);
    }
    const VoxelGrid filled = fill_gaps(grid, projection);
    write_grid_csv(filled, out_path);
    std::printf("filled %zu -> %zu voxels -> %s\n", grid.occupied_count(), filled.occupied_count(),
                out_path.c_str());
    return kExitOk;
}

int cmd_fit_distortion(const PipelineConfig& config, const std::string& cloud_path,
                       const std::string& z_cloud_path, const std::string& out_path) {
    const PointCloud cloud = load_point_cloud_csv(cloud_path);
    std::vector<Point2> xy;
    xy.reserve(cloud.size());
    for (const PointXYZW& p : cloud.points) xy.push_back({p.x, p.y});
    const EllipseFit fit = fit_ellipse_pca(xy);
    DistortionModel model = derive_xy_distortion(fit, config.distortion_reference_radius);

    std::printf("ellipse: center (%.4f, %.4f), axes %.4f / %.4f, orientation %.4f rad\n",
                fit.center_x, fit.center_y, fit.major_axis_length, fit.minor_axis_length,
                fit.orientation_rad);
    std::printf("distortion matrix: [[%.4f, %.4f], [%.4f, %.4f]] (reference radius %.1f)\n",
                model.xy_matrix[0], model.xy_matrix[1], model.xy_matrix[2], model.xy_matrix[3],
                model.reference_radius);

    if (!z_cloud_path.empty()) {
        const PointCloud z_cloud = load_point_cloud_csv(z_cloud_path);
        std::vector<Point2> z_xy;
        z_xy.reserve(z_cloud.size());
        for (const PointXYZW& p : z_cloud.points) z_xy.push_back({p.x, p.y});
        const double theta = fit_axis_line(z_xy);
        model.z_factor = derive_z_factor(z_cloud, theta);
        std::printf("axis inclination %.4f rad, z elongation factor %.4f\n", theta, model.z_factor);
    }
    save_distortion_model(model, out_path);
    std::printf("distortion model -> %s\n", out_path.c_str());
    return kExitOk;
}

int cmd_correct(const std::string& cloud_path, const std::string& model_path,
                const std::string& out_path) {
    const PointCloud cloud = load_point_cloud_csv(cloud_path);
    const DistortionModel model = load_distortion_model(model_path);
    PointCloud corrected = apply_xy_correction(cloud, model);
    if (model.z_factor != 1.0) corrected = apply_z_correction(corrected, model.z_factor);
    write_point_cloud_csv(corrected, out_path);
    std::printf("corrected %zu points -> %s\n", corrected.size(), out_path.c_str());
    return kExitOk;
}

int cmd_proportion(const std::string& cloud_path, double ratio, const std::string& kind,
                   const std::string& out_path) {
    RatioKind ratio_kind;
    if (kind == "length_over_diameter")
        ratio_kind = RatioKind::LengthOverDiameter;
    else if (kind == "diameter_over_height")
        ratio_kind = RatioKind::DiameterOverHeight;
    else
        throw ConfigError("--kind expects length_over_diameter|diameter_over_height");
    const PointCloud cloud = load_point_cloud_csv(cloud_path);
    const PointCloud corrected = proportion_correction(cloud, ratio, ratio_kind);
    write_point_cloud_csv(corrected, out_path);
    std::printf("proportion-corrected to %s = %.4f -> %s\n", kind.c_str(),
                measure_ratio(corrected, ratio_kind), out_path.c_str());
    return kExitOk;
}

int cmd_evaluate(const std::string& stl_path, const std::string& cloud_path, double grid_size,
                 const std::string& scale_rule, const std::string& out_dir) {
    const TriangleMesh mesh = load_stl(stl_path);
    VoxelizeStats stats;
    const OccupancyGrid reference = voxelize_mesh(mesh, grid_size, &stats);
    if (!stats.watertight)
        std::fprintf(stderr,
                     "WARNING: mesh is not watertight; falling back to surface-only voxelization\n");
    if (stats.degenerate_triangles > 0)
        std::fprintf(stderr, "WARNING: skipped %zu degenerate triangles\n",
                     stats.degenerate_triangles);

    AlignSpec align;
    if (scale_rule == "gear_base_diameter") {
        align.rule = ScaleRule::GearBaseDiameter;
    } else if (scale_rule == "astm_mean_axis") {
        align.rule = ScaleRule::AstmMeanAxis;
    } else {
        double sx = 0, sy = 0, sz = 0;
        if (std::sscanf(scale_rule.c_str(), "%lf,%lf,%lf", &sx, &sy, &sz) != 3)
            throw ConfigError(
                "--scale-rule expects gear_base_diameter|astm_mean_axis|<sx,sy,sz>");
        align.rule = ScaleRule::Explicit;
        align.explicit_scale = {sx, sy, sz};
    }

    const PointCloud cloud = load_point_cloud_csv(cloud_path);
    const PointCloud aligned = align_and_scale(cloud, reference, align);
    std::size_t out_of_bounds = 0;
    const OccupancyGrid reconstructed = revoxelize_cloud(aligned, reference, &out_of_bounds);

    ComparisonClouds clouds;
    const EvaluationReport report = compare_voxels(reference, reconstructed, &clouds);

    fs::create_directories(out_dir);
    write_point_cloud_csv(clouds.true_pos, fs::path(out_dir) / "true_positives.csv");
    write_point_cloud_csv(clouds.false_pos, fs::path(out_dir) / "false_positives.csv");
    write_point_cloud_csv(clouds.false_neg, fs::path(out_dir) / "false_negatives.csv");

    nlohmann::json doc;
    doc["reference_voxels"] = report.reference_count;
    doc["true_positives"] = report.true_pos;
    doc["false_positives"] = report.false_pos;
    doc["false_negatives"] = report.false_neg;
    doc["true_positive_pct"] = report.true_pos_pct;
    doc["false_positive_pct"] = report.false_pos_pct;
    doc["false_negative_pct"] = report.false_neg_pct;
    doc["out_of_bounds_points"] = out_of_bounds;
    doc["watertight"] = stats.watertight;
    std::ofstream report_out(fs::path(out_dir) / "report.json");
    report_out << doc.dump(2) << "\n";
    std::cout << doc.dump(2) << std::endl;
    return kExitOk;
}

int cmd_run(const PipelineConfig& config) {
    const PipelineResult result = run_pipeline(config);
    std::printf("pipeline complete: %zu points, %zu layers\n", result.cloud.size(),
                result.layer_count);
    for (const auto& [stage, path] : result.artifacts)
        std::printf("  %-16s %s\n", stage.c_str(), path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reconstructs 3D-printed geometry from PBF power side-channel traces"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "Config file (key=value or JSON)");
    app.add_option("--set", global.overrides, "Override a config key (key=value, repeatable)");

    std::string model_spec = "gear(8)", out_trace = "trace.csv", out_truth, trace_path, out_path;
    std::uint64_t seed = 1;
    bool seed_given = false;
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic print trace");
    sim->add_option("--model", model_spec, "Shape spec or point-cloud CSV");
    sim->add_option("--out-trace", out_trace, "Output trace CSV");
    sim->add_option("--out-truth", out_truth, "Optional ground-truth grid CSV");
    sim->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) { seed_given = true; });

    auto* preprocess = app.add_subcommand("preprocess", "Normalize laser, low-pass galvos");
    preprocess->add_option("--trace", trace_path, "Raw trace CSV")->required();
    preprocess->add_option("--out", out_path, "Preprocessed trace CSV")->required();

    auto* segment = app.add_subcommand("segment", "Detect layer boundaries");
    segment->add_option("--trace", trace_path, "Trace CSV (raw or preprocessed)")->required();
    segment->add_option("--out", out_path, "Layer statistics CSV")->required();

    std::string histogram_path;
    auto* calibrate = app.add_subcommand("calibrate", "Measure galvo swing and derive raster size");
    calibrate->add_option("--trace", trace_path, "Trace CSV (raw or preprocessed)")->required();
    calibrate->add_option("--out-histogram", histogram_path, "Hit-count histogram CSV");

    auto* rasterize = app.add_subcommand("rasterize", "Rasterize a trace into a voxel grid");
    rasterize->add_option("--trace", trace_path, "Trace CSV (raw or preprocessed)")->required();
    rasterize->add_option("--out", out_path, "Grid CSV")->required();

    std::vector<std::string> grid_paths;
    auto* diff = app.add_subcommand("diff", "Aggregate hit counters of multiple grids");
    diff->add_option("--grids", grid_paths, "Grid CSVs")->required()->expected(-1);
    diff->add_option("--out", out_path, "Merged grid CSV")->required();

    std::string grid_path;
    auto* prune = app.add_subcommand("prune", "Prune voxels by hit count and neighborhood");
    prune->add_option("--grid", grid_path, "Grid CSV")->required();
    prune->add_option("--out", out_path, "Pruned grid CSV")->required();

    std::string stats_dir = "stats";
    auto* stats = app.add_subcommand("stats", "Gap, neighbor and hit-count diagnostics");
    stats->add_option("--grid", grid_path, "Grid CSV")->required();
    stats->add_option("--out-dir", stats_dir, "Histogram output directory");

    auto* fill = app.add_subcommand("fill", "Fill infill gaps via column projection");
    fill->add_option("--grid", grid_path, "Grid CSV")->required();
    fill->add_option("--out", out_path, "Filled grid CSV")->required();

    std::string cloud_path, z_cloud_path, model_path;
    auto* fit = app.add_subcommand("fit-distortion", "Fit the XY distortion (and Z factor) model");
    fit->add_option("--cloud", cloud_path, "Point cloud CSV for the ellipse fit")->required();
    fit->add_option("--z-cloud", z_cloud_path, "Point cloud CSV for the Z elongation fit");
    fit->add_option("--out", out_path, "Distortion model JSON")->required();

    auto* correct = app.add_subcommand("correct", "Apply XY and Z distortion corrections");
    correct->add_option("--cloud", cloud_path, "Point cloud CSV")->required();
    correct->add_option("--model", model_path, "Distortion model JSON")->required();
    correct->add_option("--out", out_path, "Corrected cloud CSV")->required();

    double ratio = 1.0;
    std::string ratio_kind = "length_over_diameter";
    auto* proportion = app.add_subcommand("proportion", "Rescale the cloud to a target proportion");
    proportion->add_option("--cloud", cloud_path, "Point cloud CSV")->required();
    proportion->add_option("--ratio", ratio, "Target ratio")->required();
    proportion->add_option("--kind", ratio_kind, "length_over_diameter|diameter_over_height");
    proportion->add_option("--out", out_path, "Corrected cloud CSV")->required();

    std::string stl_path, scale_rule = "astm_mean_axis", eval_dir = "evaluation";
    double grid_size = 0.25;
    auto* evaluate = app.add_subcommand("evaluate", "Volumetric TP/FP/FN against an STL reference");
    evaluate->add_option("--stl", stl_path, "Reference STL")->required();
    evaluate->add_option("--cloud", cloud_path, "Reconstructed point cloud CSV")->required();
    evaluate->add_option("--grid", grid_size, "Voxelization cell size");
    evaluate->add_option("--scale-rule", scale_rule,
                         "gear_base_diameter|astm_mean_axis|<sx,sy,sz>");
    evaluate->add_option("--out-dir", eval_dir, "Report and classification cloud directory");

    auto* run = app.add_subcommand("run", "Run the full reconstruction pipeline");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        const PipelineConfig config = resolve_config(global);
        if (*sim) return cmd_simulate(config, model_spec, out_trace, out_truth,
                                      seed_given ? seed : config.sim_seed);
        if (*preprocess) return cmd_preprocess(config, trace_path, out_path);
        if (*segment) return cmd_segment(config, trace_path, out_path);
        if (*calibrate) return cmd_calibrate(config, trace_path, histogram_path);
        if (*rasterize) return cmd_rasterize(config, trace_path, out_path);
        if (*diff) return cmd_diff(grid_paths, out_path);
        if (*prune) return cmd_prune(config, grid_path, out_path);
        if (*stats) return cmd_stats(config, grid_path, stats_dir);
        if (*fill) return cmd_fill(config, grid_path, out_path);
        if (*fit) return cmd_fit_distortion(config, cloud_path, z_cloud_path, out_path);
        if (*correct) return cmd_correct(cloud_path, model_path, out_path);
        if (*proportion) return cmd_proportion(cloud_path, ratio, ratio_kind, out_path);
        if (*evaluate) return cmd_evaluate(stl_path, cloud_path, grid_size, scale_rule, eval_dir);
        if (*run) return cmd_run(config);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitDataError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDataError;
    }
    return kExitOk;
}
