#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pbfrec/calibration.hpp"
#include "pbfrec/geometry.hpp"
#include "pbfrec/layer_segmentation.hpp"
#include "pbfrec/rasterizer.hpp"
#include "pbfrec/signal_prep.hpp"
#include "pbfrec/synth_sim.hpp"
#include "pbfrec/trace_io.hpp"
#include "pbfrec/voxel_ops.hpp"

namespace pbfrec {

enum class PipelineMode { Simple, Differential };
enum class FillStrategy { None, GearUp, AstmBidirectional };
enum class DistortionFit { None, Inline };
enum class ProportionApply { None, Astm, Gear };

/// Every stage parameter of the reconstruction pipeline. Two default
/// profiles exist: Simple (single trace) uses pruning 1/5/33, Differential
/// (multiple traces) uses 3/4/22.
struct PipelineConfig {
    PipelineMode mode = PipelineMode::Simple;

    std::vector<std::string> input_traces;
    double sample_rate_hz = 20000.0;
    std::string laser_column = "laser";
    std::string galvo_x_column = "galvo_x";
    std::string galvo_y_column = "galvo_y";
    std::string output_dir = "out";

    double laser_threshold_on = 2.2;
    double laser_threshold_off = 1.1;

    int filter_order = 4;
    double filter_cutoff_hz = 6000.0;

    std::size_t off_run_threshold = 1000;

    double calibration_cutoff_hz = 1000.0;
    std::int64_t calibration_layer = -1;  // -1: middle layer

    double raster_size_volts = 0.0025;

    std::uint32_t prune_min_hit = 1;
    std::int32_t prune_range = 5;
    std::uint32_t prune_min_neighbors = 33;

    FillStrategy fill_strategy = FillStrategy::None;
    std::uint32_t fill_projection_min_hit = 20;
    std::int64_t fill_middle_layer = -1;  // -1: (layer_count - 1) / 2

    std::string distortion_model_path;
    DistortionFit distortion_fit = DistortionFit::None;
    double distortion_reference_radius = 100.0;

    ProportionApply proportion_apply = ProportionApply::None;
    double proportion_astm_length_over_diameter = 6.7222;
    double proportion_gear_diameter_over_height = 3.8629;

    double evaluation_grid = 0.25;

    // Simulator defaults for the `simulate` subcommand.
    double sim_raster_size_volts = 0.1;
    std::uint32_t sim_samples_per_cell = 8;
    std::size_t sim_layer_gap_samples = 2000;
    double sim_noise_sigma_volts = 0.0;
    double sim_laser_on_volts = 2.5;
    double sim_laser_off_volts = 0.5;
    double sim_spike_rate = 0.0;
    std::uint32_t sim_timing_jitter_samples = 0;
    std::string sim_seesaw_axis = "x";
    double sim_z_stretch = 0.0;  // 0: disabled
    std::uint64_t sim_seed = 1;

    static PipelineConfig defaults(PipelineMode mode);
    SimConfig sim_config() const;
};

/// Parses a config document: flat `key = value` lines ('#' comments) or a
/// flat JSON object, autodetected. Unknown keys are rejected. A `mode` key
/// switches the prune defaults before the remaining keys apply.
PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config_file(const std::filesystem::path& path);

/// Applies one `key=value` override.
void apply_override(PipelineConfig& config, const std::string& key, const std::string& value);

/// Serializes every known key; parse(serialize(c)) == c.
std::string serialize_config(const PipelineConfig& config);

/// Empty when every parameter satisfies its constraints; otherwise one
/// message per violation naming the key and the constraint.
std::vector<std::string> validate_config(const PipelineConfig& config);

struct PipelineResult {
    PointCloud cloud;
    VoxelGrid final_grid;
    std::size_t layer_count = 0;
    std::map<std::string, std::string> artifacts;  // stage name -> file path
};

/// Runs preprocess -> segment -> calibrate -> rasterize -> [differential
/// merge] -> prune -> fill -> correct XY -> correct Z -> proportion ->
/// export. Every stage output is persisted under output_dir so any stage can
/// be re-run in isolation; stage failures carry the stage name and leave
/// earlier artifacts in place.
PipelineResult run_pipeline(const PipelineConfig& config);

void write_layer_stats_csv(const LayerBoundaries& boundaries, double sample_rate_hz,
                           const std::filesystem::path& path);

}  // namespace pbfrec
