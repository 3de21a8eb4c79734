#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "pbfrec/rasterizer.hpp"
#include "pbfrec/trace_io.hpp"

namespace pbfrec {

struct AffineXY {
    std::array<double, 4> matrix{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
    double center_x = 0.0;
    double center_y = 0.0;
};

/// Synthetic print parameters. layer_gap_samples must exceed the downstream
/// segmentation off_run_threshold so gaps split layers, and staying at or
/// below twice the threshold keeps an isolated laser spike inside a gap from
/// fabricating a separate layer.
struct SimConfig {
    double sample_rate_hz = 20000.0;
    double raster_size_volts = 0.1;
    std::uint32_t samples_per_cell = 8;
    enum class Axis { X, Y } seesaw_axis = Axis::X;
    std::size_t layer_gap_samples = 2000;
    double noise_sigma_volts = 0.0;
    double laser_on_volts = 2.5;
    double laser_off_volts = 0.5;
    double spike_rate = 0.0;  // probability per sample of a single-sample laser spike
    std::optional<AffineXY> xy_distortion;
    std::optional<double> z_stretch;
    std::uint32_t timing_jitter_samples = 0;
};

struct SimResult {
    SignalTrace trace;
    VoxelGrid ground_truth;  // what was actually printed, raster-aligned
};

/// Generates a side-channel trace for a boustrophedon (seesaw) print of the
/// model: cells are visited row by row with alternating direction, galvo
/// channels hold each cell center for samples_per_cell samples with linear
/// ramps in between, and the laser is ON over solid cells only. Optional
/// Gaussian noise, single-sample laser spikes, forward XY distortion, layer
/// replication along Z, and inter-layer timing jitter. Deterministic for a
/// given (model, config, seed).
SimResult simulate_print_trace(const VoxelGrid& model, const SimConfig& cfg, std::uint64_t seed);

/// Procedural test models on an integer cell lattice (hit count 1).
VoxelGrid make_box_model(std::int32_t nx, std::int32_t ny, std::uint32_t layers);
VoxelGrid make_cylinder_model(std::int32_t diameter, std::uint32_t layers);
VoxelGrid make_gear_model(std::int32_t outer_diameter, std::uint32_t layers, int tooth_count,
                          std::int32_t hole_diameter = 0);
VoxelGrid make_astm_bar_model(std::int32_t length, std::int32_t diameter);

/// Parses a model argument: a procedural shape spec ("box:40x40x20",
/// "cylinder:40x20", "gear(8)", "gear(8):40x20", "astm_bar:120x41") or a
/// point-cloud CSV path whose rounded points become cells.
VoxelGrid load_model_spec(const std::string& spec);

}  // namespace pbfrec
