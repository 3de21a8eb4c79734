#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "pbfrec/rasterizer.hpp"
#include "pbfrec/signal_prep.hpp"

namespace pbfrec {

/// Maximum galvanometer swing observed on a reference layer. `combined` is
/// the Euclidean length of the (x, y) deltas.
struct SwingMeasurement {
    double max_delta_x = 0.0;
    double max_delta_y = 0.0;
    double combined = 0.0;
};

SwingMeasurement make_swing(double max_delta_x, double max_delta_y);

struct Peak {
    std::size_t index = 0;
    double value = 0.0;
    bool is_maximum = false;
};

/// Local extrema of a signal. A plateau reports its center index (lower
/// middle for even plateau lengths); the endpoints never qualify. Maxima and
/// minima alternate by construction. Signals shorter than 3 samples have no
/// interior points and yield an empty result, as do monotone signals.
std::vector<Peak> find_peaks(std::span<const double> signal);

/// Largest absolute value difference between consecutive extrema of the
/// signal after an aggressive calibration low-pass (1 kHz default). Returns 0
/// when fewer than two peaks survive the filtering.
double max_consecutive_peak_delta(std::span<const double> signal, const FilterSpec& calibration_filter);

/// Raster size that yields cubical voxels: combined swing divided by the
/// layer count. The operational raster is then a user trade-off choice.
double derive_raster_size(const SwingMeasurement& swing, std::size_t layer_count);

/// Histogram of hit counters over all occupied voxels.
std::map<std::uint32_t, std::size_t> hit_count_histogram(const VoxelGrid& grid);

}  // namespace pbfrec
