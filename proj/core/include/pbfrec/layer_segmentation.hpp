#pragma once

#include <cstddef>
#include <vector>

#include "pbfrec/signal_prep.hpp"

namespace pbfrec {

/// One sintering interval: inclusive sample-index range with laser ON at
/// both ends.
struct LayerInterval {
    std::size_t start_index = 0;
    std::size_t end_index = 0;

    std::size_t duration_samples() const { return end_index - start_index + 1; }
};

struct LayerBoundaries {
    std::vector<LayerInterval> layers;

    std::size_t layer_count() const { return layers.size(); }
};

struct SegmentationConfig {
    /// An OFF run longer than this many samples ends the current layer.
    std::size_t off_run_threshold = 1000;
};

/// Detects per-layer sintering intervals with a three-state automaton:
/// idle until the laser turns ON (layer start), then sintering; an OFF sample
/// moves to a trailing-off state that counts consecutive OFF samples and
/// either returns to sintering on the next ON sample or, once the counter
/// exceeds the threshold, closes the layer at its last ON index. A signal
/// that ends mid-layer closes the final layer at its last ON index.
LayerBoundaries segment_layers(const BinaryLaserSignal& laser, const SegmentationConfig& cfg);

struct LayerStatistics {
    std::vector<std::size_t> duration_samples;  // one per layer
    std::vector<double> duration_seconds;
    std::vector<std::size_t> gap_samples;  // one per adjacent layer pair
    std::vector<double> gap_seconds;
};

/// Per-layer sintering durations and the idle gaps between layers.
LayerStatistics layer_statistics(const LayerBoundaries& boundaries, double sample_rate_hz);

}  // namespace pbfrec
