#include "pbfrec/layer_segmentation.hpp"

#include "pbfrec/errors.hpp"

namespace pbfrec {

LayerBoundaries segment_layers(const BinaryLaserSignal& laser, const SegmentationConfig& cfg) {
    if (cfg.off_run_threshold < 1)
        throw ConfigError("segmentation off_run_threshold must be >= 1");

    enum class State { Idle, Sintering, TrailingOff };

    LayerBoundaries out;
    State state = State::Idle;
    std::size_t start = 0;
    std::size_t last_on = 0;
    std::size_t off_run = 0;

    for (std::size_t i = 0; i < laser.size(); ++i) {
        const bool on = laser.on(i);
        switch (state) {
            case State::Idle:
                if (on) {
                    start = i;
                    last_on = i;
                    state = State::Sintering;
                }
                break;
            case State::Sintering:
                if (on) {
                    last_on = i;
                } else {
                    off_run = 1;
                    state = State::TrailingOff;
                }
                break;
            case State::TrailingOff:
                if (on) {
                    last_on = i;
                    state = State::Sintering;
                } else if (++off_run > cfg.off_run_threshold) {
                    out.layers.push_back({start, last_on});
                    state = State::Idle;
                }
                break;
        }
    }
    if (state != State::Idle)
        out.layers.push_back({start, last_on});
    return out;
}

LayerStatistics layer_statistics(const LayerBoundaries& boundaries, double sample_rate_hz) {
    if (sample_rate_hz <= 0.0)
        throw ConfigError("sample rate must be positive");

    LayerStatistics stats;
    stats.duration_samples.reserve(boundaries.layers.size());
    stats.duration_seconds.reserve(boundaries.layers.size());
    for (const LayerInterval& layer : boundaries.layers) {
        if (layer.end_index < layer.start_index)
            throw DataError("layer interval with end before start");
        stats.duration_samples.push_back(layer.duration_samples());
        stats.duration_seconds.push_back(static_cast<double>(layer.duration_samples()) / sample_rate_hz);
    }
    for (std::size_t i = 1; i < boundaries.layers.size(); ++i) {
        const std::size_t prev_end = boundaries.layers[i - 1].end_index;
        const std::size_t next_start = boundaries.layers[i].start_index;
        if (next_start <= prev_end)
            throw DataError("layer intervals overlap or are unordered");
        const std::size_t gap = next_start - prev_end - 1;
        stats.gap_samples.push_back(gap);
        stats.gap_seconds.push_back(static_cast<double>(gap) / sample_rate_hz);
    }
    return stats;
}

}  // namespace pbfrec
