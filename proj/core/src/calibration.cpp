#include "pbfrec/calibration.hpp"

#include <cmath>

#include "pbfrec/errors.hpp"

namespace pbfrec {

SwingMeasurement make_swing(double max_delta_x, double max_delta_y) {
    if (max_delta_x < 0.0 || max_delta_y < 0.0)
        throw DataError("swing deltas must be nonnegative");
    SwingMeasurement s;
    s.max_delta_x = max_delta_x;
    s.max_delta_y = max_delta_y;
    s.combined = std::hypot(max_delta_x, max_delta_y);
    return s;
}

std::vector<Peak> find_peaks(std::span<const double> signal) {
    std::vector<Peak> peaks;
    const std::size_t n = signal.size();
    if (n < 3) return peaks;

    std::size_t left = 0;
    while (left < n) {
        std::size_t right = left;
        while (right + 1 < n && signal[right + 1] == signal[left]) ++right;
        if (left > 0 && right + 1 < n) {
            const double prev = signal[left - 1];
            const double next = signal[right + 1];
            const double v = signal[left];
            if (prev < v && next < v)
                peaks.push_back({(left + right) / 2, v, true});
            else if (prev > v && next > v)
                peaks.push_back({(left + right) / 2, v, false});
        }
        left = right + 1;
    }
    return peaks;
}

double max_consecutive_peak_delta(std::span<const double> signal, const FilterSpec& calibration_filter) {
    const std::vector<double> filtered = lowpass_filter(signal, calibration_filter);
    const std::vector<Peak> peaks = find_peaks(filtered);
    double max_delta = 0.0;
    for (std::size_t i = 0; i + 1 < peaks.size(); ++i)
        max_delta = std::max(max_delta, std::abs(peaks[i + 1].value - peaks[i].value));
    return max_delta;
}

double derive_raster_size(const SwingMeasurement& swing, std::size_t layer_count) {
    if (layer_count < 1)
        throw ConfigError("layer count must be >= 1");
    if (swing.combined <= 0.0)
        throw DataError("degenerate swing: combined deviation is zero");
    return swing.combined / static_cast<double>(layer_count);
}

std::map<std::uint32_t, std::size_t> hit_count_histogram(const VoxelGrid& grid) {
    std::map<std::uint32_t, std::size_t> histogram;
    for (const auto& [key, hits] : grid.cells)
        ++histogram[hits];
    return histogram;
}

}  // namespace pbfrec
