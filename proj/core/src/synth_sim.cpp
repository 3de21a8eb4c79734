#include "pbfrec/synth_sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "pbfrec/errors.hpp"

namespace pbfrec {

namespace {

// Self-contained Gaussian sampling so traces are reproducible independent of
// the standard library's distribution internals.
class NoiseSource {
public:
    explicit NoiseSource(std::uint64_t seed) : engine_(seed) {}

    double uniform() {  // (0, 1]
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
    }

    double gaussian(double sigma) {
        const double u1 = uniform();
        const double u2 = uniform();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Uniform integer in [-bound, +bound].
    std::int64_t jitter(std::uint32_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t span = 2ull * bound + 1ull;
        return static_cast<std::int64_t>(engine_() % span) - static_cast<std::int64_t>(bound);
    }

private:
    std::mt19937_64 engine_;
};

struct Emitter {
    SignalTrace& trace;
    std::vector<bool>& ideal_on;
    const SimConfig& cfg;
    double pos_x = 0.0;
    double pos_y = 0.0;

    void sample(double x, double y, bool on) {
        trace.galvo_x.push_back(x);
        trace.galvo_y.push_back(y);
        trace.laser.push_back(on ? cfg.laser_on_volts : cfg.laser_off_volts);
        ideal_on.push_back(on);
        pos_x = x;
        pos_y = y;
    }

    void hold(double x, double y, std::size_t n, bool on) {
        for (std::size_t i = 0; i < n; ++i) sample(x, y, on);
    }

    void ramp(double to_x, double to_y, std::size_t n, bool on) {
        const double from_x = pos_x;
        const double from_y = pos_y;
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(n);
            sample(from_x + (to_x - from_x) * t, from_y + (to_y - from_y) * t, on);
        }
    }
};

}  // namespace

SimResult simulate_print_trace(const VoxelGrid& model, const SimConfig& cfg, std::uint64_t seed) {
    if (model.cells.empty())
        throw DataError("simulation model has no occupied cells");
    if (cfg.raster_size_volts <= 0.0)
        throw ConfigError("simulation raster size must be positive");
    if (cfg.samples_per_cell < 1)
        throw ConfigError("samples_per_cell must be >= 1");
    if (cfg.laser_on_volts <= cfg.laser_off_volts)
        throw ConfigError("laser_on_volts must exceed laser_off_volts");
    if (cfg.sample_rate_hz <= 0.0)
        throw ConfigError("sample rate must be positive");
    if (cfg.layer_gap_samples < 2ull * cfg.samples_per_cell + cfg.timing_jitter_samples)
        throw ConfigError("layer_gap_samples too small for the travel ramp and jitter");
    if (cfg.spike_rate < 0.0 || cfg.spike_rate > 1.0)
        throw ConfigError("spike_rate must be a probability");
    if (cfg.z_stretch && *cfg.z_stretch <= 0.0)
        throw ConfigError("z_stretch must be positive");

    // Layer replication along Z: printed layer P sinters model layer
    // floor(P / stretch).
    const std::uint32_t model_layers = model.layer_count;
    const double stretch = cfg.z_stretch.value_or(1.0);
    const std::uint32_t print_layers = std::max<std::uint32_t>(
        1, static_cast<std::uint32_t>(std::llround(static_cast<double>(model_layers) * stretch)));

    // Row-major visit plan per model layer: slow axis ascending, fast axis
    // serpentine, split into runs of adjacent cells.
    struct Run {
        std::int32_t row;  // slow coordinate
        std::vector<std::int32_t> cells;  // fast coordinates in visit order
    };
    const bool fast_is_x = cfg.seesaw_axis == SimConfig::Axis::X;
    std::vector<std::vector<Run>> plan(model_layers);
    {
        std::vector<std::map<std::int32_t, std::vector<std::int32_t>>> rows(model_layers);
        for (const auto& [key, hits] : model.cells) {
            if (key.layer < 0 || key.layer >= static_cast<std::int32_t>(model_layers))
                throw DataError("model cell outside its declared layer count");
            const std::int32_t fast = fast_is_x ? key.rx : key.ry;
            const std::int32_t slow = fast_is_x ? key.ry : key.rx;
            rows[static_cast<std::size_t>(key.layer)][slow].push_back(fast);
        }
        for (std::uint32_t layer = 0; layer < model_layers; ++layer) {
            std::size_t row_index = 0;
            for (auto& [slow, cells] : rows[layer]) {
                std::sort(cells.begin(), cells.end());
                const bool reversed = (row_index++ % 2) == 1;
                if (reversed) std::reverse(cells.begin(), cells.end());
                const std::int32_t step = reversed ? -1 : 1;
                Run run{slow, {}};
                for (std::int32_t c : cells) {
                    if (!run.cells.empty() && c != run.cells.back() + step) {
                        plan[layer].push_back(run);
                        run.cells.clear();
                    }
                    run.cells.push_back(c);
                }
                if (!run.cells.empty()) plan[layer].push_back(run);
            }
        }
    }

    const double cell = cfg.raster_size_volts;
    auto center = [cell](std::int32_t idx) { return (static_cast<double>(idx) + 0.5) * cell; };
    auto to_xy = [&](std::int32_t fast, std::int32_t slow) {
        return fast_is_x ? std::pair{center(fast), center(slow)} : std::pair{center(slow), center(fast)};
    };

    SimResult result;
    result.trace.sample_rate_hz = cfg.sample_rate_hz;
    std::vector<bool> ideal_on;
    Emitter emit{result.trace, ideal_on, cfg};
    NoiseSource noise(seed);

    const std::size_t spc = cfg.samples_per_cell;
    bool started = false;
    for (std::uint32_t print_layer = 0; print_layer < print_layers; ++print_layer) {
        const std::uint32_t model_layer =
            std::min(model_layers - 1,
                     static_cast<std::uint32_t>(static_cast<double>(print_layer) / stretch));
        const std::vector<Run>& runs = plan[model_layer];
        if (runs.empty())
            throw DataError("model layer " + std::to_string(model_layer) + " has no cells");

        for (std::size_t ri = 0; ri < runs.size(); ++ri) {
            const Run& run = runs[ri];
            auto [sx, sy] = to_xy(run.cells.front(), run.row);
            if (!started) {
                // Idle lead-in at the first target settles the preprocessing
                // filter before the first ON sample.
                emit.pos_x = sx;
                emit.pos_y = sy;
                emit.hold(sx, sy, spc, false);
                started = true;
            } else if (ri == 0) {
                // Inter-layer gap: ramp towards the new start, then dwell
                // there so the galvo filter settles before sintering.
                const std::int64_t jitter = noise.jitter(cfg.timing_jitter_samples);
                const std::size_t gap =
                    static_cast<std::size_t>(static_cast<std::int64_t>(cfg.layer_gap_samples) + jitter);
                emit.ramp(sx, sy, gap - spc, false);
                emit.hold(sx, sy, spc, false);
            } else {
                emit.ramp(sx, sy, spc, false);
                emit.hold(sx, sy, spc, false);
            }
            for (std::size_t ci = 0; ci < run.cells.size(); ++ci) {
                auto [cx, cy] = to_xy(run.cells[ci], run.row);
                if (ci > 0)
                    emit.ramp(cx, cy, spc, true);  // sinter through the transition
                emit.hold(cx, cy, spc, true);
            }
        }
    }
    emit.hold(emit.pos_x, emit.pos_y, spc, false);  // tail

    // Forward XY distortion of the galvo voltages.
    if (cfg.xy_distortion) {
        const AffineXY& d = *cfg.xy_distortion;
        for (std::size_t i = 0; i < result.trace.size(); ++i) {
            const double dx = result.trace.galvo_x[i] - d.center_x;
            const double dy = result.trace.galvo_y[i] - d.center_y;
            result.trace.galvo_x[i] = d.matrix[0] * dx + d.matrix[1] * dy + d.center_x;
            result.trace.galvo_y[i] = d.matrix[2] * dx + d.matrix[3] * dy + d.center_y;
        }
    }

    if (cfg.noise_sigma_volts > 0.0) {
        for (std::size_t i = 0; i < result.trace.size(); ++i) {
            result.trace.laser[i] += noise.gaussian(cfg.noise_sigma_volts);
            result.trace.galvo_x[i] += noise.gaussian(cfg.noise_sigma_volts);
            result.trace.galvo_y[i] += noise.gaussian(cfg.noise_sigma_volts);
        }
    }
    if (cfg.spike_rate > 0.0) {
        for (std::size_t i = 0; i < result.trace.size(); ++i) {
            if (noise.uniform() <= cfg.spike_rate)
                result.trace.laser[i] = ideal_on[i] ? cfg.laser_off_volts : cfg.laser_on_volts;
        }
    }

    // Ground truth mirrors what was printed, on the same raster.
    result.ground_truth.raster.raster_size_volts = cfg.raster_size_volts;
    result.ground_truth.layer_count = print_layers;
    for (std::uint32_t print_layer = 0; print_layer < print_layers; ++print_layer) {
        const std::uint32_t model_layer =
            std::min(model_layers - 1,
                     static_cast<std::uint32_t>(static_cast<double>(print_layer) / stretch));
        for (const auto& [key, hits] : model.cells)
            if (key.layer == static_cast<std::int32_t>(model_layer))
                result.ground_truth.cells.emplace(
                    VoxelKey{static_cast<std::int32_t>(print_layer), key.rx, key.ry}, 1u);
    }
    return result;
}

VoxelGrid make_box_model(std::int32_t nx, std::int32_t ny, std::uint32_t layers) {
    if (nx < 1 || ny < 1 || layers < 1)
        throw ConfigError("box model dimensions must be positive");
    VoxelGrid grid;
    grid.layer_count = layers;
    grid.raster.raster_size_volts = 1.0;
    for (std::uint32_t z = 0; z < layers; ++z)
        for (std::int32_t x = 0; x < nx; ++x)
            for (std::int32_t y = 0; y < ny; ++y)
                grid.cells.emplace(VoxelKey{static_cast<std::int32_t>(z), x, y}, 1u);
    return grid;
}

VoxelGrid make_cylinder_model(std::int32_t diameter, std::uint32_t layers) {
    return make_gear_model(diameter, layers, 0, 0);
}

VoxelGrid make_gear_model(std::int32_t outer_diameter, std::uint32_t layers, int tooth_count,
                          std::int32_t hole_diameter) {
    if (outer_diameter < 3 || layers < 1)
        throw ConfigError("gear model requires diameter >= 3 and at least one layer");
    VoxelGrid grid;
    grid.layer_count = layers;
    grid.raster.raster_size_volts = 1.0;

    const double c = static_cast<double>(outer_diameter - 1) / 2.0;
    const double tip_radius = static_cast<double>(outer_diameter) / 2.0 - 0.5;
    const double root_radius = tooth_count > 0 ? 0.78 * tip_radius : tip_radius;
    const double hole_radius = static_cast<double>(hole_diameter) / 2.0;

    for (std::int32_t x = 0; x < outer_diameter; ++x) {
        for (std::int32_t y = 0; y < outer_diameter; ++y) {
            const double dx = static_cast<double>(x) - c;
            const double dy = static_cast<double>(y) - c;
            const double r = std::hypot(dx, dy);
            if (r < hole_radius) continue;
            bool solid = r <= root_radius;
            if (!solid && tooth_count > 0 && r <= tip_radius) {
                const double angle = std::atan2(dy, dx) + std::numbers::pi;
                const double phase = std::fmod(angle * tooth_count / (2.0 * std::numbers::pi), 1.0);
                solid = phase < 0.5;
            }
            if (!solid) continue;
            for (std::uint32_t z = 0; z < layers; ++z)
                grid.cells.emplace(VoxelKey{static_cast<std::int32_t>(z), x, y}, 1u);
        }
    }
    if (grid.cells.empty())
        throw ConfigError("gear model parameters produce an empty grid");
    return grid;
}

VoxelGrid make_astm_bar_model(std::int32_t length, std::int32_t diameter) {
    if (length < 1 || diameter < 3)
        throw ConfigError("bar model requires length >= 1 and diameter >= 3");
    VoxelGrid grid;
    grid.layer_count = static_cast<std::uint32_t>(diameter);
    grid.raster.raster_size_volts = 1.0;

    const double c = static_cast<double>(diameter - 1) / 2.0;
    const double full_radius = static_cast<double>(diameter) / 2.0 - 0.5;
    const double gauge_radius = 0.62 * full_radius;
    const std::int32_t grip = std::max<std::int32_t>(1, length / 4);

    for (std::int32_t x = 0; x < length; ++x) {
        const double radius = (x < grip || x >= length - grip) ? full_radius : gauge_radius;
        for (std::int32_t y = 0; y < diameter; ++y) {
            for (std::int32_t z = 0; z < diameter; ++z) {
                const double dy = static_cast<double>(y) - c;
                const double dz = static_cast<double>(z) - c;
                if (dy * dy + dz * dz <= radius * radius)
                    grid.cells.emplace(VoxelKey{z, x, y}, 1u);
            }
        }
    }
    return grid;
}

namespace {

std::vector<std::int64_t> parse_dims(const std::string& text) {
    std::vector<std::int64_t> dims;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find('x', pos);
        const std::string part = text.substr(pos, next == std::string::npos ? next : next - pos);
        try {
            dims.push_back(std::stoll(part));
        } catch (const std::exception&) {
            throw ConfigError("invalid model dimension '" + part + "'");
        }
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return dims;
}

}  // namespace

VoxelGrid load_model_spec(const std::string& spec) {
    auto dims_after_colon = [&](std::size_t arity, std::vector<std::int64_t> defaults) {
        const std::size_t colon = spec.find(':');
        if (colon == std::string::npos) return defaults;
        std::vector<std::int64_t> dims = parse_dims(spec.substr(colon + 1));
        if (dims.size() != arity)
            throw ConfigError("model spec '" + spec + "' expects " + std::to_string(arity) +
                              " dimensions");
        return dims;
    };

    if (spec.rfind("box", 0) == 0) {
        auto d = dims_after_colon(3, {40, 40, 20});
        return make_box_model(static_cast<std::int32_t>(d[0]), static_cast<std::int32_t>(d[1]),
                              static_cast<std::uint32_t>(d[2]));
    }
    if (spec.rfind("cylinder", 0) == 0) {
        auto d = dims_after_colon(2, {40, 20});
        return make_cylinder_model(static_cast<std::int32_t>(d[0]), static_cast<std::uint32_t>(d[1]));
    }
    if (spec.rfind("gear", 0) == 0) {
        int teeth = 8;
        const std::size_t open = spec.find('(');
        if (open != std::string::npos) {
            const std::size_t close = spec.find(')', open);
            if (close == std::string::npos)
                throw ConfigError("model spec '" + spec + "' has an unclosed tooth count");
            try {
                teeth = std::stoi(spec.substr(open + 1, close - open - 1));
            } catch (const std::exception&) {
                throw ConfigError("invalid tooth count in '" + spec + "'");
            }
        }
        auto d = dims_after_colon(2, {40, 20});
        return make_gear_model(static_cast<std::int32_t>(d[0]), static_cast<std::uint32_t>(d[1]), teeth);
    }
    if (spec.rfind("astm_bar", 0) == 0) {
        auto d = dims_after_colon(2, {120, 41});
        return make_astm_bar_model(static_cast<std::int32_t>(d[0]), static_cast<std::int32_t>(d[1]));
    }

    if (!std::filesystem::exists(spec))
        throw ConfigError("unknown model spec or missing file: " + spec);
    const PointCloud cloud = load_point_cloud_csv(spec);
    if (cloud.empty())
        throw DataError(spec + ": model point cloud is empty");
    VoxelGrid grid;
    grid.raster.raster_size_volts = 1.0;
    std::int32_t max_layer = 0;
    for (const PointXYZW& p : cloud.points) {
        const VoxelKey key{static_cast<std::int32_t>(std::llround(p.z)),
                           static_cast<std::int32_t>(std::llround(p.x)),
                           static_cast<std::int32_t>(std::llround(p.y))};
        if (key.layer < 0)
            throw DataError(spec + ": model layers must be nonnegative");
        grid.cells.emplace(key, 1u);
        max_layer = std::max(max_layer, key.layer);
    }
    grid.layer_count = static_cast<std::uint32_t>(max_layer + 1);
    return grid;
}

}  // namespace pbfrec
