#include "pbfrec/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv_util.hpp"
#include "pbfrec/errors.hpp"

namespace pbfrec {

PipelineConfig PipelineConfig::defaults(PipelineMode mode) {
    PipelineConfig c;
    c.mode = mode;
    if (mode == PipelineMode::Differential) {
        c.prune_min_hit = 3;
        c.prune_range = 4;
        c.prune_min_neighbors = 22;
    }
    return c;
}

SimConfig PipelineConfig::sim_config() const {
    SimConfig sim;
    sim.sample_rate_hz = sample_rate_hz;
    sim.raster_size_volts = sim_raster_size_volts;
    sim.samples_per_cell = sim_samples_per_cell;
    sim.layer_gap_samples = sim_layer_gap_samples;
    sim.noise_sigma_volts = sim_noise_sigma_volts;
    sim.laser_on_volts = sim_laser_on_volts;
    sim.laser_off_volts = sim_laser_off_volts;
    sim.spike_rate = sim_spike_rate;
    sim.timing_jitter_samples = sim_timing_jitter_samples;
    sim.seesaw_axis = sim_seesaw_axis == "y" ? SimConfig::Axis::Y : SimConfig::Axis::X;
    if (sim_z_stretch > 0.0) sim.z_stretch = sim_z_stretch;
    return sim;
}

namespace {

struct KeyDef {
    std::string name;
    std::function<void(PipelineConfig&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

double parse_number(const std::string& key, const std::string& value) {
    double out = 0.0;
    if (!csv::parse_double(value, out))
        throw ConfigError("config key '" + key + "': invalid number '" + value + "'");
    return out;
}

std::int64_t parse_integer(const std::string& key, const std::string& value) {
    const double d = parse_number(key, value);
    const double rounded = std::nearbyint(d);
    if (rounded != d)
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    return static_cast<std::int64_t>(rounded);
}

std::vector<std::string> split_paths(const std::string& value) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t next = value.find(';', pos);
        std::string part =
            std::string(csv::trim(value.substr(pos, next == std::string::npos ? next : next - pos)));
        if (!part.empty()) out.push_back(part);
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

std::string join_paths(const std::vector<std::string>& paths) {
    std::string out;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        if (i) out += ';';
        out += paths[i];
    }
    return out;
}

const std::vector<KeyDef>& key_table() {
    auto num = [](const std::string& name, double PipelineConfig::* field) {
        return KeyDef{name,
                      [name, field](PipelineConfig& c, const std::string& v) { c.*field = parse_number(name, v); },
                      [field](const PipelineConfig& c) { return csv::format_double(c.*field); }};
    };
    auto str = [](const std::string& name, std::string PipelineConfig::* field) {
        return KeyDef{name, [field](PipelineConfig& c, const std::string& v) { c.*field = v; },
                      [field](const PipelineConfig& c) { return c.*field; }};
    };
    auto uint32 = [](const std::string& name, std::uint32_t PipelineConfig::* field) {
        return KeyDef{name,
                      [name, field](PipelineConfig& c, const std::string& v) {
                          const std::int64_t i = parse_integer(name, v);
                          if (i < 0) throw ConfigError("config key '" + name + "' must be nonnegative");
                          c.*field = static_cast<std::uint32_t>(i);
                      },
                      [field](const PipelineConfig& c) { return std::to_string(c.*field); }};
    };

    static const std::vector<KeyDef> table = {
        {"mode",
         [](PipelineConfig& c, const std::string& v) {
             if (v == "simple")
                 c.mode = PipelineMode::Simple;
             else if (v == "differential")
                 c.mode = PipelineMode::Differential;
             else
                 throw ConfigError("config key 'mode': expected simple|differential, got '" + v + "'");
         },
         [](const PipelineConfig& c) {
             return c.mode == PipelineMode::Simple ? "simple" : "differential";
         }},
        {"input.traces",
         [](PipelineConfig& c, const std::string& v) { c.input_traces = split_paths(v); },
         [](const PipelineConfig& c) { return join_paths(c.input_traces); }},
        num("input.sample_rate_hz", &PipelineConfig::sample_rate_hz),
        str("input.laser_column", &PipelineConfig::laser_column),
        str("input.galvo_x_column", &PipelineConfig::galvo_x_column),
        str("input.galvo_y_column", &PipelineConfig::galvo_y_column),
        str("output.dir", &PipelineConfig::output_dir),
        num("laser.threshold_on", &PipelineConfig::laser_threshold_on),
        num("laser.threshold_off", &PipelineConfig::laser_threshold_off),
        {"filter.order",
         [](PipelineConfig& c, const std::string& v) {
             c.filter_order = static_cast<int>(parse_integer("filter.order", v));
         },
         [](const PipelineConfig& c) { return std::to_string(c.filter_order); }},
        num("filter.cutoff_hz", &PipelineConfig::filter_cutoff_hz),
        {"segmentation.off_run_threshold",
         [](PipelineConfig& c, const std::string& v) {
             const std::int64_t i = parse_integer("segmentation.off_run_threshold", v);
             if (i < 0) throw ConfigError("config key 'segmentation.off_run_threshold' must be nonnegative");
             c.off_run_threshold = static_cast<std::size_t>(i);
         },
         [](const PipelineConfig& c) { return std::to_string(c.off_run_threshold); }},
        num("calibration.cutoff_hz", &PipelineConfig::calibration_cutoff_hz),
        {"calibration.layer",
         [](PipelineConfig& c, const std::string& v) {
             c.calibration_layer = parse_integer("calibration.layer", v);
         },
         [](const PipelineConfig& c) { return std::to_string(c.calibration_layer); }},
        num("raster.size_volts", &PipelineConfig::raster_size_volts),
        uint32("prune.min_hit", &PipelineConfig::prune_min_hit),
        {"prune.range",
         [](PipelineConfig& c, const std::string& v) {
             c.prune_range = static_cast<std::int32_t>(parse_integer("prune.range", v));
         },
         [](const PipelineConfig& c) { return std::to_string(c.prune_range); }},
        uint32("prune.min_neighbors", &PipelineConfig::prune_min_neighbors),
        {"fill.strategy",
         [](PipelineConfig& c, const std::string& v) {
             if (v == "none")
                 c.fill_strategy = FillStrategy::None;
             else if (v == "gear_up")
                 c.fill_strategy = FillStrategy::GearUp;
             else if (v == "astm_bidirectional")
                 c.fill_strategy = FillStrategy::AstmBidirectional;
             else
                 throw ConfigError(
                     "config key 'fill.strategy': expected none|gear_up|astm_bidirectional, got '" + v +
                     "'");
         },
         [](const PipelineConfig& c) {
             switch (c.fill_strategy) {
                 case FillStrategy::None: return std::string("none");
                 case FillStrategy::GearUp: return std::string("gear_up");
                 case FillStrategy::AstmBidirectional: return std::string("astm_bidirectional");
             }
             return std::string("none");
         }},
        uint32("fill.projection_min_hit", &PipelineConfig::fill_projection_min_hit),
        {"fill.middle_layer",
         [](PipelineConfig& c, const std::string& v) {
             c.fill_middle_layer = parse_integer("fill.middle_layer", v);
         },
         [](const PipelineConfig& c) { return std::to_string(c.fill_middle_layer); }},
        str("distortion.model_path", &PipelineConfig::distortion_model_path),
        {"distortion.fit",
         [](PipelineConfig& c, const std::string& v) {
             if (v == "none")
                 c.distortion_fit = DistortionFit::None;
             else if (v == "inline")
                 c.distortion_fit = DistortionFit::Inline;
             else
                 throw ConfigError("config key 'distortion.fit': expected none|inline, got '" + v + "'");
         },
         [](const PipelineConfig& c) {
             return c.distortion_fit == DistortionFit::None ? "none" : "inline";
         }},
        num("distortion.reference_radius", &PipelineConfig::distortion_reference_radius),
        {"proportion.apply",
         [](PipelineConfig& c, const std::string& v) {
             if (v == "none")
                 c.proportion_apply = ProportionApply::None;
             else if (v == "astm")
                 c.proportion_apply = ProportionApply::Astm;
             else if (v == "gear")
                 c.proportion_apply = ProportionApply::Gear;
             else
                 throw ConfigError("config key 'proportion.apply': expected none|astm|gear, got '" + v +
                                   "'");
         },
         [](const PipelineConfig& c) {
             switch (c.proportion_apply) {
                 case ProportionApply::None: return std::string("none");
                 case ProportionApply::Astm: return std::string("astm");
                 case ProportionApply::Gear: return std::string("gear");
             }
             return std::string("none");
         }},
        num("proportion.astm_length_over_diameter", &PipelineConfig::proportion_astm_length_over_diameter),
        num("proportion.gear_diameter_over_height", &PipelineConfig::proportion_gear_diameter_over_height),
        num("evaluation.grid", &PipelineConfig::evaluation_grid),
        num("sim.raster_size_volts", &PipelineConfig::sim_raster_size_volts),
        uint32("sim.samples_per_cell", &PipelineConfig::sim_samples_per_cell),
        {"sim.layer_gap_samples",
         [](PipelineConfig& c, const std::string& v) {
             const std::int64_t i = parse_integer("sim.layer_gap_samples", v);
             if (i < 0) throw ConfigError("config key 'sim.layer_gap_samples' must be nonnegative");
             c.sim_layer_gap_samples = static_cast<std::size_t>(i);
         },
         [](const PipelineConfig& c) { return std::to_string(c.sim_layer_gap_samples); }},
        num("sim.noise_sigma_volts", &PipelineConfig::sim_noise_sigma_volts),
        num("sim.laser_on_volts", &PipelineConfig::sim_laser_on_volts),
        num("sim.laser_off_volts", &PipelineConfig::sim_laser_off_volts),
        num("sim.spike_rate", &PipelineConfig::sim_spike_rate),
        uint32("sim.timing_jitter_samples", &PipelineConfig::sim_timing_jitter_samples),
        {"sim.seesaw_axis",
         [](PipelineConfig& c, const std::string& v) {
             if (v != "x" && v != "y")
                 throw ConfigError("config key 'sim.seesaw_axis': expected x|y, got '" + v + "'");
             c.sim_seesaw_axis = v;
         },
         [](const PipelineConfig& c) { return c.sim_seesaw_axis; }},
        num("sim.z_stretch", &PipelineConfig::sim_z_stretch),
        {"sim.seed",
         [](PipelineConfig& c, const std::string& v) {
             const std::int64_t i = parse_integer("sim.seed", v);
             if (i < 0) throw ConfigError("config key 'sim.seed' must be nonnegative");
             c.sim_seed = static_cast<std::uint64_t>(i);
         },
         [](const PipelineConfig& c) { return std::to_string(c.sim_seed); }},
    };
    return table;
}

const KeyDef* find_key(const std::string& name) {
    for (const KeyDef& def : key_table())
        if (def.name == name) return &def;
    return nullptr;
}

std::string json_value_to_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) return csv::format_double(v.get<double>());
    throw ConfigError("config JSON values must be scalars");
}

PipelineConfig build_config(const std::vector<std::pair<std::string, std::string>>& pairs) {
    PipelineMode mode = PipelineMode::Simple;
    for (const auto& [key, value] : pairs) {
        if (key == "mode") {
            PipelineConfig probe;
            find_key("mode")->set(probe, value);
            mode = probe.mode;
        } else if (!find_key(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    PipelineConfig config = PipelineConfig::defaults(mode);
    for (const auto& [key, value] : pairs)
        find_key(key)->set(config, value);
    return config;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text) {
    std::size_t first = text.find_first_not_of(" \t\r\n");
    std::vector<std::pair<std::string, std::string>> pairs;

    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text, nullptr, true, true);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config JSON parse error: ") + e.what());
        }
        if (!doc.is_object())
            throw ConfigError("config JSON must be an object");
        for (const auto& [key, value] : doc.items())
            pairs.emplace_back(key, json_value_to_string(value));
        // JSON objects iterate alphabetically, which is fine: keys are
        // independent except for `mode`, which build_config applies first.
    } else {
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            std::string_view v = csv::trim(line);
            if (v.empty() || v.front() == '#') continue;
            const std::size_t eq = v.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
            std::string key{csv::trim(v.substr(0, eq))};
            std::string value{csv::trim(v.substr(eq + 1))};
            pairs.emplace_back(std::move(key), std::move(value));
        }
    }
    return build_config(pairs);
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    PipelineConfig config = parse_config_text(text);
    // Relative artifact paths in a config resolve against the config file.
    if (!config.distortion_model_path.empty()) {
        std::filesystem::path model_path(config.distortion_model_path);
        if (model_path.is_relative())
            config.distortion_model_path = (path.parent_path() / model_path).string();
    }
    return config;
}

void apply_override(PipelineConfig& config, const std::string& key, const std::string& value) {
    const KeyDef* def = find_key(key);
    if (!def)
        throw ConfigError("unknown config key '" + key + "'");
    def->set(config, value);
}

std::string serialize_config(const PipelineConfig& config) {
    std::string out;
    for (const KeyDef& def : key_table()) {
        out += def.name;
        out += " = ";
        out += def.get(config);
        out += "\n";
    }
    return out;
}

std::vector<std::string> validate_config(const PipelineConfig& c) {
    std::vector<std::string> violations;
    auto check = [&](bool ok, const std::string& message) {
        if (!ok) violations.push_back(message);
    };

    check(c.sample_rate_hz > 0.0, "input.sample_rate_hz must be positive");
    check(c.laser_threshold_on > c.laser_threshold_off,
          "laser.threshold_on must exceed laser.threshold_off");
    check(c.filter_order >= 1, "filter.order must be >= 1");
    check(c.filter_cutoff_hz > 0.0 && c.filter_cutoff_hz < c.sample_rate_hz / 2.0,
          "filter.cutoff_hz must lie in (0, Nyquist)");
    check(c.calibration_cutoff_hz > 0.0 && c.calibration_cutoff_hz < c.sample_rate_hz / 2.0,
          "calibration.cutoff_hz must lie in (0, Nyquist)");
    check(c.off_run_threshold >= 1, "segmentation.off_run_threshold must be >= 1");
    check(c.raster_size_volts > 0.0, "raster.size_volts must be positive");
    check(c.prune_min_hit >= 1, "prune.min_hit must be >= 1");
    check(c.prune_range >= 1, "prune.range must be >= 1");
    if (c.prune_range >= 1) {
        const std::uint64_t capacity =
            static_cast<std::uint64_t>(2 * c.prune_range + 1) * (2 * c.prune_range + 1) - 1;
        check(c.prune_min_neighbors <= capacity,
              "prune.min_neighbors exceeds (2r+1)^2-1 = " + std::to_string(capacity));
    }
    check(c.fill_projection_min_hit >= 1, "fill.projection_min_hit must be >= 1");
    check(c.distortion_reference_radius > 0.0, "distortion.reference_radius must be positive");
    check(c.proportion_astm_length_over_diameter > 0.0,
          "proportion.astm_length_over_diameter must be positive");
    check(c.proportion_gear_diameter_over_height > 0.0,
          "proportion.gear_diameter_over_height must be positive");
    check(c.evaluation_grid > 0.0, "evaluation.grid must be positive");

    check(c.sim_raster_size_volts > 0.0, "sim.raster_size_volts must be positive");
    check(c.sim_samples_per_cell >= 1, "sim.samples_per_cell must be >= 1");
    check(c.sim_laser_on_volts > c.sim_laser_off_volts,
          "sim.laser_on_volts must exceed sim.laser_off_volts");
    check(c.sim_spike_rate >= 0.0 && c.sim_spike_rate <= 1.0, "sim.spike_rate must be a probability");
    check(c.sim_z_stretch >= 0.0, "sim.z_stretch must be nonnegative (0 disables)");
    check(c.sim_layer_gap_samples > c.off_run_threshold,
          "sim.layer_gap_samples must exceed segmentation.off_run_threshold");
    check(c.sim_layer_gap_samples >= 2ull * c.sim_samples_per_cell + c.sim_timing_jitter_samples,
          "sim.layer_gap_samples too small for the travel ramp and jitter");
    return violations;
}

void write_layer_stats_csv(const LayerBoundaries& boundaries, double sample_rate_hz,
                           const std::filesystem::path& path) {
    const LayerStatistics stats = layer_statistics(boundaries, sample_rate_hz);
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open file for writing: " + path.string());
    out << "layer,start,end,duration_samples,duration_s\n";
    for (std::size_t i = 0; i < boundaries.layers.size(); ++i) {
        // Layers are numbered from 1 in reports.
        out << (i + 1) << ',' << boundaries.layers[i].start_index << ','
            << boundaries.layers[i].end_index << ',' << stats.duration_samples[i] << ','
            << csv::format_double(stats.duration_seconds[i]) << "\n";
    }
    if (!out)
        throw DataError("write failed: " + path.string());
}

namespace {

template <typename F>
auto run_stage(const char* name, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("stage ") + name + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string("stage ") + name + ": " + e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    {
        const std::vector<std::string> violations = validate_config(config);
        if (!violations.empty()) {
            std::string message = "invalid pipeline config:";
            for (const std::string& v : violations) message += "\n  - " + v;
            throw ConfigError(message);
        }
    }
    if (config.input_traces.empty())
        throw ConfigError("pipeline requires at least one input trace (input.traces)");
    if (config.mode == PipelineMode::Simple && config.input_traces.size() != 1)
        throw ConfigError("simple mode expects exactly one input trace");

    namespace fs = std::filesystem;
    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir / "preprocessed");
    fs::create_directories(out_dir / "layers");
    fs::create_directories(out_dir / "grids");
    fs::create_directories(out_dir / "clouds");

    PipelineResult result;
    TraceSchema schema;
    schema.laser_column = config.laser_column;
    schema.galvo_x_column = config.galvo_x_column;
    schema.galvo_y_column = config.galvo_y_column;
    schema.sample_rate_hz = config.sample_rate_hz;

    struct PreparedTrace {
        BinaryLaserSignal laser;
        std::vector<double> galvo_x;
        std::vector<double> galvo_y;
        double sample_rate_hz = 0.0;
        LayerBoundaries boundaries;
    };
    std::vector<PreparedTrace> prepared;

    // preprocess: hysteresis-normalize the laser, low-pass the galvos.
    run_stage("preprocess", [&] {
        const HysteresisThresholds th{config.laser_threshold_on, config.laser_threshold_off};
        for (std::size_t i = 0; i < config.input_traces.size(); ++i) {
            const SignalTrace raw = load_trace_csv(config.input_traces[i], schema);
            PreparedTrace p;
            p.sample_rate_hz = raw.sample_rate_hz;
            p.laser = normalize_laser(raw.laser, th);
            const FilterSpec lpf{config.filter_order, config.filter_cutoff_hz, raw.sample_rate_hz};
            p.galvo_x = lowpass_filter(raw.galvo_x, lpf);
            p.galvo_y = lowpass_filter(raw.galvo_y, lpf);

            SignalTrace preprocessed;
            preprocessed.sample_rate_hz = raw.sample_rate_hz;
            preprocessed.laser.reserve(p.laser.size());
            for (std::size_t s = 0; s < p.laser.size(); ++s)
                preprocessed.laser.push_back(p.laser.on(s) ? 1.0 : 0.0);
            preprocessed.galvo_x = p.galvo_x;
            preprocessed.galvo_y = p.galvo_y;
            const fs::path path = out_dir / "preprocessed" / ("trace" + std::to_string(i) + ".csv");
            write_trace_csv(preprocessed, path, schema);
            result.artifacts["preprocess:" + std::to_string(i)] = path.string();
            prepared.push_back(std::move(p));
        }
        return 0;
    });

    // segment: per-layer sintering intervals.
    run_stage("segment", [&] {
        const SegmentationConfig seg{config.off_run_threshold};
        for (std::size_t i = 0; i < prepared.size(); ++i) {
            prepared[i].boundaries = segment_layers(prepared[i].laser, seg);
            if (prepared[i].boundaries.layers.empty())
                throw DataError("trace " + std::to_string(i) + " contains no sintering layers");
            const fs::path path = out_dir / "layers" / ("trace" + std::to_string(i) + ".csv");
            write_layer_stats_csv(prepared[i].boundaries, prepared[i].sample_rate_hz, path);
            result.artifacts["segment:" + std::to_string(i)] = path.string();
        }
        return 0;
    });

    // calibrate: swing and derived raster size, reported for inspection; the
    // operational raster comes from the config.
    run_stage("calibrate", [&] {
        const PreparedTrace& p = prepared.front();
        const std::size_t layer_count = p.boundaries.layer_count();
        std::size_t layer_index = config.calibration_layer >= 0
                                      ? static_cast<std::size_t>(config.calibration_layer)
                                      : (layer_count - 1) / 2;
        nlohmann::json doc;
        if (layer_index >= layer_count) {
            doc["note"] = "calibration layer outside range, stage skipped";
        } else {
            const LayerInterval layer = p.boundaries.layers[layer_index];
            const FilterSpec calibration_lpf{config.filter_order, config.calibration_cutoff_hz,
                                             p.sample_rate_hz};
            const std::span<const double> gx(p.galvo_x.data() + layer.start_index,
                                             layer.duration_samples());
            const std::span<const double> gy(p.galvo_y.data() + layer.start_index,
                                             layer.duration_samples());
            const double delta_x = max_consecutive_peak_delta(gx, calibration_lpf);
            const double delta_y = max_consecutive_peak_delta(gy, calibration_lpf);
            doc["layer"] = layer_index + 1;  // reported 1-based
            doc["max_delta_x_volts"] = delta_x;
            doc["max_delta_y_volts"] = delta_y;
            try {
                const SwingMeasurement swing = make_swing(delta_x, delta_y);
                doc["combined_volts"] = swing.combined;
                doc["derived_raster_volts"] = derive_raster_size(swing, layer_count);
            } catch (const DataError& e) {
                doc["note"] = std::string("degenerate swing: ") + e.what();
            }
            doc["operational_raster_volts"] = config.raster_size_volts;
        }
        const fs::path path = out_dir / "calibration.json";
        std::ofstream out(path);
        out << doc.dump(2) << "\n";
        result.artifacts["calibrate"] = path.string();
        return 0;
    });

    // rasterize each trace.
    std::vector<VoxelGrid> grids;
    run_stage("rasterize", [&] {
        const RasterSpec raster{config.raster_size_volts};
        for (std::size_t i = 0; i < prepared.size(); ++i) {
            const PreparedTrace& p = prepared[i];
            grids.push_back(rasterize_layers(p.laser, p.galvo_x, p.galvo_y, p.boundaries, raster));
            const fs::path path = out_dir / "grids" / ("trace" + std::to_string(i) + ".csv");
            write_grid_csv(grids.back(), path);
            result.artifacts["rasterize:" + std::to_string(i)] = path.string();
        }
        return 0;
    });

    // differential merge.
    VoxelGrid merged;
    if (config.mode == PipelineMode::Differential) {
        merged = run_stage("diff", [&] {
            VoxelGrid m = differential_voxelization(grids);
            const fs::path path = out_dir / "grids" / "differential.csv";
            write_grid_csv(m, path);
            result.artifacts["diff"] = path.string();
            return m;
        });
    } else {
        merged = std::move(grids.front());
    }

    // prune: hit-count threshold, then neighborhood support.
    VoxelGrid pruned = run_stage("prune", [&] {
        VoxelGrid g = prune_by_hit_count(merged, config.prune_min_hit);
        g = prune_by_neighbors(g, config.prune_range, config.prune_min_neighbors);
        const fs::path path = out_dir / "grids" / "pruned.csv";
        write_grid_csv(g, path);
        result.artifacts["prune"] = path.string();
        return g;
    });

    // fill: model-strategy-driven column projection.
    VoxelGrid filled = run_stage("fill", [&] {
        if (config.fill_strategy == FillStrategy::None) return pruned;
        ColumnProjection projection;
        if (config.fill_strategy == FillStrategy::GearUp) {
            projection = project_columns(pruned, ProjectionDirection::Up, config.fill_projection_min_hit);
        } else {
            const std::int32_t middle = config.fill_middle_layer >= 0
                                            ? static_cast<std::int32_t>(config.fill_middle_layer)
                                            : -1;
            projection = project_columns(pruned, ProjectionDirection::Bidirectional,
                                         config.fill_projection_min_hit, middle);
        }
        VoxelGrid g = fill_gaps(pruned, projection);
        const fs::path path = out_dir / "grids" / "filled.csv";
        write_grid_csv(g, path);
        result.artifacts["fill"] = path.string();
        return g;
    });

    result.final_grid = filled;
    result.layer_count = filled.layer_count;

    PointCloud cloud = run_stage("to_cloud", [&] {
        PointCloud c = grid_to_cloud(filled);
        const fs::path path = out_dir / "clouds" / "uncorrected.csv";
        write_point_cloud_csv(c, path);
        result.artifacts["to_cloud"] = path.string();
        return c;
    });

    // Distortion model: from a file, fitted inline, or skipped.
    DistortionModel model;
    bool have_model = false;
    if (!config.distortion_model_path.empty()) {
        model = run_stage("load_distortion",
                          [&] { return load_distortion_model(config.distortion_model_path); });
        have_model = true;
    } else if (config.distortion_fit == DistortionFit::Inline) {
        model = run_stage("fit_distortion", [&] {
            std::vector<Point2> xy;
            xy.reserve(cloud.size());
            for (const PointXYZW& p : cloud.points) xy.push_back({p.x, p.y});
            const EllipseFit fit = fit_ellipse_pca(xy);
            DistortionModel m = derive_xy_distortion(fit, config.distortion_reference_radius);
            const fs::path path = out_dir / "distortion.json";
            save_distortion_model(m, path);
            result.artifacts["fit_distortion"] = path.string();
            return m;
        });
        have_model = true;
    }

    if (have_model) {
        cloud = run_stage("correct_xy", [&] {
            PointCloud c = apply_xy_correction(cloud, model);
            const fs::path path = out_dir / "clouds" / "xy_corrected.csv";
            write_point_cloud_csv(c, path);
            result.artifacts["correct_xy"] = path.string();
            return c;
        });
        cloud = run_stage("correct_z", [&] {
            PointCloud c = model.z_factor != 1.0 ? apply_z_correction(cloud, model.z_factor) : cloud;
            const fs::path path = out_dir / "clouds" / "z_corrected.csv";
            write_point_cloud_csv(c, path);
            result.artifacts["correct_z"] = path.string();
            return c;
        });
    }

    if (config.proportion_apply != ProportionApply::None) {
        cloud = run_stage("proportion", [&] {
            const bool astm = config.proportion_apply == ProportionApply::Astm;
            PointCloud c = proportion_correction(
                cloud,
                astm ? config.proportion_astm_length_over_diameter
                     : config.proportion_gear_diameter_over_height,
                astm ? RatioKind::LengthOverDiameter : RatioKind::DiameterOverHeight);
            const fs::path path = out_dir / "clouds" / "proportion_corrected.csv";
            write_point_cloud_csv(c, path);
            result.artifacts["proportion"] = path.string();
            return c;
        });
    }

    run_stage("export", [&] {
        const fs::path path = out_dir / "reconstructed.csv";
        write_point_cloud_csv(cloud, path);
        result.artifacts["export"] = path.string();
        return 0;
    });

    result.cloud = std::move(cloud);
    return result;
}

}  // namespace pbfrec
