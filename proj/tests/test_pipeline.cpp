#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "oracles.hpp"
#include "pbfrec/errors.hpp"
#include "pbfrec/geometry.hpp"
#include "pbfrec/pipeline.hpp"
#include "pbfrec/synth_sim.hpp"
#include "pbfrec/trace_io.hpp"

using namespace pbfrec;

#ifndef PBFREC_SOURCE_DIR
#define PBFREC_SOURCE_DIR "."
#endif

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::filesystem::path make_sim_trace(const std::string& name, std::uint64_t seed,
                                     double noise = 0.0) {
    const VoxelGrid model = make_gear_model(20, 6, 6);
    SimConfig cfg;
    cfg.raster_size_volts = 0.1;
    cfg.samples_per_cell = 6;
    cfg.noise_sigma_volts = noise;
    const SimResult sim = simulate_print_trace(model, cfg, seed);
    const auto path = oracles::temp_dir("pipeline") / name;
    write_trace_csv(sim.trace, path);
    return path;
}

}  // namespace

TEST_CASE("mode profiles carry the documented pruning defaults") {
    const PipelineConfig simple = PipelineConfig::defaults(PipelineMode::Simple);
    CHECK(simple.prune_min_hit == 1);
    CHECK(simple.prune_range == 5);
    CHECK(simple.prune_min_neighbors == 33);

    const PipelineConfig differential = PipelineConfig::defaults(PipelineMode::Differential);
    CHECK(differential.prune_min_hit == 3);
    CHECK(differential.prune_range == 4);
    CHECK(differential.prune_min_neighbors == 22);

    CHECK(simple.laser_threshold_on == 2.2);
    CHECK(simple.laser_threshold_off == 1.1);
    CHECK(simple.filter_cutoff_hz == 6000.0);
    CHECK(simple.raster_size_volts == 0.0025);
}

TEST_CASE("config parsing: key=value, JSON, overrides, unknown keys") {
    const PipelineConfig kv = parse_config_text("# comment\nmode = differential\nprune.min_hit = 4\n");
    CHECK(kv.mode == PipelineMode::Differential);
    CHECK(kv.prune_min_hit == 4);
    CHECK(kv.prune_range == 4);  // differential default survives

    // The mode key applies first regardless of its position in the file.
    const PipelineConfig reordered = parse_config_text("prune.min_hit = 4\nmode = differential\n");
    CHECK(reordered.prune_min_hit == 4);
    CHECK(reordered.prune_min_neighbors == 22);

    const PipelineConfig json =
        parse_config_text(R"({"mode": "differential", "prune.min_hit": 5, "laser.threshold_on": 2.4})");
    CHECK(json.mode == PipelineMode::Differential);
    CHECK(json.prune_min_hit == 5);
    CHECK(json.laser_threshold_on == 2.4);

    CHECK_THROWS_AS(parse_config_text("nonsense.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("prune.min_hit = not_a_number\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("mode = hybrid\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("prune.min_hit\n"), ConfigError);

    PipelineConfig overridden = PipelineConfig::defaults(PipelineMode::Simple);
    apply_override(overridden, "raster.size_volts", "0.005");
    CHECK(overridden.raster_size_volts == 0.005);
    CHECK_THROWS_AS(apply_override(overridden, "bogus", "1"), ConfigError);
}

TEST_CASE("config serialization round-trips semantically") {
    PipelineConfig config = PipelineConfig::defaults(PipelineMode::Differential);
    config.input_traces = {"a.csv", "b.csv"};
    config.fill_strategy = FillStrategy::AstmBidirectional;
    config.proportion_apply = ProportionApply::Astm;
    config.sim_z_stretch = 1.5;
    const std::string text = serialize_config(config);
    const PipelineConfig reparsed = parse_config_text(text);
    CHECK(serialize_config(reparsed) == text);
    CHECK(reparsed.input_traces == config.input_traces);
    CHECK(reparsed.fill_strategy == config.fill_strategy);
}

TEST_CASE("validate_config reports violations naming key and constraint") {
    PipelineConfig config = PipelineConfig::defaults(PipelineMode::Simple);
    CHECK(validate_config(config).empty());
    CHECK(validate_config(PipelineConfig::defaults(PipelineMode::Differential)).empty());

    config.laser_threshold_on = 1.0;
    config.laser_threshold_off = 2.0;
    auto violations = validate_config(config);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("laser.threshold_on") != std::string::npos);

    config = PipelineConfig::defaults(PipelineMode::Simple);
    config.prune_min_neighbors = 121;
    violations = validate_config(config);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].find("120") != std::string::npos);
    config.prune_min_neighbors = 120;
    CHECK(validate_config(config).empty());

    config = PipelineConfig::defaults(PipelineMode::Simple);
    config.filter_cutoff_hz = 10000.0;
    CHECK(validate_config(config).size() == 1);

    config = PipelineConfig::defaults(PipelineMode::Simple);
    config.sim_layer_gap_samples = 900;  // below segmentation threshold
    CHECK_FALSE(validate_config(config).empty());
}

TEST_CASE("shipped profiles parse cleanly and match the documented parameters") {
    const std::filesystem::path configs = std::filesystem::path(PBFREC_SOURCE_DIR) / "configs";
    const PipelineConfig simple = load_config_file(configs / "simple.cfg");
    CHECK(validate_config(simple).empty());
    CHECK(simple.mode == PipelineMode::Simple);
    CHECK(simple.laser_threshold_on == 2.2);
    CHECK(simple.laser_threshold_off == 1.1);
    CHECK(simple.filter_cutoff_hz == 6000.0);
    CHECK(simple.raster_size_volts == 0.0025);
    CHECK(simple.prune_min_hit == 1);
    CHECK(simple.prune_range == 5);
    CHECK(simple.prune_min_neighbors == 33);
    CHECK(simple.proportion_astm_length_over_diameter == 6.7222);
    CHECK(simple.proportion_gear_diameter_over_height == 3.8629);

    const PipelineConfig differential = load_config_file(configs / "differential.cfg");
    CHECK(validate_config(differential).empty());
    CHECK(differential.prune_min_hit == 3);
    CHECK(differential.prune_range == 4);
    CHECK(differential.prune_min_neighbors == 22);

    // Both profiles reference the shared distortion model; its inverse matrix
    // and Z factor match the documented calibration.
    const DistortionModel model = load_distortion_model(simple.distortion_model_path);
    const std::array<double, 4> inverse = invert_2x2(model.xy_matrix);
    const std::array<double, 4> expected{1.2155, -0.3904, -0.3904, 0.9017};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(inverse[i] - expected[i]) <= 5e-4);
    CHECK(model.z_factor == doctest::Approx(1.8866));
}

TEST_CASE("run_pipeline persists every stage artifact") {
    const auto trace = make_sim_trace("basic.csv", 7);
    PipelineConfig config = PipelineConfig::defaults(PipelineMode::Simple);
    config.input_traces = {trace.string()};
    config.output_dir = (oracles::temp_dir("pipeline") / "out_basic").string();
    config.raster_size_volts = 0.1;
    config.fill_strategy = FillStrategy::GearUp;

    const PipelineResult result = run_pipeline(config);
    CHECK(result.cloud.size() > 0);
    CHECK(result.layer_count == 6);
    for (const char* stage : {"preprocess:0", "segment:0", "calibrate", "rasterize:0", "prune",
                              "fill", "to_cloud", "export"}) {
        INFO(stage);
        REQUIRE(result.artifacts.count(stage) == 1);
        CHECK(std::filesystem::exists(result.artifacts.at(stage)));
    }
    CHECK(result.artifacts.count("diff") == 0);  // simple mode has no merge
}

TEST_CASE("pipeline re-runs are byte-identical") {
    const auto trace = make_sim_trace("repro.csv", 19, 0.01);
    PipelineConfig config = PipelineConfig::defaults(PipelineMode::Simple);
    config.input_traces = {trace.string()};
    config.raster_size_volts = 0.1;
    config.fill_strategy = FillStrategy::GearUp;

    config.output_dir = (oracles::temp_dir("pipeline") / "out_a").string();
    const PipelineResult a = run_pipeline(config);
    config.output_dir = (oracles::temp_dir("pipeline") / "out_b").string();
    const PipelineResult b = run_pipeline(config);
    CHECK(read_file(a.artifacts.at("export")) == read_file(b.artifacts.at("export")));
    CHECK(read_file(a.artifacts.at("prune")) == read_file(b.artifacts.at("prune")));
}

TEST_CASE("differential pipeline merges three traces") {
    std::vector<std::string> traces;
    for (int i = 0; i < 3; ++i)
        traces.push_back(make_sim_trace("diff" + std::to_string(i) + ".csv", 100 + i, 0.01).string());
    PipelineConfig config = PipelineConfig::defaults(PipelineMode::Differential);
    config.input_traces = traces;
    config.output_dir = (oracles::temp_dir("pipeline") / "out_diff").string();
    config.raster_size_volts = 0.1;

    const PipelineResult result = run_pipeline(config);
    CHECK(result.artifacts.count("diff") == 1);
    const VoxelGrid merged = load_grid_csv(result.artifacts.at("diff"));
    // Aggregated hits: every surviving cell collected >= 3 hits.
    const VoxelGrid pruned = load_grid_csv(result.artifacts.at("prune"));
    for (const auto& [key, hits] : pruned.cells) CHECK(hits >= 3);
    CHECK(merged.layer_count == 6);
}

TEST_CASE("pipeline errors carry the failing stage name") {
    PipelineConfig config = PipelineConfig::defaults(PipelineMode::Simple);
    config.input_traces = {"/nonexistent/trace.csv"};
    config.output_dir = (oracles::temp_dir("pipeline") / "out_err").string();
    try {
        run_pipeline(config);
        FAIL("expected stage error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("stage preprocess") != std::string::npos);
    }

    PipelineConfig invalid = PipelineConfig::defaults(PipelineMode::Simple);
    invalid.input_traces = {"x.csv"};
    invalid.prune_min_neighbors = 500;
    CHECK_THROWS_AS(run_pipeline(invalid), ConfigError);

    PipelineConfig no_inputs = PipelineConfig::defaults(PipelineMode::Simple);
    CHECK_THROWS_AS(run_pipeline(no_inputs), ConfigError);
}

TEST_CASE("CLI exit codes: 0 success, 2 config error, 3 data error") {
    const char* cli = std::getenv("PBFREC_CLI");
    if (!cli) {
        MESSAGE("PBFREC_CLI not set; skipping CLI exit-code checks");
        return;
    }
    const std::string base(cli);
    const auto dir = oracles::temp_dir("pipeline_cli");
    auto run = [&](const std::string& args) {
        const std::string cmd = base + " " + args + " > /dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("--set bogus.key=1 run") == 2);
    CHECK(run("--set input.traces=/missing/file.csv run --set output.dir=" + (dir / "o1").string()) ==
          3);
    const std::string trace = (dir / "t.csv").string();
    CHECK(run("simulate --model box:4x4x2 --out-trace " + trace) == 0);
    CHECK(run("--set input.traces=" + trace + " --set raster.size_volts=0.1 --set output.dir=" +
              (dir / "o2").string() + " run") == 0);
}
