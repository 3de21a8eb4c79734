#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pbfrec/errors.hpp"
#include "pbfrec/geometry.hpp"
#include "pbfrec/synth_sim.hpp"

using namespace pbfrec;

namespace {

std::vector<Point2> ellipse_points(double a, double b, double theta, double cx, double cy,
                                   std::size_t n = 360) {
    std::vector<Point2> pts;
    pts.reserve(n);
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        const double x = a * std::cos(t), y = b * std::sin(t);
        pts.push_back({cx + c * x - s * y, cy + s * x + c * y});
    }
    return pts;
}

constexpr std::array<double, 4> kPublishedMatrix{0.9556, 0.4137, 0.4137, 1.2881};
constexpr std::array<double, 4> kPublishedInverse{1.2155, -0.3904, -0.3904, 0.9017};

}  // namespace

TEST_CASE("ellipse fit: axis-aligned and rotated") {
    const EllipseFit fit = fit_ellipse_pca(ellipse_points(4.0, 2.0, 0.0, 0.0, 0.0));
    CHECK(std::abs(fit.center_x) <= 1e-9);
    CHECK(std::abs(fit.center_y) <= 1e-9);
    CHECK(fit.major_axis_length == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(fit.minor_axis_length == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::abs(fit.orientation_rad) <= 1e-6);

    const double theta = std::numbers::pi / 6.0;
    const EllipseFit rotated = fit_ellipse_pca(ellipse_points(4.0, 2.0, theta, 1.0, -2.0));
    CHECK(rotated.orientation_rad == doctest::Approx(theta).epsilon(1e-6));
    CHECK(rotated.center_x == doctest::Approx(1.0));
    CHECK(rotated.center_y == doctest::Approx(-2.0));
    CHECK(rotated.major_axis_length >= rotated.minor_axis_length);
}

TEST_CASE("ellipse fit: rotation equivariance mod pi") {
    std::mt19937 rng(97);
    std::uniform_real_distribution<double> angle(-1.5, 1.5);
    const auto base = ellipse_points(5.0, 1.5, 0.3, 0.0, 0.0, 257);
    const EllipseFit fit0 = fit_ellipse_pca(base);
    for (int trial = 0; trial < 20; ++trial) {
        const double phi = angle(rng);
        std::vector<Point2> rotated;
        rotated.reserve(base.size());
        const double c = std::cos(phi), s = std::sin(phi);
        for (const Point2& p : base) rotated.push_back({c * p.x - s * p.y, s * p.x + c * p.y});
        const EllipseFit fit = fit_ellipse_pca(rotated);
        double expected = fit0.orientation_rad + phi;
        while (expected > std::numbers::pi / 2) expected -= std::numbers::pi;
        while (expected <= -std::numbers::pi / 2) expected += std::numbers::pi;
        CHECK(fit.orientation_rad == doctest::Approx(expected).epsilon(1e-9));
        CHECK(fit.major_axis_length == doctest::Approx(fit0.major_axis_length).epsilon(1e-9));
        CHECK(fit.minor_axis_length == doctest::Approx(fit0.minor_axis_length).epsilon(1e-9));
    }
}

TEST_CASE("ellipse fit: degenerate inputs rejected") {
    std::vector<Point2> line;
    for (int i = 0; i < 10; ++i) line.push_back({static_cast<double>(i), 2.0 * i + 1.0});
    CHECK_THROWS_AS(fit_ellipse_pca(line), DataError);
    CHECK_THROWS_AS(fit_ellipse_pca(std::vector<Point2>{{0, 0}, {1, 1}}), DataError);
}

TEST_CASE("distortion derivation: identity, diagonal and published values") {
    EllipseFit round;
    round.major_axis_length = 100.0;
    round.minor_axis_length = 100.0;
    round.orientation_rad = 0.7;
    const DistortionModel identity = derive_xy_distortion(round, 100.0);
    CHECK(identity.xy_matrix[0] == doctest::Approx(1.0));
    CHECK(identity.xy_matrix[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(identity.xy_matrix[3] == doctest::Approx(1.0));

    EllipseFit stretched;
    stretched.major_axis_length = 200.0;
    stretched.minor_axis_length = 100.0;
    stretched.orientation_rad = 0.0;
    const DistortionModel diagonal = derive_xy_distortion(stretched, 100.0);
    CHECK(diagonal.xy_matrix[0] == doctest::Approx(2.0));
    CHECK(diagonal.xy_matrix[1] == doctest::Approx(0.0));
    CHECK(diagonal.xy_matrix[3] == doctest::Approx(1.0));

    EllipseFit published;
    published.center_x = 9.0864;
    published.center_y = 17.4401;
    published.major_axis_length = 156.7775;
    published.minor_axis_length = 67.5955;
    published.orientation_rad = 0.9765;
    const DistortionModel model = derive_xy_distortion(published, 100.0);
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(model.xy_matrix[i] - kPublishedMatrix[i]) <= 2e-3);

    const std::array<double, 4> inverse = invert_2x2(model.xy_matrix);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(inverse[i] - kPublishedInverse[i]) <= 5e-4);
}

TEST_CASE("reference circle maps onto the fitted ellipse boundary") {
    EllipseFit fit;
    fit.major_axis_length = 156.7775;
    fit.minor_axis_length = 67.5955;
    fit.orientation_rad = 0.9765;
    const DistortionModel model = derive_xy_distortion(fit, 100.0);
    const double c = std::cos(fit.orientation_rad), s = std::sin(fit.orientation_rad);
    for (int k = 0; k < 64; ++k) {
        const double t = 2.0 * std::numbers::pi * k / 64.0;
        const double x = 100.0 * std::cos(t), y = 100.0 * std::sin(t);
        const double mx = model.xy_matrix[0] * x + model.xy_matrix[1] * y;
        const double my = model.xy_matrix[2] * x + model.xy_matrix[3] * y;
        const double u = (c * mx + s * my) / fit.major_axis_length;
        const double v = (-s * mx + c * my) / fit.minor_axis_length;
        CHECK(std::abs(u * u + v * v - 1.0) <= 1e-6);
    }
}

TEST_CASE("XY correction: identity matrix, inverse round trip") {
    PointCloud cloud;
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> coord(-50.0, 50.0);
    for (int i = 0; i < 500; ++i) cloud.points.push_back({coord(rng), coord(rng), coord(rng), 2});

    DistortionModel identity;
    const PointCloud same = apply_xy_correction(cloud, identity);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(same.points[i].x == doctest::Approx(cloud.points[i].x));
        CHECK(same.points[i].y == doctest::Approx(cloud.points[i].y));
    }

    DistortionModel model;
    model.xy_matrix = kPublishedMatrix;
    model.center_x = 9.0864;
    model.center_y = 17.4401;
    PointCloud distorted = cloud;
    for (PointXYZW& p : distorted.points) {
        const double dx = p.x - model.center_x, dy = p.y - model.center_y;
        p.x = model.xy_matrix[0] * dx + model.xy_matrix[1] * dy + model.center_x;
        p.y = model.xy_matrix[2] * dx + model.xy_matrix[3] * dy + model.center_y;
    }
    const PointCloud corrected = apply_xy_correction(distorted, model);
    REQUIRE(corrected.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(std::abs(corrected.points[i].x - cloud.points[i].x) <= 1e-9);
        CHECK(std::abs(corrected.points[i].y - cloud.points[i].y) <= 1e-9);
        CHECK(corrected.points[i].z == cloud.points[i].z);
        CHECK(corrected.points[i].weight == cloud.points[i].weight);
    }

    DistortionModel singular;
    singular.xy_matrix = {1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(apply_xy_correction(cloud, singular), DataError);
}

TEST_CASE("axis line fit") {
    std::vector<Point2> diagonal, flat, vertical;
    for (int i = 0; i < 20; ++i) {
        diagonal.push_back({static_cast<double>(i), static_cast<double>(i)});
        flat.push_back({static_cast<double>(i), 0.0});
        vertical.push_back({3.0, static_cast<double>(i)});
    }
    CHECK(fit_axis_line(diagonal) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-9));
    CHECK(fit_axis_line(flat) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_axis_line(vertical), DataError);

    // Translation invariance.
    std::vector<Point2> shifted = diagonal;
    for (Point2& p : shifted) {
        p.x += 123.0;
        p.y -= 45.0;
    }
    CHECK(fit_axis_line(shifted) == doctest::Approx(fit_axis_line(diagonal)).epsilon(1e-12));
}

TEST_CASE("z factor: published extents, sphere symmetry") {
    PointCloud spanning;
    spanning.points.push_back({0.0, 0.0, 0.0, 1});
    spanning.points.push_back({0.0, 53.5345, 100.0, 1});
    CHECK(std::abs(derive_z_factor(spanning, 0.0) - 1.8866) <= 1e-3);

    // Voxel ball: z covers R..-R inclusive (2R+1 layers), y extent 2R.
    PointCloud ball;
    const int radius = 32;
    for (int x = -radius; x <= radius; ++x)
        for (int y = -radius; y <= radius; ++y)
            for (int z = -radius; z <= radius; ++z)
                if (x * x + y * y + z * z <= radius * radius)
                    ball.points.push_back(
                        {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z), 1});
    CHECK(derive_z_factor(ball, 0.0) == doctest::Approx(1.0).epsilon(0.02));

    CHECK_THROWS_AS(derive_z_factor(PointCloud{}, 0.0), DataError);
    PointCloud degenerate;
    degenerate.points.push_back({1.0, 2.0, 3.0, 1});
    CHECK_THROWS_AS(derive_z_factor(degenerate, 0.0), DataError);
}

TEST_CASE("z factor recovered from a simulated layer-stretched print") {
    // Box sized so transverse extent equals the unstretched layer count.
    const VoxelGrid model = make_box_model(30, 31, 30);
    SimConfig cfg;
    cfg.raster_size_volts = 0.1;
    cfg.samples_per_cell = 4;
    cfg.z_stretch = 1.8;
    const SimResult sim = simulate_print_trace(model, cfg, 21);
    CHECK(sim.ground_truth.layer_count == 54);

    const BinaryLaserSignal laser = normalize_laser(sim.trace.laser, {2.2, 1.1});
    const VoxelGrid grid = rasterize_layers(laser, sim.trace.galvo_x, sim.trace.galvo_y,
                                            segment_layers(laser, {1000}), {0.1});
    const PointCloud cloud = grid_to_cloud(grid);
    std::vector<Point2> xy;
    for (const PointXYZW& p : cloud.points) xy.push_back({p.x, p.y});
    const double theta = fit_axis_line(xy);
    CHECK(derive_z_factor(cloud, theta) == doctest::Approx(1.8).epsilon(0.03));
}

TEST_CASE("z correction: divide, identity, inverse") {
    PointCloud cloud;
    cloud.points.push_back({1.0, 2.0, 10.0, 1});
    const PointCloud halved = apply_z_correction(cloud, 2.0);
    CHECK(halved.points[0].z == doctest::Approx(5.0));
    CHECK(halved.points[0].x == 1.0);

    const PointCloud same = apply_z_correction(cloud, 1.0);
    CHECK(same.points[0].z == 10.0);

    const PointCloud back = apply_z_correction(apply_z_correction(cloud, 1.8866), 1.0 / 1.8866);
    CHECK(std::abs(back.points[0].z - 10.0) <= 1e-12);

    CHECK_THROWS_AS(apply_z_correction(cloud, 0.0), ConfigError);
}

TEST_CASE("proportion correction: fixed point, cube stretching, measured ratio") {
    PointCloud bar = grid_to_cloud(make_astm_bar_model(60, 21));
    const double current = measure_ratio(bar, RatioKind::LengthOverDiameter);
    const PointCloud unchanged = proportion_correction(bar, current, RatioKind::LengthOverDiameter);
    for (std::size_t i = 0; i < bar.size(); ++i) {
        CHECK(std::abs(unchanged.points[i].x - bar.points[i].x) <= 1e-9);
        CHECK(std::abs(unchanged.points[i].y - bar.points[i].y) <= 1e-9);
    }

    PointCloud cube;
    for (int x : {0, 1})
        for (int y : {0, 1})
            for (int z : {0, 1})
                cube.points.push_back(
                    {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z), 1});
    const PointCloud doubled = proportion_correction(cube, 2.0, RatioKind::LengthOverDiameter);
    CHECK(measure_ratio(doubled, RatioKind::LengthOverDiameter) == doctest::Approx(2.0).epsilon(1e-9));
    // The denominator (transverse) axis is held fixed.
    double min_y = 1e300, max_y = -1e300, min_z = 1e300, max_z = -1e300;
    for (const PointXYZW& p : doubled.points) {
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
        min_z = std::min(min_z, p.z);
        max_z = std::max(max_z, p.z);
    }
    CHECK(max_y - min_y == doctest::Approx(1.0));
    CHECK(max_z - min_z == doctest::Approx(1.0));

    const PointCloud corrected = proportion_correction(bar, 6.7222, RatioKind::LengthOverDiameter);
    CHECK(std::abs(measure_ratio(corrected, RatioKind::LengthOverDiameter) - 6.7222) <= 1e-3);
    CHECK(corrected.size() == bar.size());

    const PointCloud gear_like = grid_to_cloud(make_gear_model(30, 12, 6));
    const PointCloud gear_fixed =
        proportion_correction(gear_like, 3.8629, RatioKind::DiameterOverHeight);
    CHECK(measure_ratio(gear_fixed, RatioKind::DiameterOverHeight) ==
          doctest::Approx(3.8629).epsilon(1e-6));

    CHECK_THROWS_AS(proportion_correction(cube, 0.0, RatioKind::LengthOverDiameter), ConfigError);
}

TEST_CASE("grid_to_cloud maps cells to weighted points") {
    CHECK(grid_to_cloud(VoxelGrid{}).empty());

    VoxelGrid g;
    g.layer_count = 3;
    g.cells[{2, 3, 1}] = 4;
    const PointCloud cloud = grid_to_cloud(g);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.points[0].x == 3.0);
    CHECK(cloud.points[0].y == 1.0);
    CHECK(cloud.points[0].z == 2.0);
    CHECK(cloud.points[0].weight == 4);

    std::mt19937 rng(107);
    const VoxelGrid random = oracles::random_grid(rng, 9, 9, 4, 0.4);
    CHECK(grid_to_cloud(random).size() == random.occupied_count());
}

TEST_CASE("distortion model JSON round trip") {
    DistortionModel model;
    model.xy_matrix = kPublishedMatrix;
    model.center_x = 9.0864;
    model.center_y = 17.4401;
    model.z_factor = 1.8866;
    model.reference_radius = 100.0;
    const auto path = oracles::temp_dir("geometry") / "model.json";
    save_distortion_model(model, path);
    const DistortionModel loaded = load_distortion_model(path);
    for (int i = 0; i < 4; ++i) CHECK(loaded.xy_matrix[i] == model.xy_matrix[i]);
    CHECK(loaded.center_x == model.center_x);
    CHECK(loaded.z_factor == model.z_factor);
    CHECK(loaded.reference_radius == model.reference_radius);
}

TEST_CASE("injected distortion is recovered within 5% Frobenius distance") {
    const VoxelGrid model = make_cylinder_model(40, 3);
    SimConfig cfg;
    cfg.raster_size_volts = 0.1;
    cfg.samples_per_cell = 4;
    AffineXY distortion;
    distortion.matrix = kPublishedMatrix;
    cfg.xy_distortion = distortion;
    const SimResult sim = simulate_print_trace(model, cfg, 29);

    const BinaryLaserSignal laser = normalize_laser(sim.trace.laser, {2.2, 1.1});
    const VoxelGrid grid = rasterize_layers(laser, sim.trace.galvo_x, sim.trace.galvo_y,
                                            segment_layers(laser, {1000}), {0.1});
    std::vector<Point2> xy;
    for (const auto& [key, hits] : grid.cells)
        xy.push_back({static_cast<double>(key.rx), static_cast<double>(key.ry)});
    const EllipseFit fit = fit_ellipse_pca(xy);
    // The printed disk's radius in cells is known ground truth.
    const double disk_radius = 40.0 / 2.0 - 0.5;
    const DistortionModel recovered = derive_xy_distortion(fit, disk_radius);

    double err = 0.0, norm = 0.0;
    for (int i = 0; i < 4; ++i) {
        err += (recovered.xy_matrix[i] - kPublishedMatrix[i]) *
               (recovered.xy_matrix[i] - kPublishedMatrix[i]);
        norm += kPublishedMatrix[i] * kPublishedMatrix[i];
    }
    CHECK(std::sqrt(err / norm) <= 0.05);
}
