#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <utility>

#include "pbfrec/rasterizer.hpp"
#include "pbfrec/trace_io.hpp"

namespace pbfrec {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Tight enclosing ellipse of a 2D point set, on principal axes. Axis lengths
/// are the maximum absolute principal coordinates, so the ellipse touches the
/// extreme points along each axis. Orientation normalized to (-pi/2, pi/2].
struct EllipseFit {
    double center_x = 0.0;
    double center_y = 0.0;
    double major_axis_length = 0.0;
    double minor_axis_length = 0.0;
    double orientation_rad = 0.0;
};

/// Global linear distortion: a symmetric 2x2 matrix (row-major) that maps a
/// reference circle onto the observed ellipse around xy_center, plus the Z
/// elongation factor.
struct DistortionModel {
    std::array<double, 4> xy_matrix{1.0, 0.0, 0.0, 1.0};
    double center_x = 0.0;
    double center_y = 0.0;
    double z_factor = 1.0;
    double reference_radius = 100.0;
};

/// PCA-based minimal fitting ellipse: center = mean, orientation = principal
/// eigenvector angle, axis lengths = extreme principal coordinates.
EllipseFit fit_ellipse_pca(std::span<const Point2> points);

/// Distortion matrix R(theta) * diag(A/r, B/r) * R(theta)^T derived from the
/// fitted ellipse against a reference circle of radius r.
DistortionModel derive_xy_distortion(const EllipseFit& fit, double reference_radius);

/// Applies the inverse affine correction p' = M^-1 (p - C) + C to every
/// point's (x, y); z and weight are untouched.
PointCloud apply_xy_correction(const PointCloud& cloud, const DistortionModel& model);

/// Inclination angle of the degree-1 least-squares fit through the points.
/// An all-equal-x point set describes a vertical line (theta = pi/2), which
/// the slope fit cannot represent; it is reported as a degeneracy error.
double fit_axis_line(std::span<const Point2> points);

/// Z elongation factor: rotate XY by -theta, then (max z - min z + 1) divided
/// by the rotated-Y extent. z holds layer indices at this pipeline stage,
/// hence the +1.
double derive_z_factor(const PointCloud& cloud, double theta_rad);

/// Divides every z coordinate by the elongation factor.
PointCloud apply_z_correction(const PointCloud& cloud, double factor);

enum class RatioKind { LengthOverDiameter, DiameterOverHeight };

/// Anisotropic rescaling in the cloud's principal frame until the measured
/// ratio equals target_ratio; the denominator axis of the ratio is held
/// fixed. LengthOverDiameter scales the principal XY axis against the
/// transverse extent; DiameterOverHeight scales XY uniformly against Z.
PointCloud proportion_correction(const PointCloud& cloud, double target_ratio, RatioKind kind);

/// One point per occupied cell at (rx, ry, layer) with weight = hit count,
/// in deterministic order.
PointCloud grid_to_cloud(const VoxelGrid& grid);

/// Measured ratio of a cloud under the same conventions as
/// proportion_correction (useful for reporting and tests).
double measure_ratio(const PointCloud& cloud, RatioKind kind);

void save_distortion_model(const DistortionModel& model, const std::filesystem::path& path);
DistortionModel load_distortion_model(const std::filesystem::path& path);

/// 2x2 helpers shared by the distortion code paths.
std::array<double, 4> invert_2x2(const std::array<double, 4>& m);

}  // namespace pbfrec
