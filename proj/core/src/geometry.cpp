#include "pbfrec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "pbfrec/errors.hpp"

namespace pbfrec {

namespace {

struct Covariance2 {
    double mean_x = 0.0, mean_y = 0.0;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
};

Covariance2 covariance(std::span<const Point2> points) {
    Covariance2 c;
    const double n = static_cast<double>(points.size());
    for (const Point2& p : points) {
        c.mean_x += p.x;
        c.mean_y += p.y;
    }
    c.mean_x /= n;
    c.mean_y /= n;
    for (const Point2& p : points) {
        const double dx = p.x - c.mean_x;
        const double dy = p.y - c.mean_y;
        c.sxx += dx * dx;
        c.sxy += dx * dy;
        c.syy += dy * dy;
    }
    c.sxx /= n;
    c.sxy /= n;
    c.syy /= n;
    return c;
}

double normalize_half_pi(double theta) {
    while (theta > std::numbers::pi / 2) theta -= std::numbers::pi;
    while (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
    return theta;
}

// Principal-axis angle of a 2x2 covariance; 0 for an isotropic spread.
double principal_angle(const Covariance2& c) {
    return 0.5 * std::atan2(2.0 * c.sxy, c.sxx - c.syy);
}

}  // namespace

EllipseFit fit_ellipse_pca(std::span<const Point2> points) {
    if (points.size() < 3)
        throw DataError("ellipse fit requires at least 3 points");

    const Covariance2 c = covariance(points);
    const double half_trace = 0.5 * (c.sxx + c.syy);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (c.sxx - c.syy) * (c.sxx - c.syy) + c.sxy * c.sxy));
    const double lambda_max = half_trace + disc;
    const double lambda_min = half_trace - disc;
    if (lambda_max <= 0.0 || lambda_min <= 1e-12 * lambda_max)
        throw DataError("degenerate point set: collinear or coincident points");

    double theta = principal_angle(c);
    double cos_t = std::cos(theta);
    double sin_t = std::sin(theta);

    double extent_major = 0.0;
    double extent_minor = 0.0;
    for (const Point2& p : points) {
        const double dx = p.x - c.mean_x;
        const double dy = p.y - c.mean_y;
        extent_major = std::max(extent_major, std::abs(cos_t * dx + sin_t * dy));
        extent_minor = std::max(extent_minor, std::abs(-sin_t * dx + cos_t * dy));
    }
    if (extent_minor > extent_major) {
        std::swap(extent_major, extent_minor);
        theta = normalize_half_pi(theta + std::numbers::pi / 2);
    }
    if (extent_minor <= 0.0)
        throw DataError("degenerate point set: zero minor extent");

    EllipseFit fit;
    fit.center_x = c.mean_x;
    fit.center_y = c.mean_y;
    fit.major_axis_length = extent_major;
    fit.minor_axis_length = extent_minor;
    fit.orientation_rad = normalize_half_pi(theta);
    return fit;
}

DistortionModel derive_xy_distortion(const EllipseFit& fit, double reference_radius) {
    if (reference_radius <= 0.0)
        throw ConfigError("reference radius must be positive");
    if (fit.major_axis_length <= 0.0 || fit.minor_axis_length <= 0.0)
        throw DataError("degenerate ellipse: zero axis length");

    const double a = fit.major_axis_length / reference_radius;
    const double b = fit.minor_axis_length / reference_radius;
    const double c = std::cos(fit.orientation_rad);
    const double s = std::sin(fit.orientation_rad);

    DistortionModel model;
    model.xy_matrix = {a * c * c + b * s * s, (a - b) * c * s,  //
                       (a - b) * c * s, a * s * s + b * c * c};
    model.center_x = fit.center_x;
    model.center_y = fit.center_y;
    model.reference_radius = reference_radius;
    return model;
}

std::array<double, 4> invert_2x2(const std::array<double, 4>& m) {
    const double det = m[0] * m[3] - m[1] * m[2];
    if (std::abs(det) <= 1e-9)
        throw DataError("singular 2x2 matrix");
    return {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
}

PointCloud apply_xy_correction(const PointCloud& cloud, const DistortionModel& model) {
    const std::array<double, 4> inv = invert_2x2(model.xy_matrix);
    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const PointXYZW& p : cloud.points) {
        const double dx = p.x - model.center_x;
        const double dy = p.y - model.center_y;
        PointXYZW q = p;
        q.x = inv[0] * dx + inv[1] * dy + model.center_x;
        q.y = inv[2] * dx + inv[3] * dy + model.center_y;
        out.points.push_back(q);
    }
    return out;
}

double fit_axis_line(std::span<const Point2> points) {
    if (points.size() < 2)
        throw DataError("line fit requires at least 2 points");
    const Covariance2 c = covariance(points);
    if (c.sxx <= 1e-12 * std::max(c.syy, 1e-30))
        throw DataError("degenerate line fit: all x values equal (vertical line, theta = pi/2)");
    return std::atan(c.sxy / c.sxx);
}

double derive_z_factor(const PointCloud& cloud, double theta_rad) {
    if (cloud.empty())
        throw DataError("cannot derive z factor from an empty cloud");

    const double cos_t = std::cos(theta_rad);
    const double sin_t = std::sin(theta_rad);
    double min_y = std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    double min_z = std::numeric_limits<double>::infinity();
    double max_z = -std::numeric_limits<double>::infinity();
    for (const PointXYZW& p : cloud.points) {
        const double rotated_y = -sin_t * p.x + cos_t * p.y;
        min_y = std::min(min_y, rotated_y);
        max_y = std::max(max_y, rotated_y);
        min_z = std::min(min_z, p.z);
        max_z = std::max(max_z, p.z);
    }
    const double delta_y = max_y - min_y;
    const double delta_z = max_z - min_z + 1.0;
    if (delta_y <= 0.0)
        throw DataError("degenerate cloud: zero transverse extent");
    return delta_z / delta_y;
}

PointCloud apply_z_correction(const PointCloud& cloud, double factor) {
    if (factor <= 0.0)
        throw ConfigError("z correction factor must be positive");
    PointCloud out = cloud;
    for (PointXYZW& p : out.points) p.z /= factor;
    return out;
}

namespace {

struct Extents {
    double principal = 0.0;   // along the XY principal axis
    double transverse = 0.0;  // across it
    double z = 0.0;
    double theta = 0.0;
    double cx = 0.0, cy = 0.0, cz = 0.0;
};

Extents principal_extents(const PointCloud& cloud) {
    std::vector<Point2> xy;
    xy.reserve(cloud.points.size());
    for (const PointXYZW& p : cloud.points) xy.push_back({p.x, p.y});
    const Covariance2 c = covariance(xy);

    Extents e;
    e.theta = principal_angle(c);
    e.cx = c.mean_x;
    e.cy = c.mean_y;
    const double cos_t = std::cos(e.theta);
    const double sin_t = std::sin(e.theta);

    double min_p = std::numeric_limits<double>::infinity(), max_p = -min_p;
    double min_t = min_p, max_t = -min_p;
    double min_z = min_p, max_z = -min_p;
    double sum_z = 0.0;
    for (const PointXYZW& p : cloud.points) {
        const double dx = p.x - e.cx;
        const double dy = p.y - e.cy;
        const double along = cos_t * dx + sin_t * dy;
        const double across = -sin_t * dx + cos_t * dy;
        min_p = std::min(min_p, along);
        max_p = std::max(max_p, along);
        min_t = std::min(min_t, across);
        max_t = std::max(max_t, across);
        min_z = std::min(min_z, p.z);
        max_z = std::max(max_z, p.z);
        sum_z += p.z;
    }
    e.principal = max_p - min_p;
    e.transverse = max_t - min_t;
    e.z = max_z - min_z;
    e.cz = sum_z / static_cast<double>(cloud.points.size());
    return e;
}

}  // namespace

double measure_ratio(const PointCloud& cloud, RatioKind kind) {
    if (cloud.empty())
        throw DataError("cannot measure ratio of an empty cloud");
    const Extents e = principal_extents(cloud);
    if (kind == RatioKind::LengthOverDiameter) {
        if (e.transverse <= 0.0)
            throw DataError("degenerate cloud: zero diameter extent");
        return e.principal / e.transverse;
    }
    if (e.z <= 0.0)
        throw DataError("degenerate cloud: zero height extent");
    return std::max(e.principal, e.transverse) / e.z;
}

PointCloud proportion_correction(const PointCloud& cloud, double target_ratio, RatioKind kind) {
    if (target_ratio <= 0.0)
        throw ConfigError("target ratio must be positive");
    if (cloud.empty())
        throw DataError("cannot correct proportions of an empty cloud");

    const Extents e = principal_extents(cloud);
    const double cos_t = std::cos(e.theta);
    const double sin_t = std::sin(e.theta);

    double scale_along = 1.0;
    double scale_across = 1.0;
    if (kind == RatioKind::LengthOverDiameter) {
        if (e.principal <= 0.0 || e.transverse <= 0.0)
            throw DataError("degenerate cloud: zero extent on a ratio dimension");
        scale_along = target_ratio / (e.principal / e.transverse);
    } else {
        const double diameter = std::max(e.principal, e.transverse);
        if (diameter <= 0.0 || e.z <= 0.0)
            throw DataError("degenerate cloud: zero extent on a ratio dimension");
        const double factor = target_ratio / (diameter / e.z);
        scale_along = factor;
        scale_across = factor;
    }

    PointCloud out;
    out.points.reserve(cloud.points.size());
    for (const PointXYZW& p : cloud.points) {
        const double dx = p.x - e.cx;
        const double dy = p.y - e.cy;
        const double along = (cos_t * dx + sin_t * dy) * scale_along;
        const double across = (-sin_t * dx + cos_t * dy) * scale_across;
        PointXYZW q = p;
        q.x = e.cx + cos_t * along - sin_t * across;
        q.y = e.cy + sin_t * along + cos_t * across;
        out.points.push_back(q);
    }
    return out;
}

PointCloud grid_to_cloud(const VoxelGrid& grid) {
    PointCloud cloud;
    cloud.points.reserve(grid.cells.size());
    for (const auto& [key, hits] : grid.sorted_cells()) {
        PointXYZW p;
        p.x = static_cast<double>(key.rx);
        p.y = static_cast<double>(key.ry);
        p.z = static_cast<double>(key.layer);
        p.weight = hits;
        cloud.points.push_back(p);
    }
    return cloud;
}

void save_distortion_model(const DistortionModel& model, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["xy_matrix"] = model.xy_matrix;
    doc["xy_center"] = {model.center_x, model.center_y};
    doc["z_factor"] = model.z_factor;
    doc["reference_radius"] = model.reference_radius;
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open file for writing: " + path.string());
    out << doc.dump(2) << "\n";
}

DistortionModel load_distortion_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, true, true);

    DistortionModel model;
    const auto& m = doc.at("xy_matrix");
    if (!m.is_array() || m.size() != 4)
        throw DataError(path.string() + ": xy_matrix must hold 4 row-major entries");
    for (std::size_t i = 0; i < 4; ++i) model.xy_matrix[i] = m[i].get<double>();
    const auto& c = doc.at("xy_center");
    if (!c.is_array() || c.size() != 2)
        throw DataError(path.string() + ": xy_center must hold 2 entries");
    model.center_x = c[0].get<double>();
    model.center_y = c[1].get<double>();
    model.z_factor = doc.at("z_factor").get<double>();
    model.reference_radius = doc.at("reference_radius").get<double>();
    if (model.z_factor <= 0.0)
        throw DataError(path.string() + ": z_factor must be positive");
    return model;
}

}  // namespace pbfrec
