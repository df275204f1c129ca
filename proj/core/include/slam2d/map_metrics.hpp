#ifndef SLAM2D_MAP_METRICS_HPP
#define SLAM2D_MAP_METRICS_HPP

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slam2d/occupancy_grid.hpp"

namespace slam2d {

/// Axis-aligned rectangle in meters, corners (x0, y0) and (x1, y1).
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool contains(const Eigen::Vector2d& p) const {
        return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1;
    }
};

/// Two wall regions per metric; a, b, c measure the distance between the
/// pair's fitted lines, alpha the angle between them.
struct MeasureSpec {
    std::array<Rect, 2> a, b, c, alpha;
};

struct MapMetrics {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double alpha_deg = 0.0;
};

/// Per-metric outcome; a metric is missing when one of its regions lacks
/// enough occupied cells (or the fit is degenerate).
struct MeasureReport {
    std::optional<double> a, b, c, alpha_deg;
    std::vector<std::string> issues;

    /// Throws DataError unless all four metrics resolved.
    MapMetrics require_all() const;
};

/// Total-least-squares line through a point set.
struct LineFit {
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    Eigen::Vector2d direction = Eigen::Vector2d::UnitX();
    std::size_t support = 0;
};

LineFit fit_line_tls(std::span<const Eigen::Vector2d> points);

/// Mean of the two mutual centroid-to-line perpendicular distances.
double parallel_line_distance(const LineFit& l1, const LineFit& l2);

/// Angle at the intersection of the two lines, directions oriented away from
/// the intersection toward each centroid; degrees in (0, 180).
double corner_angle_deg(const LineFit& l1, const LineFit& l2);

/// Occupied-cell centers (probability > 0.65) inside the region.
std::vector<Eigen::Vector2d> occupied_cells_in(const OccupancyGrid& grid, const Rect& region);

MeasureReport measure_map(const OccupancyGrid& grid, const MeasureSpec& spec);

}  // namespace slam2d

#endif
