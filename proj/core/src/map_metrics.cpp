#include "slam2d/map_metrics.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "slam2d/textio.hpp"

namespace slam2d {

namespace {

constexpr std::size_t kMinOccupiedCells = 20;

std::optional<double> measure_pair(const OccupancyGrid& grid, const std::array<Rect, 2>& regions,
                                   const char* name, bool angle,
                                   std::vector<std::string>& issues) {
    LineFit fits[2];
    for (int k = 0; k < 2; ++k) {
        const auto cells = occupied_cells_in(grid, regions[k]);
        if (cells.size() < kMinOccupiedCells) {
            issues.push_back(std::string(name) + ": region " + std::to_string(k + 1) +
                             " has too few occupied cells (" + std::to_string(cells.size()) + ")");
            return std::nullopt;
        }
        fits[k] = fit_line_tls(cells);
    }
    if (angle) {
        const double cross = fits[0].direction.x() * fits[1].direction.y() -
                             fits[0].direction.y() * fits[1].direction.x();
        if (std::abs(cross) < 1e-6) {
            issues.push_back(std::string(name) + ": fitted lines are nearly parallel");
            return std::nullopt;
        }
        return corner_angle_deg(fits[0], fits[1]);
    }
    return parallel_line_distance(fits[0], fits[1]);
}

}  // namespace

MapMetrics MeasureReport::require_all() const {
    if (!a || !b || !c || !alpha_deg) {
        std::string msg = "measure_map: unresolved metrics";
        for (const auto& issue : issues) {
            msg += "; " + issue;
        }
        throw DataError(msg);
    }
    return {*a, *b, *c, *alpha_deg};
}

LineFit fit_line_tls(std::span<const Eigen::Vector2d> points) {
    LineFit fit;
    fit.support = points.size();
    if (points.empty()) {
        return fit;
    }
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto& p : points) {
        centroid += p;
    }
    centroid /= static_cast<double>(points.size());

    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector2d d = p - centroid;
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
    fit.centroid = centroid;
    fit.direction = eig.eigenvectors().col(1);  // largest eigenvalue
    return fit;
}

double parallel_line_distance(const LineFit& l1, const LineFit& l2) {
    const Eigen::Vector2d n1(-l1.direction.y(), l1.direction.x());
    const Eigen::Vector2d n2(-l2.direction.y(), l2.direction.x());
    const double d12 = std::abs(n2.dot(l1.centroid - l2.centroid));
    const double d21 = std::abs(n1.dot(l2.centroid - l1.centroid));
    return 0.5 * (d12 + d21);
}

double corner_angle_deg(const LineFit& l1, const LineFit& l2) {
    // Intersection of p1 + s*d1 and p2 + t*d2.
    Eigen::Matrix2d m;
    m.col(0) = l1.direction;
    m.col(1) = -l2.direction;
    const Eigen::Vector2d st = m.inverse() * (l2.centroid - l1.centroid);
    const Eigen::Vector2d corner = l1.centroid + st(0) * l1.direction;

    Eigen::Vector2d u1 = l1.direction;
    if (u1.dot(l1.centroid - corner) < 0.0) u1 = -u1;
    Eigen::Vector2d u2 = l2.direction;
    if (u2.dot(l2.centroid - corner) < 0.0) u2 = -u2;

    const double cosine = std::clamp(u1.dot(u2), -1.0, 1.0);
    return std::acos(cosine) * 180.0 / kPi;
}

std::vector<Eigen::Vector2d> occupied_cells_in(const OccupancyGrid& grid, const Rect& region) {
    std::vector<Eigen::Vector2d> cells;
    const Eigen::Vector2i lo = grid.world_to_cell({region.x0, region.y0});
    const Eigen::Vector2i hi = grid.world_to_cell({region.x1, region.y1});
    for (int iy = std::max(lo.y(), 0); iy <= std::min(hi.y(), grid.height() - 1); ++iy) {
        for (int ix = std::max(lo.x(), 0); ix <= std::min(hi.x(), grid.width() - 1); ++ix) {
            if (grid.probability(ix, iy) > kOccupiedProbability &&
                region.contains(grid.cell_center(ix, iy))) {
                cells.push_back(grid.cell_center(ix, iy));
            }
        }
    }
    return cells;
}

MeasureReport measure_map(const OccupancyGrid& grid, const MeasureSpec& spec) {
    MeasureReport report;
    report.a = measure_pair(grid, spec.a, "a", false, report.issues);
    report.b = measure_pair(grid, spec.b, "b", false, report.issues);
    report.c = measure_pair(grid, spec.c, "c", false, report.issues);
    report.alpha_deg = measure_pair(grid, spec.alpha, "alpha", true, report.issues);
    return report;
}

}  // namespace slam2d
