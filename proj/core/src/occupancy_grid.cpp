#include "slam2d/occupancy_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "slam2d/textio.hpp"

namespace slam2d {

OccupancyGrid::OccupancyGrid(double resolution, const Eigen::Vector2d& origin, int width,
                             int height)
    : resolution_(resolution), origin_(origin), width_(width), height_(height) {
    if (!(resolution > 0.0) || width <= 0 || height <= 0) {
        throw std::invalid_argument("OccupancyGrid: resolution and extents must be positive");
    }
    cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
}

double OccupancyGrid::log_odds(int ix, int iy) const {
    return std::clamp(cells_[index(ix, iy)], -kLogOddsClamp, kLogOddsClamp);
}

double OccupancyGrid::probability(int ix, int iy) const {
    const double l = log_odds(ix, iy);
    return 1.0 / (1.0 + std::exp(-l));
}

Eigen::Vector2d OccupancyGrid::cell_center(int ix, int iy) const {
    return origin_ + resolution_ * Eigen::Vector2d(ix + 0.5, iy + 0.5);
}

Eigen::Vector2i OccupancyGrid::world_to_cell(const Eigen::Vector2d& p) const {
    return {static_cast<int>(std::floor((p.x() - origin_.x()) / resolution_)),
            static_cast<int>(std::floor((p.y() - origin_.y()) / resolution_))};
}

void OccupancyGrid::apply(int ix, int iy, double delta) {
    cells_[index(ix, iy)] += delta;
}

void OccupancyGrid::set_log_odds(int ix, int iy, double value) {
    if (!contains(ix, iy)) {
        throw std::invalid_argument("set_log_odds: cell outside the grid");
    }
    cells_[index(ix, iy)] = std::clamp(value, -kLogOddsClamp, kLogOddsClamp);
}

void OccupancyGrid::insert_scan(const Pose2& pose, const PointCloud2D& cloud) {
    const Eigen::Vector2i sensor = world_to_cell(pose.translation());
    for (const Eigen::Vector2d& p : cloud.points) {
        const Eigen::Vector2i end = world_to_cell(pose * p);

        // Bresenham walk from the sensor cell to the endpoint cell. Cells
        // strictly between the two get the miss update; out-of-grid cells
        // (a clipped ray) are skipped and an out-of-grid endpoint gets no hit.
        int x = sensor.x();
        int y = sensor.y();
        const int dx = std::abs(end.x() - x);
        const int dy = -std::abs(end.y() - y);
        const int sx = x < end.x() ? 1 : -1;
        const int sy = y < end.y() ? 1 : -1;
        int err = dx + dy;
        while (x != end.x() || y != end.y()) {
            if ((x != sensor.x() || y != sensor.y()) && contains(x, y)) {
                apply(x, y, kLogOddsMiss);
            }
            const int e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y += sy;
            }
        }
        if (contains(end.x(), end.y())) {
            apply(end.x(), end.y(), kLogOddsHit);
        }
    }
}

std::vector<std::uint8_t> OccupancyGrid::export_pgm() const {
    std::string header = "P5\n" + std::to_string(width_) + " " + std::to_string(height_) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + cells_.size());
    for (int row = 0; row < height_; ++row) {
        const int iy = height_ - 1 - row;
        for (int ix = 0; ix < width_; ++ix) {
            const double p = probability(ix, iy);
            std::uint8_t v = 205;
            if (p > kOccupiedProbability) {
                v = 0;
            } else if (p < kFreeProbability) {
                v = 254;
            }
            out.push_back(v);
        }
    }
    return out;
}

std::string OccupancyGrid::export_metadata() const {
    std::string out = "resolution " + format_fixed9(resolution_) + "\n";
    out += "origin " + format_fixed9(origin_.x()) + " " + format_fixed9(origin_.y()) + "\n";
    return out;
}

}  // namespace slam2d
