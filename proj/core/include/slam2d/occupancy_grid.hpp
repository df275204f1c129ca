#ifndef SLAM2D_OCCUPANCY_GRID_HPP
#define SLAM2D_OCCUPANCY_GRID_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slam2d/geometry.hpp"
#include "slam2d/lidar.hpp"

namespace slam2d {

/// Log-odds occupancy grid. origin is the world position of the corner of
/// cell (0, 0); log-odds are clamped to [-5, 5]. Cells accumulate raw sums
/// and clamp on read, which keeps scan insertion order-independent even at
/// saturation.
class OccupancyGrid {
  public:
    OccupancyGrid(double resolution, const Eigen::Vector2d& origin, int width, int height);

    double resolution() const { return resolution_; }
    const Eigen::Vector2d& origin() const { return origin_; }
    int width() const { return width_; }
    int height() const { return height_; }

    bool contains(int ix, int iy) const {
        return ix >= 0 && ix < width_ && iy >= 0 && iy < height_;
    }
    double log_odds(int ix, int iy) const;
    void set_log_odds(int ix, int iy, double value);
    double probability(int ix, int iy) const;
    Eigen::Vector2d cell_center(int ix, int iy) const;
    Eigen::Vector2i world_to_cell(const Eigen::Vector2d& p) const;

    /// Traces an integer-grid ray from the sensor cell to each point's cell:
    /// traversed cells get the miss update, the endpoint the hit update.
    /// Rays leaving the grid are clipped with no hit applied.
    void insert_scan(const Pose2& pose, const PointCloud2D& cloud);

    /// Binary PGM (P5), row 0 at max y. 0 = occupied (p > 0.65),
    /// 254 = free (p < 0.25), 205 = unknown.
    std::vector<std::uint8_t> export_pgm() const;

    /// Sidecar metadata: `resolution <r>` and `origin <x> <y>` lines.
    std::string export_metadata() const;

  private:
    std::size_t index(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(ix);
    }
    void apply(int ix, int iy, double delta);

    double resolution_;
    Eigen::Vector2d origin_;
    int width_;
    int height_;
    std::vector<double> cells_;
};

inline constexpr double kLogOddsHit = 0.847;    // p = 0.7
inline constexpr double kLogOddsMiss = -0.405;  // p = 0.4
inline constexpr double kLogOddsClamp = 5.0;
inline constexpr double kOccupiedProbability = 0.65;
inline constexpr double kFreeProbability = 0.25;

}  // namespace slam2d

#endif
