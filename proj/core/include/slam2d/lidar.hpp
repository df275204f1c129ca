#ifndef SLAM2D_LIDAR_HPP
#define SLAM2D_LIDAR_HPP

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "slam2d/geometry.hpp"
#include "slam2d/imu.hpp"
#include "slam2d/weighting.hpp"

namespace slam2d {

/// Raw 2D scan. Beam k points along angle_min + k * angle_increment at a
/// timestamp interpolated linearly across [t_start, t_end]. Invalid beams
/// carry a nonpositive range.
struct LaserScan {
    double t_start = 0.0;
    double t_end = 0.0;
    double angle_min = -kPi;
    double angle_increment = 0.0;
    double range_max = 12.0;
    std::vector<double> ranges;

    bool beam_valid(std::size_t k) const {
        return ranges[k] > 0.0 && ranges[k] <= range_max;
    }
};

/// Cartesian points in the robot frame at the scan's t_end.
struct PointCloud2D {
    std::vector<Eigen::Vector2d> points;
};

/// Scan-matching output. information is the Gauss-Newton normal matrix over
/// (theta, x, y) scaled by the inverse residual variance.
struct ScanMatchResult {
    Pose2 relative_pose;
    Eigen::Matrix3d information = Eigen::Matrix3d::Zero();
    int iterations = 0;
    bool converged = false;
    double mean_residual = 0.0;
    std::vector<double> cost_history;  // mean squared point-to-line distance per iteration
};

struct DegradationReport {
    double score = 0.0;
    bool degraded = false;
    double weight = 1.0;
};

/// Undistorts a scan using the IMU motion over its sweep; returns points in
/// the robot frame at t_end. pre must span exactly [t_start, t_end].
PointCloud2D deskew(const LaserScan& scan, const PreintegratedImu& pre);

/// Point-to-line ICP of current onto reference. Correspondences come from a
/// 0.5 m uniform-cell index, lines through the two nearest reference points,
/// matches beyond 0.5 m rejected. Returns nullopt when fewer than 10
/// correspondences survive (insufficient overlap).
std::optional<ScanMatchResult> match_scans(const PointCloud2D& reference,
                                           const PointCloud2D& current,
                                           const Pose2& initial_guess);

/// Mean absolute per-beam range change between consecutive scans. A small
/// score while the platform is commanded to move flags a repetitive
/// environment; a stationary platform is exempt.
DegradationReport degradation_score(const LaserScan& prev, const LaserScan& cur,
                                    double commanded_motion, double eps_range, double min_motion,
                                    const WeightParams& weights);

}  // namespace slam2d

#endif
