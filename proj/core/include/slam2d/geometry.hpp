#ifndef SLAM2D_GEOMETRY_HPP
#define SLAM2D_GEOMETRY_HPP

#include <Eigen/Core>

namespace slam2d {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Wraps an angle into (-pi, pi]. Throws std::invalid_argument on non-finite input.
double wrap_angle(double raw);

Eigen::Matrix2d rotation2(double theta);

/// Planar rigid transform. theta is kept in (-pi, pi] by construction.
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Pose2() = default;
    Pose2(double x_, double y_, double theta_);

    Eigen::Vector2d translation() const { return {x, y}; }
    Eigen::Matrix2d rotation() const { return rotation2(theta); }

    /// Applies the transform to a point.
    Eigen::Vector2d operator*(const Eigen::Vector2d& p) const;
};

Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& p);

/// Relative pose such that compose(a, between(a, b)) == b.
Pose2 between(const Pose2& a, const Pose2& b);

/// Gyro and accelerometer biases (z-axis rate, in-plane specific force).
struct ImuBias {
    double gyro = 0.0;
    Eigen::Vector2d accel = Eigen::Vector2d::Zero();
};

/// Full robot state: planar pose, world-frame velocity, IMU biases.
struct RobotState {
    Pose2 pose;
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    ImuBias bias;

    bool is_finite() const;
};

}  // namespace slam2d

#endif
