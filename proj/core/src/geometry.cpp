#include "slam2d/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace slam2d {

double wrap_angle(double raw) {
    if (!std::isfinite(raw)) {
        throw std::invalid_argument("wrap_angle: non-finite angle");
    }
    // std::remainder lands in [-pi, pi]; move the lower boundary to +pi.
    double w = std::remainder(raw, 2.0 * kPi);
    if (w <= -kPi) {
        w += 2.0 * kPi;
    }
    return w;
}

Eigen::Matrix2d rotation2(double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
}

Pose2::Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

Eigen::Vector2d Pose2::operator*(const Eigen::Vector2d& p) const {
    return rotation() * p + translation();
}

Pose2 compose(const Pose2& a, const Pose2& b) {
    const Eigen::Vector2d t = a.rotation() * b.translation() + a.translation();
    return Pose2(t.x(), t.y(), a.theta + b.theta);
}

Pose2 inverse(const Pose2& p) {
    const Eigen::Vector2d t = -(rotation2(-p.theta) * p.translation());
    return Pose2(t.x(), t.y(), -p.theta);
}

Pose2 between(const Pose2& a, const Pose2& b) {
    return compose(inverse(a), b);
}

bool RobotState::is_finite() const {
    return std::isfinite(pose.x) && std::isfinite(pose.y) && std::isfinite(pose.theta) &&
           velocity.allFinite() && std::isfinite(bias.gyro) && bias.accel.allFinite();
}

}  // namespace slam2d
