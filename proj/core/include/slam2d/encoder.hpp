#ifndef SLAM2D_ENCODER_HPP
#define SLAM2D_ENCODER_HPP

#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "slam2d/geometry.hpp"

namespace slam2d {

/// Cumulative wheel tick counts at time t.
struct EncoderSample {
    double t = 0.0;
    std::int64_t left_ticks = 0;
    std::int64_t right_ticks = 0;
};

struct EncoderParams {
    double ticks_per_meter = 1e5;
    double wheel_base = 0.3;     // m
    double sigma_d = 0.02;       // m/sqrt(m), along-path noise density
    double sigma_theta = 0.02;   // rad/sqrt(m)

    void validate() const;
};

/// Relative pose over [t_i, t_j] with covariance in (theta, x, y) order.
struct WheelOdomDelta {
    Pose2 delta;
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
    double path_length = 0.0;
};

struct SlipReport {
    double discrepancy = 0.0;
    bool excluded = false;
};

/// Integrates tick counts over [t_i, t_j] with an exact arc model per
/// inter-sample segment. Tick counts are interpolated linearly at the
/// interval endpoints; the sample list must bracket the interval.
WheelOdomDelta integrate_encoder(std::span<const EncoderSample> samples, double t_i, double t_j,
                                 const EncoderParams& params);

/// Compares the encoder translation against the IMU-predicted one.
/// excluded is set on strict discrepancy > tau_e.
SlipReport detect_slip(const WheelOdomDelta& enc, const Pose2& imu_predicted, double tau_e);

}  // namespace slam2d

#endif
