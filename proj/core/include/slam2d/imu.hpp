#ifndef SLAM2D_IMU_HPP
#define SLAM2D_IMU_HPP

#include <span>

#include <Eigen/Core>

#include "slam2d/geometry.hpp"

namespace slam2d {

/// One IMU reading: z-axis angular rate and body-frame specific force.
struct ImuSample {
    double t = 0.0;
    double omega = 0.0;
    Eigen::Vector2d accel = Eigen::Vector2d::Zero();
};

/// Continuous-time noise densities. The estimator requires all of them
/// strictly positive; the simulator may synthesize with zeros.
struct ImuNoiseParams {
    double sigma_gyro = 2e-4;        // rad/s/sqrt(Hz)
    double sigma_accel = 1e-2;       // m/s^2/sqrt(Hz)
    double sigma_gyro_walk = 2e-6;   // rad/s^2/sqrt(Hz)
    double sigma_accel_walk = 2e-5;  // m/s^3/sqrt(Hz)

    /// Throws std::invalid_argument unless every density is > 0 and finite.
    void validate() const;
};

/// An IMU sample together with the interval it is integrated over.
struct TimedImuSample {
    ImuSample sample;
    double dt = 0.0;
};

/// Relative motion accumulated between two states, in the frame of the first.
/// Covariance is 5x5 over (dtheta, dp_x, dp_y, dv_x, dv_y).
struct PreintegratedImu {
    double dt_total = 0.0;
    double delta_theta = 0.0;  // wrapped to (-pi, pi]
    Eigen::Vector2d delta_v = Eigen::Vector2d::Zero();
    Eigen::Vector2d delta_p = Eigen::Vector2d::Zero();
    Eigen::Matrix<double, 5, 5> covariance = Eigen::Matrix<double, 5, 5>::Zero();
    ImuBias bias_lin;
};

/// Advances the preintegration by one sample held constant over dt.
PreintegratedImu integrate(const PreintegratedImu& pre, const ImuSample& sample, double dt,
                           const ImuNoiseParams& noise);

/// Propagates state_i across the preintegrated interval.
RobotState predict(const RobotState& state_i, const PreintegratedImu& pre);

/// 5-vector (theta, p_x, p_y, v_x, v_y) residual, actual minus predicted,
/// expressed in the frame of state_i. Zero when state_j == predict(state_i, pre).
Eigen::Matrix<double, 5, 1> residual(const RobotState& state_i, const RobotState& state_j,
                                     const PreintegratedImu& pre);

/// Re-integrates the buffered samples from scratch with a new linearization
/// bias. The samples must cover the same interval as pre.
PreintegratedImu reset_with_bias(const PreintegratedImu& pre, std::span<const TimedImuSample> raw,
                                 const ImuBias& new_bias, const ImuNoiseParams& noise);

}  // namespace slam2d

#endif
