#include "slam2d/imu.hpp"

#include <cmath>
#include <stdexcept>

namespace slam2d {

namespace {

// 90-degree rotation, d/dtheta of rotation2(theta) = rotation2(theta) * kSkew.
const Eigen::Matrix2d kSkew = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();

}  // namespace

void ImuNoiseParams::validate() const {
    const bool ok = sigma_gyro > 0.0 && sigma_accel > 0.0 && sigma_gyro_walk > 0.0 &&
                    sigma_accel_walk > 0.0 && std::isfinite(sigma_gyro) &&
                    std::isfinite(sigma_accel) && std::isfinite(sigma_gyro_walk) &&
                    std::isfinite(sigma_accel_walk);
    if (!ok) {
        throw std::invalid_argument("ImuNoiseParams: densities must be strictly positive");
    }
}

PreintegratedImu integrate(const PreintegratedImu& pre, const ImuSample& sample, double dt,
                           const ImuNoiseParams& noise) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("integrate: dt must be positive");
    }
    if (!std::isfinite(sample.omega) || !sample.accel.allFinite() || !std::isfinite(sample.t)) {
        throw std::invalid_argument("integrate: non-finite IMU sample");
    }

    const double omega = sample.omega - pre.bias_lin.gyro;
    const Eigen::Vector2d acc = sample.accel - pre.bias_lin.accel;
    const Eigen::Matrix2d rot = rotation2(pre.delta_theta);
    const Eigen::Vector2d rot_acc = rot * acc;
    const Eigen::Vector2d d_rot_acc = rot * (kSkew * acc);  // d(R*a)/dtheta

    // Linearized transition over (dtheta, dp, dv) and noise input (n_g, n_a).
    Eigen::Matrix<double, 5, 5> trans = Eigen::Matrix<double, 5, 5>::Identity();
    trans.block<2, 1>(1, 0) = 0.5 * dt * dt * d_rot_acc;
    trans.block<2, 2>(1, 3) = dt * Eigen::Matrix2d::Identity();
    trans.block<2, 1>(3, 0) = dt * d_rot_acc;

    Eigen::Matrix<double, 5, 3> input = Eigen::Matrix<double, 5, 3>::Zero();
    input(0, 0) = dt;
    input.block<2, 2>(1, 1) = 0.5 * dt * dt * rot;
    input.block<2, 2>(3, 1) = dt * rot;

    Eigen::Vector3d noise_var;
    noise_var << noise.sigma_gyro * noise.sigma_gyro / dt,
        noise.sigma_accel * noise.sigma_accel / dt, noise.sigma_accel * noise.sigma_accel / dt;

    PreintegratedImu out = pre;
    out.covariance = trans * pre.covariance * trans.transpose() +
                     input * noise_var.asDiagonal() * input.transpose();
    out.covariance = (0.5 * (out.covariance + out.covariance.transpose())).eval();

    // Forward Euler on the pre-update deltas.
    out.delta_p = pre.delta_p + pre.delta_v * dt + 0.5 * dt * dt * rot_acc;
    out.delta_v = pre.delta_v + dt * rot_acc;
    out.delta_theta = wrap_angle(pre.delta_theta + omega * dt);
    out.dt_total = pre.dt_total + dt;
    return out;
}

RobotState predict(const RobotState& state_i, const PreintegratedImu& pre) {
    const Eigen::Matrix2d rot_i = state_i.pose.rotation();
    const Eigen::Vector2d p_j = state_i.pose.translation() + state_i.velocity * pre.dt_total +
                                rot_i * pre.delta_p;
    RobotState out;
    out.pose = Pose2(p_j.x(), p_j.y(), state_i.pose.theta + pre.delta_theta);
    out.velocity = state_i.velocity + rot_i * pre.delta_v;
    out.bias = state_i.bias;
    return out;
}

Eigen::Matrix<double, 5, 1> residual(const RobotState& state_i, const RobotState& state_j,
                                     const PreintegratedImu& pre) {
    const Eigen::Matrix2d rot_i_t = rotation2(-state_i.pose.theta);
    Eigen::Matrix<double, 5, 1> r;
    r(0) = wrap_angle(state_j.pose.theta - state_i.pose.theta - pre.delta_theta);
    r.segment<2>(1) = rot_i_t * (state_j.pose.translation() - state_i.pose.translation() -
                                 state_i.velocity * pre.dt_total) -
                      pre.delta_p;
    r.segment<2>(3) = rot_i_t * (state_j.velocity - state_i.velocity) - pre.delta_v;
    return r;
}

PreintegratedImu reset_with_bias(const PreintegratedImu& pre, std::span<const TimedImuSample> raw,
                                 const ImuBias& new_bias, const ImuNoiseParams& noise) {
    double span = 0.0;
    for (const auto& s : raw) {
        span += s.dt;
    }
    if (std::abs(span - pre.dt_total) > 1e-9) {
        throw std::invalid_argument("reset_with_bias: samples do not cover the interval");
    }
    PreintegratedImu out;
    out.bias_lin = new_bias;
    for (const auto& s : raw) {
        out = integrate(out, s.sample, s.dt, noise);
    }
    return out;
}

}  // namespace slam2d
