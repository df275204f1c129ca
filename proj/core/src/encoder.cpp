#include "slam2d/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace slam2d {

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-8) {
        return 1.0 - x * x / 6.0;
    }
    return std::sin(x) / x;
}

struct Knot {
    double t;
    double left;
    double right;
};

}  // namespace

void EncoderParams::validate() const {
    if (!(ticks_per_meter > 0.0) || !(wheel_base > 0.0)) {
        throw std::invalid_argument("EncoderParams: ticks_per_meter and wheel_base must be > 0");
    }
}

WheelOdomDelta integrate_encoder(std::span<const EncoderSample> samples, double t_i, double t_j,
                                 const EncoderParams& params) {
    params.validate();
    if (!(t_j >= t_i)) {
        throw std::invalid_argument("integrate_encoder: reversed interval");
    }
    if (samples.empty() || samples.front().t > t_i || samples.back().t < t_j) {
        throw std::invalid_argument("integrate_encoder: samples do not bracket the interval");
    }

    // Linear interpolation of cumulative ticks at time t.
    auto ticks_at = [&](double t) -> Eigen::Vector2d {
        auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const EncoderSample& s, double v) { return s.t < v; });
        if (it != samples.end() && it->t == t) {
            return {static_cast<double>(it->left_ticks), static_cast<double>(it->right_ticks)};
        }
        const EncoderSample& hi = *it;
        const EncoderSample& lo = *(it - 1);
        const double f = (t - lo.t) / (hi.t - lo.t);
        return {lo.left_ticks + f * (hi.left_ticks - lo.left_ticks),
                lo.right_ticks + f * (hi.right_ticks - lo.right_ticks)};
    };

    std::vector<Knot> knots;
    {
        const Eigen::Vector2d k0 = ticks_at(t_i);
        knots.push_back({t_i, k0.x(), k0.y()});
        for (const EncoderSample& s : samples) {
            if (s.t > t_i && s.t < t_j) {
                knots.push_back({s.t, static_cast<double>(s.left_ticks),
                                 static_cast<double>(s.right_ticks)});
            }
        }
        const Eigen::Vector2d k1 = ticks_at(t_j);
        knots.push_back({t_j, k1.x(), k1.y()});
    }

    WheelOdomDelta out;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double d_l = (knots[k + 1].left - knots[k].left) / params.ticks_per_meter;
        const double d_r = (knots[k + 1].right - knots[k].right) / params.ticks_per_meter;
        const double dist = 0.5 * (d_l + d_r);
        const double dth = (d_r - d_l) / params.wheel_base;
        // Exact arc: chord at half the heading change.
        const double chord = dist * sinc(0.5 * dth);
        const double half = 0.5 * dth;
        const Pose2 seg(chord * std::cos(half), chord * std::sin(half), dth);
        out.delta = compose(out.delta, seg);
        out.path_length += std::abs(dist);
    }

    out.covariance.setZero();
    out.covariance(0, 0) = params.sigma_theta * params.sigma_theta * out.path_length;
    out.covariance(1, 1) = params.sigma_d * params.sigma_d * out.path_length;
    out.covariance(2, 2) = params.sigma_d * params.sigma_d * out.path_length;
    return out;
}

SlipReport detect_slip(const WheelOdomDelta& enc, const Pose2& imu_predicted, double tau_e) {
    SlipReport report;
    report.discrepancy = (enc.delta.translation() - imu_predicted.translation()).norm();
    report.excluded = report.discrepancy > tau_e;
    return report;
}

}  // namespace slam2d
