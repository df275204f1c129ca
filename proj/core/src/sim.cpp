#include "slam2d/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "slam2d/rng.hpp"

namespace slam2d {

namespace {

bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
    auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
        return u.x() * v.y() - u.y() * v.x();
    };
    const Eigen::Vector2d r = p2 - p1;
    const Eigen::Vector2d s = q2 - q1;
    const double denom = cross(r, s);
    const Eigen::Vector2d d = q1 - p1;
    if (std::abs(denom) < 1e-12) {
        return false;  // parallel; touching collinear paths are not rejected
    }
    const double t = cross(d, s) / denom;
    const double u = cross(d, r) / denom;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

// Per-IMU-step command: body speed and yaw rate held constant over dt.
struct Command {
    double speed = 0.0;
    double omega = 0.0;
};

std::vector<Command> plan_commands(const TrajectorySpec& traj, double dt) {
    if (traj.waypoints.size() < 2) {
        throw std::invalid_argument("TrajectorySpec: at least 2 waypoints required");
    }
    if (!(traj.linear_speed > 0.0) || !(traj.angular_speed > 0.0)) {
        throw std::invalid_argument("TrajectorySpec: speeds must be positive");
    }

    std::vector<Command> plan;
    // One rest step so the initial velocity jump lands on a sample boundary
    // where the synthesized acceleration can encode it.
    plan.push_back({0.0, 0.0});
    double heading = 0.0;
    bool heading_set = false;
    for (std::size_t leg = 0; leg + 1 < traj.waypoints.size(); ++leg) {
        const Eigen::Vector2d d = traj.waypoints[leg + 1] - traj.waypoints[leg];
        const double dist = d.norm();
        if (dist < 1e-12) {
            continue;  // coincident waypoints contribute no motion
        }
        const double target = std::atan2(d.y(), d.x());
        if (!heading_set) {
            heading = target;  // start already facing the first leg
            heading_set = true;
        }
        // Turn in place toward the leg heading, full-rate steps plus one
        // residual step so the turn lands exactly on the sample grid.
        const double turn = wrap_angle(target - heading);
        const double wmax = traj.angular_speed;
        const int nw = static_cast<int>(std::floor(std::abs(turn) / (wmax * dt)));
        const double sign = turn >= 0.0 ? 1.0 : -1.0;
        for (int k = 0; k < nw; ++k) {
            plan.push_back({0.0, sign * wmax});
        }
        const double rem = turn - sign * wmax * dt * nw;
        if (std::abs(rem) > 1e-12) {
            plan.push_back({0.0, rem / dt});
        }
        heading = target;
        // Translate along the leg the same way.
        const double v = traj.linear_speed;
        const int nv = static_cast<int>(std::floor(dist / (v * dt)));
        for (int k = 0; k < nv; ++k) {
            plan.push_back({v, 0.0});
        }
        const double drem = dist - v * dt * nv;
        if (drem > 1e-12) {
            plan.push_back({drem / dt, 0.0});
        }
    }
    const int nh = static_cast<int>(std::llround(traj.hold_time / dt));
    for (int k = 0; k < nh; ++k) {
        plan.push_back({0.0, 0.0});
    }
    if (plan.empty()) {
        throw std::invalid_argument("TrajectorySpec: empty motion plan");
    }
    return plan;
}

}  // namespace

World build_corridor_world(double a, double b, double c) {
    if (!(c > 0.0) || !(a > c) || !(b > c)) {
        throw std::invalid_argument("build_corridor_world: requires a, b > c > 0");
    }
    World world;
    // Closed L outline; the corner square [0,c]^2 edges are split out so each
    // leg contributes a full wall pair.
    world.walls = {
        {{c, 0.0}, {a, 0.0}},    // leg-a outer wall
        {{a, 0.0}, {a, c}},      // leg-a end cap
        {{a, c}, {c, c}},        // leg-a inner wall
        {{c, c}, {c, b}},        // leg-b inner wall
        {{c, b}, {0.0, b}},      // leg-b end cap
        {{0.0, b}, {0.0, c}},    // leg-b outer wall
        {{0.0, c}, {0.0, 0.0}},  // corner square, outer left
        {{0.0, 0.0}, {c, 0.0}},  // corner square, outer bottom
    };
    return world;
}

std::optional<double> raycast(const World& world, const Eigen::Vector2d& origin, double direction,
                              double range_max) {
    const Eigen::Vector2d d(std::cos(direction), std::sin(direction));
    double best = std::numeric_limits<double>::infinity();
    for (const Segment& seg : world.walls) {
        const Eigen::Vector2d e = seg.b - seg.a;
        const double denom = d.x() * e.y() - d.y() * e.x();
        if (std::abs(denom) < 1e-15) {
            continue;
        }
        const Eigen::Vector2d w = seg.a - origin;
        const double t = (w.x() * e.y() - w.y() * e.x()) / denom;  // along the ray
        const double u = (w.x() * d.y() - w.y() * d.x()) / denom;  // along the segment
        if (t > 1e-12 && u >= 0.0 && u <= 1.0 && t < best) {
            best = t;
        }
    }
    if (best <= range_max) {
        return best;
    }
    return std::nullopt;
}

Dataset simulate(const World& world, const TrajectorySpec& traj, const SensorRig& rig,
                 std::uint64_t seed) {
    if (!(rig.imu_rate > 0.0) || !(rig.scan_rate > 0.0) || !(rig.encoder_rate > 0.0) ||
        rig.beams <= 0 || !(rig.range_max > 0.0) || !(rig.fov > 0.0)) {
        throw std::invalid_argument("SensorRig: rates, beams, fov, range_max must be positive");
    }
    for (const SlipEvent& ev : rig.slip_events) {
        if (!(ev.slip_factor >= 0.0) || !(ev.slip_factor < 1.0) || !(ev.t_end >= ev.t_start)) {
            throw std::invalid_argument("SensorRig: malformed slip event");
        }
    }
    rig.encoder_params.validate();

    for (const Segment& wall : world.walls) {
        if ((wall.b - wall.a).norm() < 1e-12 || !wall.a.allFinite() || !wall.b.allFinite()) {
            throw std::invalid_argument("World: degenerate wall segment");
        }
    }

    const double dt = 1.0 / rig.imu_rate;
    const std::vector<Command> plan = plan_commands(traj, dt);
    const std::size_t n = plan.size();

    for (std::size_t leg = 0; leg + 1 < traj.waypoints.size(); ++leg) {
        for (const Segment& wall : world.walls) {
            if (segments_intersect(traj.waypoints[leg], traj.waypoints[leg + 1], wall.a,
                                   wall.b)) {
                throw std::invalid_argument("simulate: trajectory collides with a wall");
            }
        }
    }

    // Ground-truth states on the IMU grid, world frame. The position update
    // uses the trapezoid rule so that first-order integration of the
    // synthesized IMU samples reproduces the truth exactly.
    std::vector<double> theta(n + 1);
    std::vector<Eigen::Vector2d> pos(n + 1), vel(n + 1);
    {
        double h0 = 0.0;
        for (std::size_t leg = 0; leg + 1 < traj.waypoints.size(); ++leg) {
            const Eigen::Vector2d d = traj.waypoints[leg + 1] - traj.waypoints[leg];
            if (d.norm() > 1e-12) {
                h0 = std::atan2(d.y(), d.x());
                break;
            }
        }
        theta[0] = h0;
        pos[0] = traj.waypoints[0];
    }
    for (std::size_t k = 0; k < n; ++k) {
        vel[k] = plan[k].speed * Eigen::Vector2d(std::cos(theta[k]), std::sin(theta[k]));
        theta[k + 1] = wrap_angle(theta[k] + plan[k].omega * dt);
    }
    vel[n] = Eigen::Vector2d::Zero();
    for (std::size_t k = 0; k < n; ++k) {
        pos[k + 1] = pos[k] + vel[k] * dt + 0.5 * (vel[k + 1] - vel[k]) * dt;
    }

    // Everything below is reported relative to the initial pose.
    const Pose2 start(pos[0].x(), pos[0].y(), theta[0]);
    const Pose2 start_inv = inverse(start);

    auto pose_at_index = [&](std::size_t k) {
        return Pose2(pos[k].x(), pos[k].y(), theta[k]);
    };
    auto pose_at_time = [&](double t) {
        const double idx = t * rig.imu_rate;
        std::size_t k = static_cast<std::size_t>(std::floor(idx));
        if (k >= n) k = n - 1;
        const double f = idx - static_cast<double>(k);
        const Eigen::Vector2d p = pos[k] + f * (pos[k + 1] - pos[k]);
        const double th = theta[k] + f * wrap_angle(theta[k + 1] - theta[k]);
        return Pose2(p.x(), p.y(), th);
    };

    SplitMix64 master(seed);
    SplitMix64 rng_bias = master.split();
    SplitMix64 rng_imu = master.split();
    SplitMix64 rng_enc = master.split();
    SplitMix64 rng_scan = master.split();

    Dataset out;

    // IMU + ground-truth records at the sample grid.
    double bias_g = 0.0;
    Eigen::Vector2d bias_a = Eigen::Vector2d::Zero();
    const double sqrt_dt = std::sqrt(dt);
    out.imu.reserve(n);
    out.ground_truth.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;

        const Pose2 gt = compose(start_inv, pose_at_index(k));
        out.ground_truth.push_back({t, gt.x, gt.y, gt.theta});

        const double omega_true = plan[k].omega;
        const Eigen::Vector2d accel_true =
            rotation2(-theta[k]) * ((vel[k + 1] - vel[k]) / dt);

        bias_g += rng_bias.gaussian() * rig.imu_noise.sigma_gyro_walk * sqrt_dt;
        bias_a.x() += rng_bias.gaussian() * rig.imu_noise.sigma_accel_walk * sqrt_dt;
        bias_a.y() += rng_bias.gaussian() * rig.imu_noise.sigma_accel_walk * sqrt_dt;

        ImuRecord imu;
        imu.t = t;
        imu.wz = omega_true + bias_g + rng_imu.gaussian() * rig.imu_noise.sigma_gyro / sqrt_dt;
        imu.ax = accel_true.x() + bias_a.x() +
                 rng_imu.gaussian() * rig.imu_noise.sigma_accel / sqrt_dt;
        imu.ay = accel_true.y() + bias_a.y() +
                 rng_imu.gaussian() * rig.imu_noise.sigma_accel / sqrt_dt;
        out.imu.push_back(imu);
    }

    // Encoder: cumulative wheel distances advance per IMU step; slip scales
    // the wheel travel while the true motion is unaffected.
    const double t_total = static_cast<double>(n) * dt;
    const double last_enc_t =
        std::floor(t_total * rig.encoder_rate) / rig.encoder_rate;
    {
        const double wb = rig.encoder_params.wheel_base;
        const double enc_dt = 1.0 / rig.encoder_rate;
        double noisy_l = 0.0, noisy_r = 0.0;
        double last_emitted_path = 0.0;
        double path = 0.0;

        std::size_t emit = 0;
        const std::size_t total_emits =
            static_cast<std::size_t>(std::floor(t_total * rig.encoder_rate)) + 1;
        out.encoder.reserve(total_emits);

        auto slip_multiplier = [&](double t) {
            for (const SlipEvent& ev : rig.slip_events) {
                if (t >= ev.t_start && t < ev.t_end) {
                    return 1.0 / (1.0 - ev.slip_factor);
                }
            }
            return 1.0;
        };

        double l_prev = 0.0, r_prev = 0.0;
        double next_emit_t = 0.0;

        for (std::size_t step = 0; step < n; ++step) {
            const double t0 = static_cast<double>(step) * dt;
            const double t1 = t0 + dt;
            const double mult = slip_multiplier(t0);
            const double dl = (plan[step].speed - 0.5 * wb * plan[step].omega) * dt * mult;
            const double dr = (plan[step].speed + 0.5 * wb * plan[step].omega) * dt * mult;
            const double seg = std::abs(plan[step].speed) * dt;

            while (next_emit_t <= t1 + 1e-12 && emit < total_emits) {
                const double f = std::clamp((next_emit_t - t0) / dt, 0.0, 1.0);
                const double lf = l_prev + f * dl;
                const double rf = r_prev + f * dr;
                const double path_f = path + f * seg;

                // Wheel noise accumulates with the traveled distance; the
                // draw cadence stays fixed so seeds replay identically.
                const double travel = path_f - last_emitted_path;
                const double ed = rng_enc.gaussian();
                const double eth = rng_enc.gaussian();
                if (travel > 0.0) {
                    const double sd = rig.encoder_params.sigma_d * std::sqrt(travel);
                    const double sth = rig.encoder_params.sigma_theta * std::sqrt(travel);
                    noisy_l += ed * sd - 0.5 * wb * eth * sth;
                    noisy_r += ed * sd + 0.5 * wb * eth * sth;
                }
                last_emitted_path = path_f;

                EncRecord rec;
                rec.t = next_emit_t;
                rec.left = std::llround((lf + noisy_l) * rig.encoder_params.ticks_per_meter);
                rec.right = std::llround((rf + noisy_r) * rig.encoder_params.ticks_per_meter);
                out.encoder.push_back(rec);
                ++emit;
                next_emit_t = static_cast<double>(emit) * enc_dt;
            }
            l_prev += dl;
            r_prev += dr;
            path += seg;
        }
    }

    // Scans: beam k of the sweep starting at t_s fires at t_s + k*P/beams.
    // Sweeps must finish inside the encoder coverage so every keyframe
    // interval stays bracketed.
    {
        const double period = 1.0 / rig.scan_rate;
        const double sweep =
            period * static_cast<double>(rig.beams - 1) / static_cast<double>(rig.beams);
        const double t_last_start = std::min(t_total, last_enc_t) - sweep;
        const std::size_t num_scans =
            t_last_start < 0.0
                ? 0
                : static_cast<std::size_t>(std::floor(t_last_start / period)) + 1;
        const double angle_inc = rig.fov / static_cast<double>(rig.beams);
        const double angle_min = -kPi;
        out.scans.reserve(num_scans);
        for (std::size_t s = 0; s < num_scans; ++s) {
            const double t_s = static_cast<double>(s) * period;
            ScanRecord rec;
            rec.t = t_s;
            rec.angle_min = angle_min;
            rec.angle_increment = angle_inc;
            rec.ranges.reserve(static_cast<std::size_t>(rig.beams));
            for (int k = 0; k < rig.beams; ++k) {
                const double t_b =
                    t_s + period * static_cast<double>(k) / static_cast<double>(rig.beams);
                const Pose2 pose = pose_at_time(t_b);
                const double angle = pose.theta + angle_min + angle_inc * static_cast<double>(k);
                const auto range = raycast(world, pose.translation(), angle, rig.range_max);
                const double noise = rng_scan.gaussian() * rig.sigma_range;
                if (range) {
                    const double r = *range + noise;
                    rec.ranges.push_back(r > 0.0 && r <= rig.range_max ? r : -1.0);
                } else {
                    rec.ranges.push_back(-1.0);
                }
            }
            out.scans.push_back(std::move(rec));
        }
    }

    return out;
}

}  // namespace slam2d
