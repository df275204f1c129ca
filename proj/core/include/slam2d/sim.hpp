#ifndef SLAM2D_SIM_HPP
#define SLAM2D_SIM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "slam2d/dataset.hpp"
#include "slam2d/encoder.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/imu.hpp"

namespace slam2d {

struct Segment {
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
};

struct World {
    std::vector<Segment> walls;
};

/// L-shaped corridor: leg lengths a (along +x) and b (along +y), width c,
/// right-angle corner at the origin, closed end caps. Requires a, b > c > 0.
World build_corridor_world(double a, double b, double c);

/// Smallest positive ray-segment intersection distance, or nullopt beyond
/// range_max.
std::optional<double> raycast(const World& world, const Eigen::Vector2d& origin, double direction,
                              double range_max);

/// Piecewise trajectory: turn in place toward each waypoint at angular_speed,
/// then translate at linear_speed. hold_time appends stationary time at the
/// end (also what a spec with coincident waypoints produces).
struct TrajectorySpec {
    std::vector<Eigen::Vector2d> waypoints;
    double linear_speed = 0.4;    // m/s
    double angular_speed = 0.5;   // rad/s
    double hold_time = 1.0;       // s
};

struct SlipEvent {
    double t_start = 0.0;
    double t_end = 0.0;
    double slip_factor = 0.0;  // in [0, 1); wheels spin 1/(1-s) per meter traveled
};

struct SensorRig {
    double imu_rate = 100.0;      // Hz
    double scan_rate = 10.0;      // Hz
    double encoder_rate = 50.0;   // Hz
    int beams = 360;
    double fov = 2.0 * kPi;       // rad
    double range_max = 12.0;      // m
    double sigma_range = 0.01;    // m
    ImuNoiseParams imu_noise;     // zeros allowed here: synthesis only
    EncoderParams encoder_params;
    std::vector<SlipEvent> slip_events;
};

/// Generates ground truth and the three sensor streams along the trajectory.
/// All outputs, ground truth included, are expressed in the frame of the
/// initial pose, and identical seeds give byte-identical datasets.
Dataset simulate(const World& world, const TrajectorySpec& traj, const SensorRig& rig,
                 std::uint64_t seed);

}  // namespace slam2d

#endif
