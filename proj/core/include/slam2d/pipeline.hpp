#ifndef SLAM2D_PIPELINE_HPP
#define SLAM2D_PIPELINE_HPP

#include <string>
#include <vector>

#include "slam2d/dataset.hpp"
#include "slam2d/encoder.hpp"
#include "slam2d/evaluate.hpp"
#include "slam2d/factor_graph.hpp"
#include "slam2d/imu.hpp"
#include "slam2d/occupancy_grid.hpp"
#include "slam2d/weighting.hpp"

namespace slam2d {

enum class RunMode { Fused, LidarOnly, EncoderOnly };

RunMode parse_run_mode(const std::string& name);
std::string run_mode_name(RunMode mode);

struct RunConfig {
    double keyframe_distance = 0.2;   // m
    double keyframe_angle = 0.087;    // rad
    double eps_range = 0.05;          // m, lidar degradation threshold
    double min_motion = 0.02;         // m, stationary exemption
    double tau_e = 0.05;              // m, encoder slip threshold
    WeightParams lidar_weights{0.0, 25.0, 0.05};
    WeightParams encoder_weights{0.05, 20.0, 0.05};
    OptimizerConfig optimizer;
    RunMode mode = RunMode::Fused;
    ImuNoiseParams imu_noise;         // estimator-side densities
    EncoderParams encoder_params;
    double range_max = 12.0;          // beam validity bound for parsed scans
    double map_resolution = 0.05;     // m/cell

    void validate() const;
};

/// Flat `key value` lines, '#' comments, unknown keys rejected.
RunConfig parse_run_config(const std::string& text);

struct KeyframeDiagnostics {
    double t_i = 0.0;
    double t_j = 0.0;
    bool moving = false;
    double degradation = 0.0;
    bool degraded = false;
    bool match_failed = false;
    bool lidar_inserted = false;
    double slip_discrepancy = 0.0;
    bool slip_excluded = false;
    bool encoder_inserted = false;
};

struct RunDiagnostics {
    std::vector<KeyframeDiagnostics> keyframe_pairs;
    std::size_t num_keyframes = 0;
    std::size_t num_scans = 0;

    std::size_t count_degraded() const;
    std::size_t count_moving() const;
    std::size_t count_lidar_inserted() const;
    std::size_t count_slip_excluded() const;
};

struct RunResult {
    Trajectory trajectory;
    OccupancyGrid grid;
    RunDiagnostics diagnostics;
};

/// Runs the full pipeline over a recorded dataset: IMU-predicted keyframes,
/// deskewed scan matching, slip- and degradation-gated factors, incremental
/// optimization, and a map rebuilt from the final poses.
RunResult run_slam(const Dataset& dataset, const RunConfig& config);

}  // namespace slam2d

#endif
