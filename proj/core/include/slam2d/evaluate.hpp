#ifndef SLAM2D_EVALUATE_HPP
#define SLAM2D_EVALUATE_HPP

#include <string>
#include <vector>

#include "slam2d/dataset.hpp"
#include "slam2d/geometry.hpp"

namespace slam2d {

struct TrajPoint {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

using Trajectory = std::vector<TrajPoint>;

struct PoseError {
    double t = 0.0;
    double err_pos = 0.0;
    double err_ang_deg = 0.0;
};

struct EvalReport {
    double rmse_pos = 0.0;
    double rmse_ang_deg = 0.0;
    std::vector<PoseError> errors;
};

/// Pairs each estimated pose with the nearest-timestamp truth pose (gap up to
/// 0.05 s, farther poses dropped) and reports position / wrapped-angle RMSE.
/// No spatial alignment is applied. Throws DataError when nothing pairs up.
EvalReport evaluate(const Trajectory& estimated, const Trajectory& truth);

Trajectory gt_trajectory(const Dataset& dataset);

/// Text form: one `t x y theta` line per pose, fixed 9-decimal values.
std::string write_trajectory(const Trajectory& traj);
Trajectory read_trajectory(const std::string& text);

std::string write_eval_report(const EvalReport& report);
std::string write_error_csv(const EvalReport& report);

}  // namespace slam2d

#endif
