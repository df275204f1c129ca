#include "slam2d/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "slam2d/textio.hpp"

namespace slam2d {

namespace {
constexpr double kMaxPairGap = 0.05;  // s
}

EvalReport evaluate(const Trajectory& estimated, const Trajectory& truth) {
    if (truth.empty()) {
        throw DataError("evaluate: empty ground truth");
    }
    EvalReport report;
    double sum_pos = 0.0;
    double sum_ang = 0.0;

    for (const TrajPoint& est : estimated) {
        auto it = std::lower_bound(truth.begin(), truth.end(), est.t,
                                   [](const TrajPoint& p, double t) { return p.t < t; });
        const TrajPoint* best = nullptr;
        if (it != truth.end()) {
            best = &*it;
        }
        if (it != truth.begin()) {
            const TrajPoint* prev = &*(it - 1);
            if (!best || std::abs(prev->t - est.t) < std::abs(best->t - est.t)) {
                best = prev;
            }
        }
        if (!best || std::abs(best->t - est.t) > kMaxPairGap) {
            continue;
        }
        const double dx = est.x - best->x;
        const double dy = est.y - best->y;
        const double err_pos = std::hypot(dx, dy);
        const double err_ang = std::abs(wrap_angle(est.theta - best->theta)) * 180.0 / kPi;
        sum_pos += err_pos * err_pos;
        sum_ang += err_ang * err_ang;
        report.errors.push_back({est.t, err_pos, err_ang});
    }
    if (report.errors.empty()) {
        throw DataError("evaluate: no matched pose pairs");
    }
    const double count = static_cast<double>(report.errors.size());
    report.rmse_pos = std::sqrt(sum_pos / count);
    report.rmse_ang_deg = std::sqrt(sum_ang / count);
    return report;
}

Trajectory gt_trajectory(const Dataset& dataset) {
    Trajectory traj;
    traj.reserve(dataset.ground_truth.size());
    for (const GtRecord& r : dataset.ground_truth) {
        traj.push_back({r.t, r.x, r.y, r.theta});
    }
    return traj;
}

std::string write_trajectory(const Trajectory& traj) {
    std::string out;
    for (const TrajPoint& p : traj) {
        out += format_fixed9(p.t) + " " + format_fixed9(p.x) + " " + format_fixed9(p.y) + " " +
               format_fixed9(p.theta) + "\n";
    }
    return out;
}

Trajectory read_trajectory(const std::string& text) {
    Trajectory traj;
    int line_number = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_number;
        if (line.empty()) continue;
        const auto tok = split_whitespace(line);
        if (tok.empty()) continue;
        if (tok.size() != 4) {
            throw DataError("line " + std::to_string(line_number) +
                            ": trajectory expects 't x y theta'");
        }
        TrajPoint p;
        p.t = parse_double(tok[0], line_number);
        p.x = parse_double(tok[1], line_number);
        p.y = parse_double(tok[2], line_number);
        p.theta = parse_double(tok[3], line_number);
        if (!traj.empty() && !(p.t > traj.back().t)) {
            throw DataError("line " + std::to_string(line_number) +
                            ": trajectory timestamps must strictly increase");
        }
        traj.push_back(p);
    }
    return traj;
}

std::string write_eval_report(const EvalReport& report) {
    return "rmse_pos " + format_fixed9(report.rmse_pos) + "\nrmse_ang " +
           format_fixed9(report.rmse_ang_deg) + "\n";
}

std::string write_error_csv(const EvalReport& report) {
    std::string out = "t,err_pos,err_ang\n";
    for (const PoseError& e : report.errors) {
        out += format_fixed9(e.t) + "," + format_fixed9(e.err_pos) + "," +
               format_fixed9(e.err_ang_deg) + "\n";
    }
    return out;
}

}  // namespace slam2d
