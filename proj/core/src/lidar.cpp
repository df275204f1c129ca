#include "slam2d/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Cholesky>

namespace slam2d {

namespace {

constexpr double kCellSize = 0.5;        // m, spatial index cell
constexpr double kMaxCorrDist = 0.5;     // m, correspondence rejection radius
constexpr int kMaxIterations = 30;
constexpr double kUpdateTol = 1e-6;
constexpr int kMinCorrespondences = 10;
constexpr double kMinResidualVar = 1e-8;  // floor for the variance scaling

struct CellIndex {
    std::int32_t ix;
    std::int32_t iy;
    bool operator==(const CellIndex&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellIndex& c) const {
        const std::uint64_t h = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.ix)) << 32) |
                                static_cast<std::uint32_t>(c.iy);
        // splitmix64 finalizer
        std::uint64_t z = h + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<std::size_t>(z ^ (z >> 31));
    }
};

CellIndex cell_of(const Eigen::Vector2d& p) {
    return {static_cast<std::int32_t>(std::floor(p.x() / kCellSize)),
            static_cast<std::int32_t>(std::floor(p.y() / kCellSize))};
}

class PointIndex {
  public:
    explicit PointIndex(const std::vector<Eigen::Vector2d>& points) : points_(points) {
        cells_.reserve(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) {
            cells_[cell_of(points[i])].push_back(i);
        }
    }

    // Two nearest reference points within the 3x3 cell neighborhood of q.
    // Returns the number found (0, 1 or 2).
    int two_nearest(const Eigen::Vector2d& q, std::size_t* n1, std::size_t* n2) const {
        const CellIndex c = cell_of(q);
        double best1 = std::numeric_limits<double>::infinity();
        double best2 = std::numeric_limits<double>::infinity();
        std::size_t i1 = 0, i2 = 0;
        int found = 0;
        for (std::int32_t dx = -1; dx <= 1; ++dx) {
            for (std::int32_t dy = -1; dy <= 1; ++dy) {
                auto it = cells_.find({c.ix + dx, c.iy + dy});
                if (it == cells_.end()) continue;
                for (std::size_t i : it->second) {
                    const double d2 = (points_[i] - q).squaredNorm();
                    if (d2 < best1) {
                        best2 = best1; i2 = i1;
                        best1 = d2; i1 = i;
                        found = std::min(found + 1, 2);
                    } else if (d2 < best2) {
                        best2 = d2; i2 = i;
                        found = std::min(found + 1, 2);
                    }
                }
            }
        }
        *n1 = i1;
        *n2 = i2;
        if (found >= 1 && best1 > kMaxCorrDist * kMaxCorrDist) return 0;
        return found;
    }

  private:
    const std::vector<Eigen::Vector2d>& points_;
    std::unordered_map<CellIndex, std::vector<std::size_t>, CellHash> cells_;
};

struct Correspondence {
    Eigen::Vector2d point;   // current-cloud point, untransformed
    Eigen::Vector2d anchor;  // nearest reference point
    Eigen::Vector2d normal;  // unit normal of the local reference line
};

double correspondence_cost(const std::vector<Correspondence>& corr, const Pose2& t) {
    double sum = 0.0;
    for (const auto& c : corr) {
        const double r = c.normal.dot(t * c.point - c.anchor);
        sum += r * r;
    }
    return corr.empty() ? 0.0 : sum / static_cast<double>(corr.size());
}

}  // namespace

PointCloud2D deskew(const LaserScan& scan, const PreintegratedImu& pre) {
    if (scan.t_end < scan.t_start || !(scan.angle_increment > 0.0)) {
        throw std::invalid_argument("deskew: malformed scan");
    }
    if (std::abs(pre.dt_total - (scan.t_end - scan.t_start)) > 1e-9) {
        throw std::invalid_argument("deskew: preintegration does not span the scan");
    }

    const Pose2 motion(pre.delta_p.x(), pre.delta_p.y(), pre.delta_theta);
    const Pose2 end_inv = inverse(motion);
    const std::size_t n = scan.ranges.size();

    PointCloud2D cloud;
    cloud.points.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (!scan.beam_valid(k)) continue;
        const double angle = scan.angle_min + static_cast<double>(k) * scan.angle_increment;
        const Eigen::Vector2d p =
            scan.ranges[k] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
        const double f = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0;
        const Pose2 at_beam(f * pre.delta_p.x(), f * pre.delta_p.y(), f * pre.delta_theta);
        cloud.points.push_back(compose(end_inv, at_beam) * p);
    }
    return cloud;
}

namespace {

std::vector<Correspondence> build_correspondences(const PointIndex& index,
                                                  const std::vector<Eigen::Vector2d>& reference,
                                                  const std::vector<Eigen::Vector2d>& current,
                                                  const Pose2& estimate, bool trim) {
    std::vector<Correspondence> corr;
    corr.reserve(current.size());
    for (const Eigen::Vector2d& q : current) {
        const Eigen::Vector2d w = estimate * q;
        std::size_t i1, i2;
        if (index.two_nearest(w, &i1, &i2) < 2) continue;
        const Eigen::Vector2d a = reference[i1];
        const Eigen::Vector2d b = reference[i2];
        Eigen::Vector2d dir = b - a;
        const double len = dir.norm();
        if (len < 1e-9) continue;
        dir /= len;
        corr.push_back({q, a, Eigen::Vector2d(-dir.y(), dir.x())});
    }

    // Median-gated trim once the estimate is in the basin: points matched
    // across surface boundaries (corner chords, occlusion edges) carry
    // residuals far above the bulk there and would bias the minimizer. Far
    // from convergence the gate would instead eat the informative minority,
    // so it stays off.
    if (trim && corr.size() >= static_cast<std::size_t>(kMinCorrespondences)) {
        std::vector<double> abs_residuals;
        abs_residuals.reserve(corr.size());
        for (const auto& c : corr) {
            abs_residuals.push_back(std::abs(c.normal.dot(estimate * c.point - c.anchor)));
        }
        std::vector<double> sorted = abs_residuals;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double gate = std::max(10.0 * sorted[sorted.size() / 2], 0.05);
        std::vector<Correspondence> kept;
        kept.reserve(corr.size());
        for (std::size_t k = 0; k < corr.size(); ++k) {
            if (abs_residuals[k] <= gate) {
                kept.push_back(corr[k]);
            }
        }
        if (kept.size() >= static_cast<std::size_t>(kMinCorrespondences)) {
            corr = std::move(kept);
        }
    }
    return corr;
}

}  // namespace

std::optional<ScanMatchResult> match_scans(const PointCloud2D& reference,
                                           const PointCloud2D& current,
                                           const Pose2& initial_guess) {
    if (reference.points.size() < 30 || current.points.size() < 30) {
        throw std::invalid_argument("match_scans: clouds must contain at least 30 points");
    }

    const PointIndex index(reference.points);
    Pose2 estimate = initial_guess;

    ScanMatchResult result;
    bool trim = false;

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        const std::vector<Correspondence> corr =
            build_correspondences(index, reference.points, current.points, estimate, trim);
        if (static_cast<int>(corr.size()) < kMinCorrespondences) {
            return std::nullopt;  // insufficient overlap
        }

        // The recorded objective: mean squared point-to-line distance with
        // the correspondences re-matched at the current estimate.
        const double cost_now = correspondence_cost(corr, estimate);
        result.cost_history.push_back(cost_now);
        result.iterations = iter + 1;

        Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        const Eigen::Matrix2d rot = estimate.rotation();
        for (const auto& c : corr) {
            const Eigen::Vector2d w = rot * c.point + estimate.translation();
            const double r = c.normal.dot(w - c.anchor);
            const Eigen::Vector2d dw_dth = rot * Eigen::Vector2d(-c.point.y(), c.point.x());
            Eigen::Vector3d j;
            j << c.normal.dot(dw_dth), c.normal.x(), c.normal.y();
            h += j * j.transpose();
            g += j * r;
        }
        // Tiny damping keeps degenerate directions (e.g. along a featureless
        // corridor) fixed at the initial guess instead of diverging.
        const Eigen::Matrix3d damped =
            h + 1e-12 * h.trace() * Eigen::Matrix3d::Identity();
        Eigen::Vector3d delta = damped.ldlt().solve(-g);

        // Halve the step until the re-matched objective is nonincreasing.
        bool accepted = false;
        for (int back = 0; back < 20; ++back) {
            const Pose2 trial(estimate.x + delta(1), estimate.y + delta(2),
                              estimate.theta + delta(0));
            const auto trial_corr =
                build_correspondences(index, reference.points, current.points, trial, trim);
            if (static_cast<int>(trial_corr.size()) >= kMinCorrespondences &&
                correspondence_cost(trial_corr, trial) <= cost_now + 1e-15) {
                estimate = trial;
                accepted = true;
                break;
            }
            delta *= 0.5;
        }
        const bool small_step = delta.norm() < kUpdateTol;
        if (!trim && (small_step || delta.norm() < 1e-2)) {
            trim = true;  // polish against the gated correspondence set
            continue;
        }
        if (!accepted || small_step) {
            result.converged = accepted || small_step;
            break;
        }
    }

    // Final correspondence pass for the reported statistics.
    const std::vector<Correspondence> corr =
        build_correspondences(index, reference.points, current.points, estimate, true);
    if (static_cast<int>(corr.size()) < kMinCorrespondences) {
        return std::nullopt;
    }

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    double sum_sq = 0.0;
    double sum_abs = 0.0;
    for (const auto& c : corr) {
        const double r = c.normal.dot(estimate * c.point - c.anchor);
        const Eigen::Vector2d dw_dth =
            estimate.rotation() * Eigen::Vector2d(-c.point.y(), c.point.x());
        Eigen::Vector3d j;
        j << c.normal.dot(dw_dth), c.normal.x(), c.normal.y();
        h += j * j.transpose();
        sum_sq += r * r;
        sum_abs += std::abs(r);
    }
    const double dof = std::max<double>(static_cast<double>(corr.size()) - 3.0, 1.0);
    const double variance = std::max(sum_sq / dof, kMinResidualVar);

    result.relative_pose = estimate;
    result.information = h / variance;
    result.information = (0.5 * (result.information + result.information.transpose())).eval();
    result.mean_residual = sum_abs / static_cast<double>(corr.size());
    return result;
}

DegradationReport degradation_score(const LaserScan& prev, const LaserScan& cur,
                                    double commanded_motion, double eps_range, double min_motion,
                                    const WeightParams& weights) {
    const bool same_layout = prev.ranges.size() == cur.ranges.size() &&
                             prev.angle_min == cur.angle_min &&
                             prev.angle_increment == cur.angle_increment &&
                             prev.range_max == cur.range_max;
    if (!same_layout) {
        throw std::invalid_argument("degradation_score: mismatched beam layout");
    }

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < cur.ranges.size(); ++k) {
        if (!prev.beam_valid(k) || !cur.beam_valid(k)) continue;
        sum += std::abs(cur.ranges[k] - prev.ranges[k]);
        ++count;
    }
    if (count == 0) {
        throw std::invalid_argument("degradation_score: no commonly valid beams");
    }

    DegradationReport report;
    report.score = sum / static_cast<double>(count);
    const bool moving = commanded_motion > min_motion;
    report.degraded = moving && report.score < eps_range;
    report.weight =
        moving ? weight_from_deviation(std::max(0.0, eps_range - report.score), weights) : 1.0;
    return report;
}

}  // namespace slam2d
