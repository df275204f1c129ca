#include "slam2d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "slam2d/lidar.hpp"
#include "slam2d/textio.hpp"

namespace slam2d {

namespace {

constexpr double kPriorInformation = 1e6;
// Sensor floor on the encoder factor covariance so a rotation-only interval
// (near-zero path length) cannot claim infinite precision.
constexpr double kEncoderCovFloorAng = 1e-6;  // rad^2
constexpr double kEncoderCovFloorPos = 1e-6;  // m^2

std::vector<LaserScan> assemble_scans(const Dataset& dataset, double range_max) {
    std::vector<LaserScan> scans;
    scans.reserve(dataset.scans.size());
    for (std::size_t s = 0; s < dataset.scans.size(); ++s) {
        const ScanRecord& rec = dataset.scans[s];
        double period = 0.0;
        if (s + 1 < dataset.scans.size()) {
            period = dataset.scans[s + 1].t - rec.t;
        } else if (s > 0) {
            period = rec.t - dataset.scans[s - 1].t;
        }
        const std::size_t nb = rec.ranges.size();
        LaserScan scan;
        scan.t_start = rec.t;
        scan.t_end = nb > 1 ? rec.t + period * static_cast<double>(nb - 1) /
                                  static_cast<double>(nb)
                            : rec.t;
        scan.angle_min = rec.angle_min;
        scan.angle_increment = rec.angle_increment;
        scan.range_max = range_max;
        scan.ranges = rec.ranges;
        scans.push_back(std::move(scan));
    }
    return scans;
}

// Zero-order-hold integration of the IMU stream over [t_from, t_to); each
// sample holds from its own timestamp to the next one's.
void integrate_interval(const std::vector<ImuRecord>& imu, double t_from, double t_to,
                        PreintegratedImu& pre, std::vector<TimedImuSample>& buffer,
                        const ImuNoiseParams& noise) {
    if (!(t_to > t_from)) {
        return;
    }
    auto it = std::upper_bound(imu.begin(), imu.end(), t_from,
                               [](double t, const ImuRecord& r) { return t < r.t; });
    std::size_t k = it == imu.begin() ? 0 : static_cast<std::size_t>(it - imu.begin()) - 1;
    for (; k < imu.size(); ++k) {
        const double hold_from = imu[k].t;
        const double hold_to =
            k + 1 < imu.size() ? imu[k + 1].t : std::numeric_limits<double>::infinity();
        const double lo = std::max(hold_from, t_from);
        const double hi = std::min(hold_to, t_to);
        if (hi <= lo) {
            if (hold_from >= t_to) break;
            continue;
        }
        TimedImuSample ts;
        ts.sample = {imu[k].t, imu[k].wz, {imu[k].ax, imu[k].ay}};
        ts.dt = hi - lo;
        pre = integrate(pre, ts.sample, ts.dt, noise);
        buffer.push_back(ts);
    }
}

}  // namespace

RunMode parse_run_mode(const std::string& name) {
    if (name == "fused") return RunMode::Fused;
    if (name == "lidar_only") return RunMode::LidarOnly;
    if (name == "encoder_only") return RunMode::EncoderOnly;
    throw DataError("unknown mode '" + name + "'");
}

std::string run_mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::Fused: return "fused";
        case RunMode::LidarOnly: return "lidar_only";
        case RunMode::EncoderOnly: return "encoder_only";
    }
    return "fused";
}

void RunConfig::validate() const {
    if (!(keyframe_distance > 0.0) || !(keyframe_angle > 0.0) || !(eps_range > 0.0) ||
        !(min_motion > 0.0) || !(tau_e > 0.0) || !(range_max > 0.0) ||
        !(map_resolution > 0.0)) {
        throw std::invalid_argument("RunConfig: thresholds must be positive");
    }
    lidar_weights.validate();
    encoder_weights.validate();
    optimizer.validate();
    imu_noise.validate();
    encoder_params.validate();
}

RunConfig parse_run_config(const std::string& text) {
    RunConfig config;
    int line_number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_number;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const auto tok = split_whitespace(line);
        if (tok.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        if (tok.size() != 2 && !(tok[0] == "origin" && tok.size() == 3)) {
            throw DataError("line " + std::to_string(line_number) +
                            ": config expects 'key value'");
        }
        const std::string& key = tok[0];
        auto number = [&] { return parse_double(tok[1], line_number); };
        if (key == "keyframe_distance") config.keyframe_distance = number();
        else if (key == "keyframe_angle") config.keyframe_angle = number();
        else if (key == "eps_range") config.eps_range = number();
        else if (key == "min_motion") config.min_motion = number();
        else if (key == "tau_e") config.tau_e = number();
        else if (key == "lidar_tau") config.lidar_weights.tau = number();
        else if (key == "lidar_kappa") config.lidar_weights.kappa = number();
        else if (key == "lidar_w_min") config.lidar_weights.w_min = number();
        else if (key == "encoder_tau") config.encoder_weights.tau = number();
        else if (key == "encoder_kappa") config.encoder_weights.kappa = number();
        else if (key == "encoder_w_min") config.encoder_weights.w_min = number();
        else if (key == "max_iterations") config.optimizer.max_iterations = static_cast<int>(parse_int(tok[1], line_number));
        else if (key == "lambda_init") config.optimizer.lambda_init = number();
        else if (key == "update_tolerance") config.optimizer.update_tolerance = number();
        else if (key == "relin_threshold") config.optimizer.relin_threshold = number();
        else if (key == "mode") config.mode = parse_run_mode(tok[1]);
        else if (key == "sigma_gyro") config.imu_noise.sigma_gyro = number();
        else if (key == "sigma_accel") config.imu_noise.sigma_accel = number();
        else if (key == "sigma_gyro_walk") config.imu_noise.sigma_gyro_walk = number();
        else if (key == "sigma_accel_walk") config.imu_noise.sigma_accel_walk = number();
        else if (key == "ticks_per_meter") config.encoder_params.ticks_per_meter = number();
        else if (key == "wheel_base") config.encoder_params.wheel_base = number();
        else if (key == "sigma_d") config.encoder_params.sigma_d = number();
        else if (key == "sigma_theta") config.encoder_params.sigma_theta = number();
        else if (key == "range_max") config.range_max = number();
        else if (key == "map_resolution") config.map_resolution = number();
        else {
            throw DataError("line " + std::to_string(line_number) + ": unknown config key '" +
                            key + "'");
        }
        if (pos > text.size()) break;
    }
    config.validate();
    return config;
}

std::size_t RunDiagnostics::count_degraded() const {
    return static_cast<std::size_t>(std::count_if(keyframe_pairs.begin(), keyframe_pairs.end(),
                                                  [](const auto& k) { return k.degraded; }));
}
std::size_t RunDiagnostics::count_moving() const {
    return static_cast<std::size_t>(std::count_if(keyframe_pairs.begin(), keyframe_pairs.end(),
                                                  [](const auto& k) { return k.moving; }));
}
std::size_t RunDiagnostics::count_lidar_inserted() const {
    return static_cast<std::size_t>(std::count_if(keyframe_pairs.begin(), keyframe_pairs.end(),
                                                  [](const auto& k) { return k.lidar_inserted; }));
}
std::size_t RunDiagnostics::count_slip_excluded() const {
    return static_cast<std::size_t>(std::count_if(keyframe_pairs.begin(), keyframe_pairs.end(),
                                                  [](const auto& k) { return k.slip_excluded; }));
}

RunResult run_slam(const Dataset& dataset, const RunConfig& config) {
    config.validate();
    if (dataset.scans.empty()) {
        throw DataError("run_slam: dataset contains no scans");
    }
    if (dataset.imu.empty() || dataset.imu.front().t > dataset.scans.front().t) {
        throw DataError("run_slam: dataset lacks spanning IMU coverage");
    }

    const std::vector<LaserScan> scans = assemble_scans(dataset, config.range_max);

    std::vector<EncoderSample> encoder_samples;
    encoder_samples.reserve(dataset.encoder.size());
    for (const EncRecord& r : dataset.encoder) {
        encoder_samples.push_back({r.t, r.left, r.right});
    }

    FactorGraph graph;
    RunDiagnostics diag;
    diag.num_scans = scans.size();

    struct Keyframe {
        NodeId node;
        double t;
        PointCloud2D cloud;
        const LaserScan* scan;
    };
    std::vector<Keyframe> keyframes;

    ImuBias current_bias;
    PreintegratedImu active;
    std::vector<TimedImuSample> active_buffer;
    double integrated_to = 0.0;

    // Sweep-spanning preintegration for deskew. Seeding delta_v with the
    // estimated body-frame velocity at sweep start folds the whole relative
    // motion (not just its acceleration part) into the interpolated poses.
    auto scan_preintegration = [&](const LaserScan& scan, const RobotState& ref_state,
                                   double ref_time) {
        PreintegratedImu to_start;
        to_start.bias_lin = current_bias;
        std::vector<TimedImuSample> tmp;
        if (scan.t_start > ref_time) {
            integrate_interval(dataset.imu, ref_time, scan.t_start, to_start, tmp,
                               config.imu_noise);
        }
        const RobotState at_start = predict(ref_state, to_start);

        PreintegratedImu pre;
        pre.bias_lin = current_bias;
        pre.delta_v = rotation2(-at_start.pose.theta) * at_start.velocity;
        tmp.clear();
        integrate_interval(dataset.imu, scan.t_start, scan.t_end, pre, tmp, config.imu_noise);
        return pre;
    };

    for (const LaserScan& scan : scans) {
        if (keyframes.empty()) {
            // The gauge anchor is the dataset origin, at rest when recording
            // starts; node 0 sits at the first sweep's end, predicted from
            // that anchor so the startup acceleration is not lost.
            PreintegratedImu pre0;
            std::vector<TimedImuSample> tmp;
            integrate_interval(dataset.imu, dataset.imu.front().t, scan.t_end, pre0, tmp,
                               config.imu_noise);
            const RobotState guess0 = predict(RobotState{}, pre0);
            const NodeId node = graph.add_state(scan.t_end, guess0);
            Eigen::MatrixXd info = Eigen::MatrixXd::Identity(kStateDim, kStateDim);
            info *= kPriorInformation;
            graph.add_factor(make_prior_factor(node, guess0, info));
            graph.optimize(config.optimizer);

            keyframes.push_back(
                {node, scan.t_end,
                 deskew(scan, scan_preintegration(scan, RobotState{}, dataset.imu.front().t)),
                 &scan});
            active = PreintegratedImu{};
            active.bias_lin = current_bias;
            active_buffer.clear();
            integrated_to = scan.t_end;
            continue;
        }

        integrate_interval(dataset.imu, integrated_to, scan.t_end, active, active_buffer,
                           config.imu_noise);
        integrated_to = scan.t_end;

        Keyframe& last = keyframes.back();
        const RobotState last_state = graph.state(last.node);
        const RobotState predicted = predict(last_state, active);
        const Pose2 predicted_rel = between(last_state.pose, predicted.pose);
        const PointCloud2D cloud = deskew(scan, scan_preintegration(scan, last_state, last.t));

        const bool is_keyframe =
            predicted_rel.translation().norm() > config.keyframe_distance ||
            std::abs(predicted_rel.theta) > config.keyframe_angle;
        if (!is_keyframe) {
            continue;
        }

        KeyframeDiagnostics kd;
        kd.t_i = last.t;
        kd.t_j = scan.t_end;

        // Encoder relative motion over the keyframe interval.
        std::optional<WheelOdomDelta> enc;
        if (!encoder_samples.empty() && encoder_samples.front().t <= last.t &&
            encoder_samples.back().t >= scan.t_end) {
            enc = integrate_encoder(encoder_samples, last.t, scan.t_end, config.encoder_params);
        }
        const double commanded_motion =
            enc ? enc->path_length : predicted_rel.translation().norm();

        // The slip gate protects the fused estimate; the encoder-only
        // baseline runs its odometry raw, mirroring the unweighted
        // lidar-only baseline.
        const SlipReport slip =
            enc ? detect_slip(*enc, predicted_rel, config.tau_e) : SlipReport{};
        const bool slip_applied =
            config.mode == RunMode::Fused && enc.has_value() && slip.excluded;
        kd.slip_discrepancy = slip.discrepancy;
        kd.slip_excluded = slip_applied;

        const DegradationReport degradation =
            degradation_score(*last.scan, scan, commanded_motion, config.eps_range,
                              config.min_motion, config.lidar_weights);
        kd.moving = commanded_motion > config.min_motion;
        kd.degradation = degradation.score;
        kd.degraded = degradation.degraded;

        std::optional<ScanMatchResult> match = match_scans(last.cloud, cloud, predicted_rel);
        kd.match_failed = !match || !match->converged;

        const NodeId node = graph.add_state(scan.t_end, predicted);

        graph.add_factor(make_imu_factor(last.node, node, active));
        graph.add_factor(
            make_bias_walk_factor(last.node, node, config.imu_noise, active.dt_total));

        if (config.mode != RunMode::LidarOnly && enc) {
            WheelOdomDelta floored = *enc;
            floored.covariance(0, 0) += kEncoderCovFloorAng;
            floored.covariance(1, 1) += kEncoderCovFloorPos;
            floored.covariance(2, 2) += kEncoderCovFloorPos;
            const double weight =
                config.mode == RunMode::Fused
                    ? weight_from_deviation(slip.discrepancy, config.encoder_weights)
                    : 1.0;
            kd.encoder_inserted = graph.add_factor(
                make_encoder_factor(last.node, node, floored, slip_applied, weight));
        }
        if (config.mode != RunMode::EncoderOnly && match && match->converged) {
            const bool degraded_flag =
                config.mode == RunMode::LidarOnly ? false : degradation.degraded;
            const double weight =
                config.mode == RunMode::LidarOnly ? 1.0 : degradation.weight;
            kd.lidar_inserted = graph.add_factor(
                make_lidar_factor(last.node, node, *match, degraded_flag, weight));
        }

        graph.optimize(config.optimizer);

        // Feed the optimized bias back into the next preintegration buffer.
        current_bias = graph.state(node).bias;
        active_buffer.clear();
        active = reset_with_bias(PreintegratedImu{}, active_buffer, current_bias,
                                 config.imu_noise);

        diag.keyframe_pairs.push_back(kd);
        keyframes.push_back({node, scan.t_end, cloud, &scan});
    }

    diag.num_keyframes = keyframes.size();

    // Rebuild the map from the optimized poses.
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    for (const Keyframe& kf : keyframes) {
        const Pose2 pose = graph.state(kf.node).pose;
        min_x = std::min(min_x, pose.x);
        min_y = std::min(min_y, pose.y);
        max_x = std::max(max_x, pose.x);
        max_y = std::max(max_y, pose.y);
        for (const Eigen::Vector2d& p : kf.cloud.points) {
            const Eigen::Vector2d w = pose * p;
            min_x = std::min(min_x, w.x());
            min_y = std::min(min_y, w.y());
            max_x = std::max(max_x, w.x());
            max_y = std::max(max_y, w.y());
        }
    }
    const double pad = 1.0;
    const double res = config.map_resolution;
    const Eigen::Vector2d origin(std::floor((min_x - pad) / res) * res,
                                 std::floor((min_y - pad) / res) * res);
    const int width = static_cast<int>(std::ceil((max_x + pad - origin.x()) / res));
    const int height = static_cast<int>(std::ceil((max_y + pad - origin.y()) / res));

    RunResult result{Trajectory{}, OccupancyGrid(res, origin, width, height), std::move(diag)};
    for (const Keyframe& kf : keyframes) {
        result.grid.insert_scan(graph.state(kf.node).pose, kf.cloud);
    }
    result.trajectory.reserve(graph.num_nodes());
    for (NodeId id = 0; id < graph.num_nodes(); ++id) {
        const RobotState& s = graph.state(id);
        result.trajectory.push_back({graph.timestamp(id), s.pose.x, s.pose.y, s.pose.theta});
    }
    return result;
}

}  // namespace slam2d
