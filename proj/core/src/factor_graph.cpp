#include "slam2d/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace slam2d {

namespace {

const Eigen::Matrix2d kSkew = (Eigen::Matrix2d() << 0.0, -1.0, 1.0, 0.0).finished();

Eigen::Matrix3d inverse_spd3(const Eigen::Matrix3d& m) {
    return m.ldlt().solve(Eigen::Matrix3d::Identity());
}

// Residual and Jacobians of a relative-pose measurement in (theta, x, y)
// order, shared by the encoder and lidar factors.
Linearized linearize_pose_delta(const Pose2& pose_i, const Pose2& pose_j, const Pose2& measured) {
    const Eigen::Matrix2d rot_i_t = rotation2(-pose_i.theta);
    const Eigen::Vector2d d = pose_j.translation() - pose_i.translation();
    const Eigen::Vector2d local = rot_i_t * d;

    Linearized lin;
    lin.residual.resize(3);
    lin.residual(0) = wrap_angle(pose_j.theta - pose_i.theta - measured.theta);
    lin.residual.segment<2>(1) = local - measured.translation();

    auto& ji = lin.jacobians[0];
    auto& jj = lin.jacobians[1];
    ji.setZero(3, kStateDim);
    jj.setZero(3, kStateDim);
    ji(0, 2) = -1.0;
    jj(0, 2) = 1.0;
    ji.block<2, 2>(1, 0) = -rot_i_t;
    ji.block<2, 1>(1, 2) = -kSkew * local;
    jj.block<2, 2>(1, 0) = rot_i_t;
    return lin;
}

}  // namespace

int Factor::residual_dim() const {
    switch (kind) {
        case FactorKind::Prior: return kStateDim;
        case FactorKind::Imu: return 5;
        case FactorKind::Encoder: return 3;
        case FactorKind::Lidar: return 3;
        case FactorKind::BiasWalk: return 3;
    }
    return 0;
}

Factor make_prior_factor(NodeId node, const RobotState& mean, const Eigen::MatrixXd& information) {
    Factor f;
    f.kind = FactorKind::Prior;
    f.nodes = {node, node};
    f.num_nodes = 1;
    f.measurement = PriorMeas{mean};
    f.information = information;
    return f;
}

Factor make_imu_factor(NodeId i, NodeId j, const PreintegratedImu& pre) {
    Factor f;
    f.kind = FactorKind::Imu;
    f.nodes = {i, j};
    f.num_nodes = 2;
    f.measurement = ImuMeas{pre};
    f.information =
        pre.covariance.ldlt().solve(Eigen::Matrix<double, 5, 5>::Identity());
    f.information = (0.5 * (f.information + f.information.transpose())).eval();
    return f;
}

Factor make_encoder_factor(NodeId i, NodeId j, const WheelOdomDelta& odom, bool excluded,
                           double weight) {
    Factor f;
    f.kind = FactorKind::Encoder;
    f.nodes = {i, j};
    f.num_nodes = 2;
    f.measurement = EncoderMeas{odom, excluded};
    f.information = inverse_spd3(odom.covariance);
    f.weight = weight;
    return f;
}

Factor make_lidar_factor(NodeId i, NodeId j, const ScanMatchResult& match, bool degraded,
                         double weight) {
    Factor f;
    f.kind = FactorKind::Lidar;
    f.nodes = {i, j};
    f.num_nodes = 2;
    f.measurement = LidarMeas{match, degraded};
    f.information = match.information;
    f.weight = weight;
    return f;
}

Factor make_bias_walk_factor(NodeId i, NodeId j, const ImuNoiseParams& noise, double dt) {
    noise.validate();
    if (!(dt > 0.0)) {
        throw std::invalid_argument("make_bias_walk_factor: dt must be positive");
    }
    Factor f;
    f.kind = FactorKind::BiasWalk;
    f.nodes = {i, j};
    f.num_nodes = 2;
    f.measurement = BiasWalkMeas{};
    Eigen::Vector3d info;
    info << 1.0 / (noise.sigma_gyro_walk * noise.sigma_gyro_walk * dt),
        1.0 / (noise.sigma_accel_walk * noise.sigma_accel_walk * dt),
        1.0 / (noise.sigma_accel_walk * noise.sigma_accel_walk * dt);
    f.information = info.asDiagonal();
    return f;
}

void OptimizerConfig::validate() const {
    if (max_iterations <= 0 || !(lambda_init > 0.0) || !(update_tolerance > 0.0) ||
        !(relin_threshold > 0.0)) {
        throw std::invalid_argument("OptimizerConfig: all parameters must be positive");
    }
}

Linearized linearize(const Factor& factor, std::span<const RobotState> states) {
    const RobotState& si = states[factor.nodes[0]];

    switch (factor.kind) {
        case FactorKind::Prior: {
            const auto& mean = std::get<PriorMeas>(factor.measurement).mean;
            Linearized lin;
            lin.residual.resize(kStateDim);
            lin.residual(0) = si.pose.x - mean.pose.x;
            lin.residual(1) = si.pose.y - mean.pose.y;
            lin.residual(2) = wrap_angle(si.pose.theta - mean.pose.theta);
            lin.residual.segment<2>(3) = si.velocity - mean.velocity;
            lin.residual(5) = si.bias.gyro - mean.bias.gyro;
            lin.residual.segment<2>(6) = si.bias.accel - mean.bias.accel;
            lin.jacobians[0].setIdentity(kStateDim, kStateDim);
            lin.jacobians[1].setZero(kStateDim, kStateDim);
            return lin;
        }
        case FactorKind::Imu: {
            const RobotState& sj = states[factor.nodes[1]];
            const auto& pre = std::get<ImuMeas>(factor.measurement).pre;
            const Eigen::Matrix2d rot_i_t = rotation2(-si.pose.theta);

            Linearized lin;
            lin.residual = residual(si, sj, pre);
            auto& ji = lin.jacobians[0];
            auto& jj = lin.jacobians[1];
            ji.setZero(5, kStateDim);
            jj.setZero(5, kStateDim);

            ji(0, 2) = -1.0;
            jj(0, 2) = 1.0;

            const Eigen::Vector2d dp = sj.pose.translation() - si.pose.translation() -
                                       si.velocity * pre.dt_total;
            ji.block<2, 2>(1, 0) = -rot_i_t;
            ji.block<2, 1>(1, 2) = -kSkew * (rot_i_t * dp);
            ji.block<2, 2>(1, 3) = -pre.dt_total * rot_i_t;
            jj.block<2, 2>(1, 0) = rot_i_t;

            const Eigen::Vector2d dv = sj.velocity - si.velocity;
            ji.block<2, 1>(3, 2) = -kSkew * (rot_i_t * dv);
            ji.block<2, 2>(3, 3) = -rot_i_t;
            jj.block<2, 2>(3, 3) = rot_i_t;
            return lin;
        }
        case FactorKind::Encoder: {
            const RobotState& sj = states[factor.nodes[1]];
            const auto& odom = std::get<EncoderMeas>(factor.measurement).odom;
            return linearize_pose_delta(si.pose, sj.pose, odom.delta);
        }
        case FactorKind::Lidar: {
            const RobotState& sj = states[factor.nodes[1]];
            const auto& match = std::get<LidarMeas>(factor.measurement).match;
            return linearize_pose_delta(si.pose, sj.pose, match.relative_pose);
        }
        case FactorKind::BiasWalk: {
            const RobotState& sj = states[factor.nodes[1]];
            const auto& step = std::get<BiasWalkMeas>(factor.measurement).step;
            Linearized lin;
            lin.residual.resize(3);
            lin.residual(0) = sj.bias.gyro - si.bias.gyro - step.gyro;
            lin.residual.segment<2>(1) = sj.bias.accel - si.bias.accel - step.accel;
            auto& ji = lin.jacobians[0];
            auto& jj = lin.jacobians[1];
            ji.setZero(3, kStateDim);
            jj.setZero(3, kStateDim);
            ji.block<3, 3>(0, 5) = -Eigen::Matrix3d::Identity();
            jj.block<3, 3>(0, 5) = Eigen::Matrix3d::Identity();
            return lin;
        }
    }
    throw std::logic_error("linearize: unknown factor kind");
}

RobotState retract(const RobotState& state, const Eigen::Matrix<double, kStateDim, 1>& delta) {
    RobotState out;
    out.pose = Pose2(state.pose.x + delta(0), state.pose.y + delta(1),
                     state.pose.theta + delta(2));
    out.velocity = state.velocity + delta.segment<2>(3);
    out.bias.gyro = state.bias.gyro + delta(5);
    out.bias.accel = state.bias.accel + delta.segment<2>(6);
    return out;
}

NodeId FactorGraph::add_state(double timestamp, const RobotState& initial_guess) {
    if (!stamps_.empty() && !(timestamp > stamps_.back())) {
        throw std::invalid_argument("add_state: timestamp not after the last node");
    }
    if (!initial_guess.is_finite()) {
        throw std::invalid_argument("add_state: non-finite initial guess");
    }
    states_.push_back(initial_guess);
    stamps_.push_back(timestamp);
    moved_since_relin_.push_back(std::numeric_limits<double>::infinity());
    return states_.size() - 1;
}

bool FactorGraph::add_factor(const Factor& factor) {
    for (int k = 0; k < factor.num_nodes; ++k) {
        if (factor.nodes[k] >= states_.size()) {
            throw std::invalid_argument("add_factor: dangling endpoint");
        }
    }
    if (factor.kind == FactorKind::Lidar &&
        std::get<LidarMeas>(factor.measurement).degraded) {
        return false;
    }
    if (factor.kind == FactorKind::Encoder &&
        std::get<EncoderMeas>(factor.measurement).excluded) {
        return false;
    }
    if (!(factor.weight > 0.0) || factor.weight > 1.0) {
        throw std::invalid_argument("add_factor: weight must lie in (0, 1]");
    }
    factors_.push_back(factor);
    cache_.emplace_back();
    cache_valid_.push_back(false);
    return true;
}

double FactorGraph::total_cost() const {
    double cost = 0.0;
    for (const Factor& f : factors_) {
        const Linearized lin = linearize(f, states_);
        cost += f.weight * lin.residual.dot(f.information * lin.residual);
    }
    return cost;
}

OptimizeResult FactorGraph::optimize(const OptimizerConfig& config) {
    config.validate();
    OptimizeResult result;
    if (states_.empty()) {
        result.converged = true;
        return result;
    }

    const std::size_t dim = states_.size() * kStateDim;
    double lambda = config.lambda_init;
    bool force_full_relin = false;

    double cost = total_cost();
    result.cost_history.push_back(cost);

    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        // Refresh Jacobians of factors whose endpoints moved past the
        // relinearization threshold (or that were never linearized).
        bool all_fresh = true;
        for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
            const Factor& f = factors_[fi];
            bool stale = !cache_valid_[fi] || force_full_relin;
            for (int k = 0; k < f.num_nodes && !stale; ++k) {
                stale = moved_since_relin_[f.nodes[k]] > config.relin_threshold;
            }
            if (stale) {
                cache_[fi] = linearize(f, states_);
                cache_valid_[fi] = true;
                ++result.relinearized_factors;
            } else if (moved_since_relin_[f.nodes[0]] > 0.0 ||
                       (f.num_nodes > 1 && moved_since_relin_[f.nodes[1]] > 0.0)) {
                // Residual is always exact; only the Jacobian may be stale.
                cache_[fi].residual = linearize(f, states_).residual;
                all_fresh = false;
            }
        }
        if (force_full_relin) {
            std::fill(moved_since_relin_.begin(), moved_since_relin_.end(), 0.0);
            force_full_relin = false;
            all_fresh = true;
        } else {
            for (std::size_t n = 0; n < states_.size(); ++n) {
                if (moved_since_relin_[n] > config.relin_threshold) {
                    moved_since_relin_[n] = 0.0;
                }
            }
        }

        // Assemble the normal system H * delta = -g.
        triplets.clear();
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
        for (std::size_t fi = 0; fi < factors_.size(); ++fi) {
            const Factor& f = factors_[fi];
            const Linearized& lin = cache_[fi];
            const Eigen::MatrixXd wi = f.weight * f.information;
            for (int a = 0; a < f.num_nodes; ++a) {
                const Eigen::MatrixXd jtw = lin.jacobians[a].transpose() * wi;
                grad.segment<kStateDim>(f.nodes[a] * kStateDim) += jtw * lin.residual;
                for (int b = 0; b < f.num_nodes; ++b) {
                    const Eigen::MatrixXd block = jtw * lin.jacobians[b];
                    const std::size_t row0 = f.nodes[a] * kStateDim;
                    const std::size_t col0 = f.nodes[b] * kStateDim;
                    for (int r = 0; r < kStateDim; ++r) {
                        for (int c = 0; c < kStateDim; ++c) {
                            if (block(r, c) != 0.0) {
                                triplets.emplace_back(static_cast<int>(row0 + r),
                                                      static_cast<int>(col0 + c), block(r, c));
                            }
                        }
                    }
                }
            }
        }
        Eigen::SparseMatrix<double> hessian(static_cast<int>(dim), static_cast<int>(dim));
        hessian.setFromTriplets(triplets.begin(), triplets.end());

        const Eigen::VectorXd diag = hessian.diagonal();

        // Singularity check on the Jacobi-equilibrated undamped system, which
        // keeps the pivot test meaningful across very different information
        // scales (pose blocks vs. tight bias-walk blocks).
        bool singular = !(diag.minCoeff() > 0.0) || !diag.allFinite();
        if (!singular) {
            Eigen::SparseMatrix<double> scale(static_cast<int>(dim), static_cast<int>(dim));
            scale.setIdentity();
            for (int k = 0; k < scale.rows(); ++k) {
                scale.coeffRef(k, k) = 1.0 / std::sqrt(diag(k));
            }
            const Eigen::SparseMatrix<double> equilibrated = scale * hessian * scale;
            solver.compute(equilibrated);
            singular = solver.info() != Eigen::Success;
            if (!singular) {
                const Eigen::VectorXd d = solver.vectorD();
                singular = !d.allFinite() || d.cwiseAbs().minCoeff() < 1e-12;
            }
        }
        if (singular) {
            throw SingularSystem("optimize: singular normal system (under-constrained graph)");
        }

        // Levenberg-Marquardt inner loop on the exact cost.
        bool accepted = false;
        Eigen::VectorXd delta;
        std::vector<RobotState> backup = states_;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::SparseMatrix<double> damped = hessian;
            for (int k = 0; k < damped.rows(); ++k) {
                damped.coeffRef(k, k) = diag(k) + lambda * diag(k);
            }
            solver.compute(damped);
            if (solver.info() != Eigen::Success) {
                lambda *= 10.0;
                continue;
            }
            delta = solver.solve(-grad);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            for (std::size_t n = 0; n < states_.size(); ++n) {
                states_[n] = retract(backup[n], delta.segment<kStateDim>(n * kStateDim));
            }
            const double new_cost = total_cost();
            if (new_cost <= cost) {
                cost = new_cost;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                break;
            }
            states_ = backup;
            lambda *= 10.0;
        }
        result.iterations = iter + 1;
        if (!accepted) {
            // No descent step found; the current iterate is the solution.
            result.converged = all_fresh;
            break;
        }
        result.cost_history.push_back(cost);

        for (std::size_t n = 0; n < states_.size(); ++n) {
            moved_since_relin_[n] +=
                delta.segment<kStateDim>(n * kStateDim).cwiseAbs().maxCoeff();
        }

        if (delta.norm() < config.update_tolerance) {
            if (all_fresh) {
                result.converged = true;
                break;
            }
            // Converged against cached Jacobians: relinearize everything and
            // confirm before reporting batch-equivalent convergence.
            force_full_relin = true;
        }
    }

    result.final_cost = cost;
    return result;
}

}  // namespace slam2d
