#ifndef SLAM2D_FACTOR_GRAPH_HPP
#define SLAM2D_FACTOR_GRAPH_HPP

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "slam2d/encoder.hpp"
#include "slam2d/geometry.hpp"
#include "slam2d/imu.hpp"
#include "slam2d/lidar.hpp"
#include "slam2d/weighting.hpp"

namespace slam2d {

using NodeId = std::size_t;

/// Per-node local parameterization order: (x, y, theta, v_x, v_y, b_g, b_ax, b_ay).
inline constexpr int kStateDim = 8;

/// Thrown when the normal system of an under-constrained graph is singular.
class SingularSystem : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class FactorKind { Prior, Imu, Encoder, Lidar, BiasWalk };

struct PriorMeas {
    RobotState mean;
};
struct ImuMeas {
    PreintegratedImu pre;
};
struct EncoderMeas {
    WheelOdomDelta odom;
    bool excluded = false;
};
struct LidarMeas {
    ScanMatchResult match;
    bool degraded = false;
};
struct BiasWalkMeas {
    ImuBias step;  // expected bias change, normally zero
};

/// Typed constraint between one or two nodes. The effective information is
/// weight * information.
struct Factor {
    FactorKind kind = FactorKind::Prior;
    std::array<NodeId, 2> nodes = {0, 0};
    int num_nodes = 1;
    std::variant<PriorMeas, ImuMeas, EncoderMeas, LidarMeas, BiasWalkMeas> measurement;
    Eigen::MatrixXd information;
    double weight = 1.0;

    int residual_dim() const;
};

Factor make_prior_factor(NodeId node, const RobotState& mean, const Eigen::MatrixXd& information);
/// Information defaults to the inverse of the preintegrated covariance.
Factor make_imu_factor(NodeId i, NodeId j, const PreintegratedImu& pre);
Factor make_encoder_factor(NodeId i, NodeId j, const WheelOdomDelta& odom, bool excluded,
                           double weight);
Factor make_lidar_factor(NodeId i, NodeId j, const ScanMatchResult& match, bool degraded,
                         double weight);
/// Random-walk link between consecutive biases over an interval dt.
Factor make_bias_walk_factor(NodeId i, NodeId j, const ImuNoiseParams& noise, double dt);

struct OptimizerConfig {
    int max_iterations = 50;
    double lambda_init = 1e-4;
    double update_tolerance = 1e-8;
    double relin_threshold = 1e-3;

    void validate() const;
};

struct OptimizeResult {
    int iterations = 0;
    bool converged = false;
    double final_cost = 0.0;
    std::vector<double> cost_history;  // cost at each accepted iterate, front = initial
    int relinearized_factors = 0;
};

/// Residual and per-endpoint Jacobian blocks at the current state values.
struct Linearized {
    Eigen::VectorXd residual;
    std::array<Eigen::Matrix<double, Eigen::Dynamic, kStateDim>, 2> jacobians;
};

Linearized linearize(const Factor& factor, std::span<const RobotState> states);

/// Applies a local update, wrapping the heading component.
RobotState retract(const RobotState& state, const Eigen::Matrix<double, kStateDim, 1>& delta);

/// States as nodes, weighted sensor constraints as factors; MAP estimation by
/// sparse Gauss-Newton with a Levenberg-Marquardt fallback. optimize()
/// warm-starts from the previous solution and relinearizes selectively, with
/// a full relinearization pass before declaring convergence so the result
/// matches a cold batch solve.
class FactorGraph {
  public:
    NodeId add_state(double timestamp, const RobotState& initial_guess);

    /// Inserts the factor unless its measurement is flagged degraded/excluded.
    /// Returns whether it was inserted. Throws on dangling endpoints.
    bool add_factor(const Factor& factor);

    OptimizeResult optimize(const OptimizerConfig& config = {});

    std::size_t num_nodes() const { return states_.size(); }
    std::size_t num_factors() const { return factors_.size(); }
    const RobotState& state(NodeId id) const { return states_.at(id); }
    double timestamp(NodeId id) const { return stamps_.at(id); }
    const std::vector<RobotState>& states() const { return states_; }
    const std::vector<Factor>& factors() const { return factors_; }

  private:
    double total_cost() const;

    std::vector<RobotState> states_;
    std::vector<double> stamps_;
    std::vector<Factor> factors_;

    // Warm-start bookkeeping: cached Jacobians and per-node motion since the
    // cache entry was built.
    std::vector<Linearized> cache_;
    std::vector<bool> cache_valid_;
    std::vector<double> moved_since_relin_;
};

}  // namespace slam2d

#endif
