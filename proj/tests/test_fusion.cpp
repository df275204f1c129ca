#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "slam2d/factor_graph.hpp"
#include "slam2d/rng.hpp"

using namespace slam2d;

namespace {

const ImuNoiseParams kNoise{1e-3, 1e-2, 1e-5, 1e-4};

Eigen::MatrixXd tight_prior_information() {
    return 1e6 * Eigen::MatrixXd::Identity(kStateDim, kStateDim);
}

// Pose-only test graphs still need the velocity/bias block anchored.
Factor vb_anchor(NodeId node) {
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(kStateDim, kStateDim);
    for (int k = 3; k < kStateDim; ++k) {
        info(k, k) = 1.0;
    }
    return make_prior_factor(node, RobotState{}, info);
}

Factor pose_factor(NodeId i, NodeId j, const Pose2& measured, const Eigen::Matrix3d& info) {
    ScanMatchResult match;
    match.relative_pose = measured;
    match.information = info;
    match.converged = true;
    return make_lidar_factor(i, j, match, false, 1.0);
}

RobotState state_at(double x, double y, double theta) {
    RobotState s;
    s.pose = Pose2(x, y, theta);
    return s;
}

RobotState random_state(SplitMix64& rng) {
    RobotState s;
    s.pose = Pose2(2.0 * (rng.uniform() - 0.5), 2.0 * (rng.uniform() - 0.5),
                   3.0 * (rng.uniform() - 0.5));
    s.velocity = {rng.uniform() - 0.5, rng.uniform() - 0.5};
    s.bias.gyro = 0.2 * (rng.uniform() - 0.5);
    s.bias.accel = {0.2 * (rng.uniform() - 0.5), 0.2 * (rng.uniform() - 0.5)};
    return s;
}

// Central finite differences of the factor residual.
void check_jacobian_fd(const Factor& factor, std::vector<RobotState> states) {
    const Linearized lin = linearize(factor, states);
    const double step = 1e-6;
    for (int e = 0; e < factor.num_nodes; ++e) {
        const NodeId node = factor.nodes[e];
        for (int d = 0; d < kStateDim; ++d) {
            Eigen::Matrix<double, kStateDim, 1> delta =
                Eigen::Matrix<double, kStateDim, 1>::Zero();
            delta(d) = step;
            std::vector<RobotState> plus = states;
            std::vector<RobotState> minus = states;
            plus[node] = retract(states[node], delta);
            minus[node] = retract(states[node], -delta);
            const Eigen::VectorXd fd =
                (linearize(factor, plus).residual - linearize(factor, minus).residual) /
                (2.0 * step);
            for (int r = 0; r < fd.size(); ++r) {
                const double analytic = lin.jacobians[e](r, d);
                const double scale = std::max(1.0, std::abs(fd(r)));
                CHECK(std::abs(analytic - fd(r)) < 1e-5 * scale);
            }
        }
    }
}

PreintegratedImu random_pre(SplitMix64& rng, const ImuBias& bias) {
    PreintegratedImu pre;
    pre.bias_lin = bias;
    for (int k = 0; k < 20; ++k) {
        pre = integrate(pre,
                        {k * 0.01, rng.uniform() - 0.5,
                         {rng.uniform() - 0.5, rng.uniform() - 0.5}},
                        0.01, kNoise);
    }
    return pre;
}

}  // namespace

TEST_CASE("weight_from_deviation") {
    const WeightParams params{0.2, 4.0, 0.05};
    CHECK(weight_from_deviation(0.0, params) == doctest::Approx(1.0));
    CHECK(weight_from_deviation(0.2, params) == doctest::Approx(1.0));
    CHECK(weight_from_deviation(0.2 + 1.0 / 4.0, params) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(weight_from_deviation(100.0, params) == doctest::Approx(0.05));
    CHECK_THROWS_AS(weight_from_deviation(-0.1, params), std::invalid_argument);

    // continuity just past tau
    CHECK(weight_from_deviation(0.2 + 1e-12, params) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("add_state allocates dense ids and rejects stale timestamps") {
    FactorGraph graph;
    CHECK(graph.add_state(0.0, RobotState{}) == 0);
    CHECK(graph.add_state(1.0, RobotState{}) == 1);
    CHECK_THROWS_AS(graph.add_state(0.5, RobotState{}), std::invalid_argument);
    CHECK_THROWS_AS(graph.add_state(1.0, RobotState{}), std::invalid_argument);
}

TEST_CASE("add_factor applies the exclusion rules") {
    FactorGraph graph;
    graph.add_state(0.0, RobotState{});
    graph.add_state(1.0, state_at(1.0, 0.0, 0.0));

    SUBCASE("degraded lidar factors are rejected") {
        ScanMatchResult match;
        match.information = Eigen::Matrix3d::Identity();
        const std::size_t before = graph.num_factors();
        CHECK_FALSE(graph.add_factor(make_lidar_factor(0, 1, match, true, 0.5)));
        CHECK(graph.num_factors() == before);
    }
    SUBCASE("imu factors between existing nodes are accepted") {
        SplitMix64 rng(31);
        CHECK(graph.add_factor(make_imu_factor(0, 1, random_pre(rng, ImuBias{}))));
        CHECK(graph.num_factors() == 1);
    }
    SUBCASE("slip-excluded encoder factors are rejected") {
        WheelOdomDelta odom;
        odom.covariance = Eigen::Matrix3d::Identity();
        CHECK_FALSE(graph.add_factor(make_encoder_factor(0, 1, odom, true, 1.0)));
        CHECK(graph.num_factors() == 0);
    }
    SUBCASE("dangling endpoints throw") {
        ScanMatchResult match;
        match.information = Eigen::Matrix3d::Identity();
        CHECK_THROWS_AS(graph.add_factor(make_lidar_factor(0, 7, match, false, 1.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("linearize gives zero residual on consistent factors") {
    SplitMix64 rng(32);
    std::vector<RobotState> states;
    states.push_back(random_state(rng));

    SUBCASE("prior at its mean") {
        const Factor prior = make_prior_factor(0, states[0], tight_prior_information());
        const Linearized lin = linearize(prior, states);
        CHECK(lin.residual.cwiseAbs().maxCoeff() < 1e-12);
        CHECK((lin.jacobians[0] - Eigen::MatrixXd::Identity(kStateDim, kStateDim)).norm() == 0.0);
    }
    SUBCASE("imu factor at the prediction") {
        const PreintegratedImu pre = random_pre(rng, states[0].bias);
        states.push_back(predict(states[0], pre));
        const Linearized lin = linearize(make_imu_factor(0, 1, pre), states);
        CHECK(lin.residual.cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("pose factor at the measured relative pose") {
        states.push_back(random_state(rng));
        const Pose2 rel = between(states[0].pose, states[1].pose);
        const Linearized lin =
            linearize(pose_factor(0, 1, rel, Eigen::Matrix3d::Identity()), states);
        CHECK(lin.residual.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("analytic Jacobians match central finite differences") {
    SplitMix64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<RobotState> states{random_state(rng), random_state(rng)};

        check_jacobian_fd(make_prior_factor(0, random_state(rng), tight_prior_information()),
                          states);
        check_jacobian_fd(make_imu_factor(0, 1, random_pre(rng, states[0].bias)), states);

        WheelOdomDelta odom;
        odom.delta = Pose2(rng.uniform(), rng.uniform() - 0.5, rng.uniform() - 0.5);
        odom.covariance = Eigen::Matrix3d::Identity() * 0.01;
        odom.path_length = 1.0;
        check_jacobian_fd(make_encoder_factor(0, 1, odom, false, 1.0), states);

        check_jacobian_fd(pose_factor(0, 1,
                                      Pose2(rng.uniform(), rng.uniform(), rng.uniform() - 0.5),
                                      Eigen::Matrix3d::Identity()),
                          states);
        check_jacobian_fd(make_bias_walk_factor(0, 1, kNoise, 0.2), states);
    }
}

TEST_CASE("optimize pulls a single node to its prior") {
    FactorGraph graph;
    graph.add_state(0.0, state_at(0.3, -0.4, 0.2));
    const RobotState mean = state_at(1.0, 2.0, 0.5);
    graph.add_factor(make_prior_factor(0, mean, tight_prior_information()));
    const auto result = graph.optimize();
    CHECK(result.converged);
    CHECK(graph.state(0).pose.x == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(graph.state(0).pose.y == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(graph.state(0).pose.theta == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("optimize chains an odometric factor off the prior") {
    FactorGraph graph;
    graph.add_state(0.0, RobotState{});
    graph.add_state(1.0, state_at(0.9, 0.1, 0.05));
    graph.add_factor(make_prior_factor(0, RobotState{}, tight_prior_information()));
    graph.add_factor(vb_anchor(1));
    graph.add_factor(pose_factor(0, 1, Pose2(1.0, 0.0, 0.0),
                                 1e4 * Eigen::Matrix3d::Identity()));
    const auto result = graph.optimize();
    CHECK(result.converged);
    CHECK(graph.state(1).pose.x == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(graph.state(1).pose.y) < 1e-6);
    CHECK(std::abs(graph.state(1).pose.theta) < 1e-6);
}

TEST_CASE("conflicting factors settle at the weighted least-squares blend") {
    // Hand oracle: node1 pulled to x=1 with information 300 and to x=2 with
    // information 100 (after the 0.5 weight) -> x1* = (300*1 + 100*2)/400.
    FactorGraph graph;
    graph.add_state(0.0, RobotState{});
    graph.add_state(1.0, state_at(1.2, 0.0, 0.0));
    graph.add_state(2.0, state_at(2.0, 0.0, 0.0));
    graph.add_factor(make_prior_factor(0, RobotState{}, tight_prior_information()));
    graph.add_factor(vb_anchor(1));
    graph.add_factor(vb_anchor(2));

    Eigen::Matrix3d info_a = Eigen::Matrix3d::Identity() * 300.0;
    Eigen::Matrix3d info_b = Eigen::Matrix3d::Identity() * 200.0;
    graph.add_factor(pose_factor(0, 1, Pose2(1.0, 0.0, 0.0), info_a));
    Factor conflicting = pose_factor(0, 1, Pose2(2.0, 0.0, 0.0), info_b);
    conflicting.weight = 0.5;
    graph.add_factor(conflicting);
    graph.add_factor(pose_factor(1, 2, Pose2(1.0, 0.0, 0.0),
                                 1e4 * Eigen::Matrix3d::Identity()));

    const auto result = graph.optimize();
    CHECK(result.converged);
    const double expected = (300.0 * 1.0 + 100.0 * 2.0) / 400.0;
    CHECK(graph.state(1).pose.x == doctest::Approx(expected).epsilon(1e-7));
    CHECK(graph.state(2).pose.x == doctest::Approx(expected + 1.0).epsilon(1e-7));
}

TEST_CASE("cost never increases between accepted iterations") {
    SplitMix64 rng(34);
    FactorGraph graph;
    graph.add_state(0.0, RobotState{});
    graph.add_factor(make_prior_factor(0, RobotState{}, tight_prior_information()));
    for (int k = 1; k <= 20; ++k) {
        graph.add_state(k, random_state(rng));
        graph.add_factor(vb_anchor(k));
        graph.add_factor(pose_factor(k - 1, k,
                                     Pose2(1.0 + 0.1 * rng.gaussian(), 0.1 * rng.gaussian(),
                                           0.1 * rng.gaussian()),
                                     50.0 * Eigen::Matrix3d::Identity()));
    }
    const auto result = graph.optimize();
    for (std::size_t k = 1; k < result.cost_history.size(); ++k) {
        CHECK(result.cost_history[k] <= result.cost_history[k - 1] * (1.0 + 1e-12) + 1e-12);
    }
    CHECK(result.converged);
}

TEST_CASE("information scaling leaves the argmin unchanged") {
    auto build = [](double scale) {
        FactorGraph graph;
        SplitMix64 rng(35);
        graph.add_state(0.0, RobotState{});
        graph.add_factor(
            make_prior_factor(0, RobotState{}, scale * tight_prior_information()));
        for (int k = 1; k <= 10; ++k) {
            graph.add_state(k, random_state(rng));
            Eigen::MatrixXd anchor_info = Eigen::MatrixXd::Zero(kStateDim, kStateDim);
            for (int d = 3; d < kStateDim; ++d) anchor_info(d, d) = scale;
            graph.add_factor(make_prior_factor(k, RobotState{}, anchor_info));
            graph.add_factor(pose_factor(k - 1, k,
                                         Pose2(0.8 + 0.2 * rng.gaussian(), 0.1 * rng.gaussian(),
                                               0.05 * rng.gaussian()),
                                         scale * 40.0 * Eigen::Matrix3d::Identity()));
        }
        graph.optimize();
        return graph.states();
    };
    const auto base = build(1.0);
    const auto scaled = build(7.25);
    REQUIRE(base.size() == scaled.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        CHECK(std::abs(base[k].pose.x - scaled[k].pose.x) < 1e-9);
        CHECK(std::abs(base[k].pose.y - scaled[k].pose.y) < 1e-9);
        CHECK(std::abs(wrap_angle(base[k].pose.theta - scaled[k].pose.theta)) < 1e-9);
    }
}

TEST_CASE("rejected factors leave no trace: bitwise-identical solve") {
    auto build = [](bool offer_rejected) {
        FactorGraph graph;
        SplitMix64 rng(36);
        graph.add_state(0.0, RobotState{});
        graph.add_factor(make_prior_factor(0, RobotState{}, tight_prior_information()));
        for (int k = 1; k <= 15; ++k) {
            graph.add_state(k, random_state(rng));
            graph.add_factor(vb_anchor(k));
            graph.add_factor(pose_factor(k - 1, k,
                                         Pose2(1.0 + 0.05 * rng.gaussian(),
                                               0.05 * rng.gaussian(), 0.02 * rng.gaussian()),
                                         100.0 * Eigen::Matrix3d::Identity()));
            if (offer_rejected) {
                ScanMatchResult junk;
                junk.relative_pose = Pose2(5.0, 5.0, 1.0);
                junk.information = Eigen::Matrix3d::Identity();
                CHECK_FALSE(graph.add_factor(make_lidar_factor(k - 1, k, junk, true, 1.0)));
                WheelOdomDelta slip;
                slip.covariance = Eigen::Matrix3d::Identity();
                CHECK_FALSE(graph.add_factor(make_encoder_factor(k - 1, k, slip, true, 1.0)));
            }
        }
        graph.optimize();
        return graph.states();
    };
    const auto with_offers = build(true);
    const auto without = build(false);
    REQUIRE(with_offers.size() == without.size());
    for (std::size_t k = 0; k < with_offers.size(); ++k) {
        CHECK(std::memcmp(&with_offers[k].pose, &without[k].pose, sizeof(Pose2)) == 0);
        CHECK(with_offers[k].velocity == without[k].velocity);
        CHECK(with_offers[k].bias.gyro == without[k].bias.gyro);
        CHECK(with_offers[k].bias.accel == without[k].bias.accel);
    }
}

TEST_CASE("under-constrained graphs are reported singular") {
    SUBCASE("no prior anywhere") {
        FactorGraph graph;
        graph.add_state(0.0, RobotState{});
        graph.add_state(1.0, state_at(1.0, 0.0, 0.0));
        graph.add_factor(pose_factor(0, 1, Pose2(1.0, 0.0, 0.0),
                                     Eigen::Matrix3d::Identity()));
        CHECK_THROWS_AS(graph.optimize(), SingularSystem);
    }
    SUBCASE("disconnected node") {
        FactorGraph graph;
        graph.add_state(0.0, RobotState{});
        graph.add_state(1.0, RobotState{});
        graph.add_factor(make_prior_factor(0, RobotState{}, tight_prior_information()));
        CHECK_THROWS_AS(graph.optimize(), SingularSystem);
    }
}

TEST_CASE("incremental warm starts match a cold batch solve") {
    SplitMix64 rng(37);
    struct Step {
        RobotState guess;
        Factor odo;
        Factor anchor;
    };
    std::vector<Step> steps;
    RobotState truth;
    for (int k = 1; k <= 40; ++k) {
        const Pose2 move(0.5 + 0.1 * rng.gaussian(), 0.05 * rng.gaussian(),
                         0.1 * rng.gaussian());
        truth.pose = compose(truth.pose, move);
        Step s;
        s.guess = truth;
        s.guess.pose = Pose2(truth.pose.x + 0.1 * rng.gaussian(),
                             truth.pose.y + 0.1 * rng.gaussian(),
                             truth.pose.theta + 0.05 * rng.gaussian());
        s.odo = pose_factor(k - 1, k, move, 80.0 * Eigen::Matrix3d::Identity());
        s.anchor = vb_anchor(k);
        steps.push_back(s);
    }

    FactorGraph incremental;
    incremental.add_state(0.0, RobotState{});
    incremental.add_factor(make_prior_factor(0, RobotState{}, tight_prior_information()));
    incremental.optimize();
    for (std::size_t k = 0; k < steps.size(); ++k) {
        incremental.add_state(static_cast<double>(k + 1), steps[k].guess);
        incremental.add_factor(steps[k].anchor);
        incremental.add_factor(steps[k].odo);
        incremental.optimize();
    }

    FactorGraph batch;
    batch.add_state(0.0, RobotState{});
    batch.add_factor(make_prior_factor(0, RobotState{}, tight_prior_information()));
    for (std::size_t k = 0; k < steps.size(); ++k) {
        batch.add_state(static_cast<double>(k + 1), steps[k].guess);
        batch.add_factor(steps[k].anchor);
        batch.add_factor(steps[k].odo);
    }
    batch.optimize();

    for (NodeId id = 0; id < batch.num_nodes(); ++id) {
        CHECK(std::abs(incremental.state(id).pose.x - batch.state(id).pose.x) < 1e-6);
        CHECK(std::abs(incremental.state(id).pose.y - batch.state(id).pose.y) < 1e-6);
        CHECK(std::abs(wrap_angle(incremental.state(id).pose.theta -
                                  batch.state(id).pose.theta)) < 1e-6);
    }
}
