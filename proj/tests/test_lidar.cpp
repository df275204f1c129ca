#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "slam2d/lidar.hpp"
#include "slam2d/rng.hpp"
#include "slam2d/sim.hpp"

using namespace slam2d;

namespace {

LaserScan make_scan(int beams, double range, double t_start = 0.0, double t_end = 0.1) {
    LaserScan scan;
    scan.t_start = t_start;
    scan.t_end = t_end;
    scan.angle_min = -kPi;
    scan.angle_increment = 2.0 * kPi / beams;
    scan.range_max = 12.0;
    scan.ranges.assign(beams, range);
    return scan;
}

PreintegratedImu motion_pre(double dx, double dy, double dtheta, double dt) {
    PreintegratedImu pre;
    pre.delta_p = {dx, dy};
    pre.delta_theta = dtheta;
    pre.dt_total = dt;
    return pre;
}

// Cloud of wall hits seen from `pose`, expressed in the robot frame.
PointCloud2D view_cloud(const World& world, const Pose2& pose, int beams, double sigma,
                        SplitMix64* rng) {
    PointCloud2D cloud;
    for (int k = 0; k < beams; ++k) {
        const double body_angle = -kPi + 2.0 * kPi * k / beams;
        const auto range = raycast(world, pose.translation(), pose.theta + body_angle, 12.0);
        if (!range) continue;
        double r = *range;
        if (rng) r += sigma * rng->gaussian();
        cloud.points.emplace_back(r * std::cos(body_angle), r * std::sin(body_angle));
    }
    return cloud;
}

const Pose2 kCornerView(2.0, 2.0, 0.3);

}  // namespace

TEST_CASE("deskew with zero motion equals plain conversion") {
    const LaserScan scan = make_scan(90, 3.0);
    const PreintegratedImu still = motion_pre(0.0, 0.0, 0.0, 0.1);
    const PointCloud2D cloud = deskew(scan, still);
    REQUIRE(cloud.points.size() == 90);
    for (int k = 0; k < 90; ++k) {
        const double angle = scan.angle_min + k * scan.angle_increment;
        CHECK((cloud.points[k] - 3.0 * Eigen::Vector2d(std::cos(angle), std::sin(angle))).norm() <
              1e-12);
    }
}

TEST_CASE("instantaneous scan needs no correction") {
    const LaserScan scan = make_scan(45, 2.0, 1.0, 1.0);
    const PointCloud2D cloud = deskew(scan, PreintegratedImu{});
    REQUIRE(cloud.points.size() == 45);
    const double angle = scan.angle_min + 7 * scan.angle_increment;
    CHECK((cloud.points[7] - 2.0 * Eigen::Vector2d(std::cos(angle), std::sin(angle))).norm() <
          1e-12);
}

TEST_CASE("pure rotation corrects each beam by its residual sweep fraction") {
    const int n = 60;
    const double dtheta = 0.1;
    const LaserScan scan = make_scan(n, 4.0);
    const PointCloud2D cloud = deskew(scan, motion_pre(0.0, 0.0, dtheta, 0.1));
    REQUIRE(cloud.points.size() == static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double f = static_cast<double>(k) / (n - 1);
        const double angle = scan.angle_min + k * scan.angle_increment;
        const Eigen::Vector2d raw(4.0 * std::cos(angle), 4.0 * std::sin(angle));
        // Per-beam oracle: the robot still rotates (1 - f) * dtheta after
        // beam k fires, so the point swings back by that amount.
        const Eigen::Vector2d expected = rotation2(-(1.0 - f) * dtheta) * raw;
        CHECK((cloud.points[k] - expected).norm() < 1e-12);
    }
}

TEST_CASE("deskew drops invalid beams and checks the interval") {
    LaserScan scan = make_scan(40, 5.0);
    scan.ranges[3] = -1.0;
    scan.ranges[10] = 0.0;
    scan.ranges[11] = 13.0;  // beyond range_max
    const PointCloud2D cloud = deskew(scan, motion_pre(0.0, 0.0, 0.0, 0.1));
    CHECK(cloud.points.size() == 37);

    CHECK_THROWS_AS(deskew(scan, motion_pre(0.0, 0.0, 0.0, 0.2)), std::invalid_argument);
}

TEST_CASE("self match is the identity") {
    const World world = build_corridor_world(10.0, 10.0, 4.0);
    const PointCloud2D cloud = view_cloud(world, kCornerView, 360, 0.0, nullptr);
    REQUIRE(cloud.points.size() >= 30);
    const auto result = match_scans(cloud, cloud, Pose2());
    REQUIRE(result.has_value());
    CHECK(result->converged);
    CHECK(std::abs(result->relative_pose.x) < 1e-9);
    CHECK(std::abs(result->relative_pose.y) < 1e-9);
    CHECK(std::abs(result->relative_pose.theta) < 1e-9);
    CHECK(result->mean_residual < 1e-9);
}

TEST_CASE("match recovers a known transform on noiseless corridor clouds") {
    const World world = build_corridor_world(10.0, 10.0, 4.0);
    const Pose2 delta(0.1, 0.0, 5.0 * kPi / 180.0);
    const PointCloud2D reference = view_cloud(world, kCornerView, 360, 0.0, nullptr);
    const PointCloud2D current = view_cloud(world, compose(kCornerView, delta), 360, 0.0, nullptr);
    const auto result = match_scans(reference, current, Pose2());
    REQUIRE(result.has_value());
    CHECK(result->converged);
    CHECK(std::abs(result->relative_pose.x - delta.x) < 1e-3);
    CHECK(std::abs(result->relative_pose.y - delta.y) < 1e-3);
    CHECK(std::abs(wrap_angle(result->relative_pose.theta - delta.theta)) <
          0.05 * kPi / 180.0);
}

TEST_CASE("disjoint clouds signal insufficient overlap") {
    PointCloud2D a, b;
    for (int k = 0; k < 40; ++k) {
        a.points.emplace_back(0.05 * k, 0.0);
        b.points.emplace_back(10.0 + 0.05 * k, 0.0);
    }
    CHECK_FALSE(match_scans(a, b, Pose2()).has_value());
}

TEST_CASE("too-small clouds are a precondition violation") {
    PointCloud2D small;
    for (int k = 0; k < 10; ++k) {
        small.points.emplace_back(0.1 * k, 0.0);
    }
    CHECK_THROWS_AS(match_scans(small, small, Pose2()), std::invalid_argument);
}

TEST_CASE("ICP objective is nonincreasing and information is PSD") {
    const World world = build_corridor_world(10.0, 10.0, 4.0);
    SplitMix64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Pose2 delta(0.3 * (rng.uniform() - 0.5), 0.3 * (rng.uniform() - 0.5),
                          0.3 * (rng.uniform() - 0.5));
        const PointCloud2D reference = view_cloud(world, kCornerView, 360, 0.0, nullptr);
        const PointCloud2D current =
            view_cloud(world, compose(kCornerView, delta), 360, 0.0, nullptr);
        const auto result = match_scans(reference, current, Pose2());
        REQUIRE(result.has_value());
        for (std::size_t k = 1; k < result->cost_history.size(); ++k) {
            CHECK(result->cost_history[k] <= result->cost_history[k - 1] + 1e-12);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(result->information);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-6);
    }
}

TEST_CASE("degradation score basics") {
    const WeightParams weights{0.0, 25.0, 0.05};
    const LaserScan a = make_scan(360, 3.0);

    SUBCASE("identical scans while moving are degraded") {
        const auto report = degradation_score(a, a, 0.1, 0.05, 0.02, weights);
        CHECK(report.score == doctest::Approx(0.0));
        CHECK(report.degraded);
        CHECK(report.weight < 1.0);
    }
    SUBCASE("large differences are healthy") {
        LaserScan b = make_scan(360, 3.5);
        const auto report = degradation_score(a, b, 0.1, 0.05, 0.02, weights);
        CHECK(report.score == doctest::Approx(0.5));
        CHECK_FALSE(report.degraded);
        CHECK(report.weight == doctest::Approx(1.0));
    }
    SUBCASE("stationary platforms are exempt") {
        const auto report = degradation_score(a, a, 0.0, 0.05, 0.02, weights);
        CHECK_FALSE(report.degraded);
        CHECK(report.weight == doctest::Approx(1.0));
    }
}

TEST_CASE("degradation score is symmetric") {
    SplitMix64 rng(22);
    LaserScan a = make_scan(180, 3.0);
    LaserScan b = make_scan(180, 3.0);
    for (int k = 0; k < 180; ++k) {
        a.ranges[k] = 2.0 + rng.uniform();
        b.ranges[k] = 2.0 + rng.uniform();
    }
    const WeightParams weights{0.0, 25.0, 0.05};
    const auto ab = degradation_score(a, b, 0.1, 0.05, 0.02, weights);
    const auto ba = degradation_score(b, a, 0.1, 0.05, 0.02, weights);
    CHECK(ab.score == doctest::Approx(ba.score).epsilon(1e-15));
    CHECK(ab.degraded == ba.degraded);
}

TEST_CASE("degradation rejects bad inputs") {
    const WeightParams weights{0.0, 25.0, 0.05};
    const LaserScan a = make_scan(100, 3.0);
    const LaserScan b = make_scan(101, 3.0);
    CHECK_THROWS_AS(degradation_score(a, b, 0.1, 0.05, 0.02, weights), std::invalid_argument);

    LaserScan c = make_scan(100, -1.0);  // every beam invalid
    CHECK_THROWS_AS(degradation_score(a, c, 0.1, 0.05, 0.02, weights), std::invalid_argument);
}
