#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "slam2d/dataset.hpp"
#include "slam2d/sim.hpp"
#include "slam2d/textio.hpp"

using namespace slam2d;

TEST_CASE("empty text reads as an empty dataset") {
    const Dataset d = read_dataset("");
    CHECK(d.empty());
    CHECK(write_dataset(d).empty());
}

TEST_CASE("a single IMU line parses exactly") {
    const Dataset d =
        read_dataset("IMU 0.010000000 0.100000000 0.500000000 0.000000000\n");
    REQUIRE(d.imu.size() == 1);
    CHECK(d.imu[0].t == doctest::Approx(0.01));
    CHECK(d.imu[0].wz == doctest::Approx(0.1));
    CHECK(d.imu[0].ax == doctest::Approx(0.5));
    CHECK(d.imu[0].ay == doctest::Approx(0.0));
}

TEST_CASE("simulated datasets round-trip losslessly") {
    const World world = build_corridor_world(10.0, 10.0, 4.0);
    TrajectorySpec traj;
    traj.waypoints = {{2.0, 2.0}, {6.0, 2.0}};
    const Dataset d = simulate(world, traj, SensorRig{}, 17);

    const std::string text = write_dataset(d);
    const Dataset back = read_dataset(text);
    CHECK(write_dataset(back) == text);

    CHECK(back.imu.size() == d.imu.size());
    CHECK(back.scans.size() == d.scans.size());
    CHECK(back.encoder.size() == d.encoder.size());
    CHECK(back.ground_truth.size() == d.ground_truth.size());
}

TEST_CASE("malformed lines report their line number") {
    const std::string text =
        "IMU 0.000000000 0.0 0.0 0.0\n"
        "IMU 0.010000000 0.0 banana 0.0\n";
    try {
        read_dataset(text);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("unknown record tags are rejected") {
    CHECK_THROWS_AS(read_dataset("BOGUS 1.0\n"), DataError);
}

TEST_CASE("scan beam count mismatch is rejected") {
    CHECK_THROWS_AS(read_dataset("SCAN 0.0 3 -3.14 0.01 1.0 2.0\n"), DataError);
}

TEST_CASE("per-stream timestamp regressions are rejected") {
    const std::string text =
        "IMU 0.020000000 0.0 0.0 0.0\n"
        "IMU 0.010000000 0.0 0.0 0.0\n";
    CHECK_THROWS_AS(read_dataset(text), DataError);
}

TEST_CASE("merged-stream timestamp regressions are rejected") {
    const std::string text =
        "IMU 0.020000000 0.0 0.0 0.0\n"
        "ENC 0.010000000 0 0\n";
    CHECK_THROWS_AS(read_dataset(text), DataError);
}

TEST_CASE("negative timestamps are rejected") {
    CHECK_THROWS_AS(read_dataset("IMU -0.010000000 0.0 0.0 0.0\n"), DataError);
}
