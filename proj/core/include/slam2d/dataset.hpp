#ifndef SLAM2D_DATASET_HPP
#define SLAM2D_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "slam2d/geometry.hpp"

namespace slam2d {

struct ImuRecord {
    double t = 0.0;
    double wz = 0.0;
    double ax = 0.0;
    double ay = 0.0;
};

struct ScanRecord {
    double t = 0.0;  // sweep start
    double angle_min = -kPi;
    double angle_increment = 0.0;
    std::vector<double> ranges;  // nonpositive = no return
};

struct EncRecord {
    double t = 0.0;
    std::int64_t left = 0;
    std::int64_t right = 0;
};

struct GtRecord {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

/// Time-ordered sensor log. The text form is line oriented:
///   IMU  t wz ax ay
///   SCAN t n angle_min angle_inc r_1 .. r_n
///   ENC  t left right
///   GT   t x y theta
/// with all reals printed as fixed 9-decimal values, merged nondecreasing in
/// time (ties broken GT < IMU < ENC < SCAN) and strictly increasing per
/// stream.
struct Dataset {
    std::vector<ImuRecord> imu;
    std::vector<ScanRecord> scans;
    std::vector<EncRecord> encoder;
    std::vector<GtRecord> ground_truth;

    bool empty() const {
        return imu.empty() && scans.empty() && encoder.empty() && ground_truth.empty();
    }
};

Dataset read_dataset(const std::string& text);
std::string write_dataset(const Dataset& dataset);

Dataset load_dataset_file(const std::string& path);
void save_dataset_file(const std::string& path, const Dataset& dataset);

}  // namespace slam2d

#endif
