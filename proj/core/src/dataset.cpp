#include "slam2d/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slam2d/textio.hpp"

namespace slam2d {

namespace {

// Merge order of streams at equal timestamps.
int stream_rank(const std::string& tag) {
    if (tag == "GT") return 0;
    if (tag == "IMU") return 1;
    if (tag == "ENC") return 2;
    return 3;  // SCAN
}

void check_stream_order(double prev, double t, const char* stream, int line) {
    if (!(t > prev)) {
        throw DataError("line " + std::to_string(line) + ": " + stream +
                        " timestamp not strictly increasing");
    }
}

}  // namespace

Dataset read_dataset(const std::string& text) {
    Dataset out;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    double last_t = -std::numeric_limits<double>::infinity();
    double last_imu = -1.0, last_scan = -1.0, last_enc = -1.0, last_gt = -1.0;

    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) {
            continue;
        }
        const auto tok = split_whitespace(line);
        if (tok.empty()) {
            continue;
        }
        const std::string& tag = tok[0];
        auto need = [&](std::size_t n) {
            if (tok.size() != n) {
                throw DataError("line " + std::to_string(line_number) + ": " + tag +
                                " record expects " + std::to_string(n - 1) + " fields");
            }
        };

        if (tag == "IMU") {
            need(5);
            ImuRecord r;
            r.t = parse_double(tok[1], line_number);
            r.wz = parse_double(tok[2], line_number);
            r.ax = parse_double(tok[3], line_number);
            r.ay = parse_double(tok[4], line_number);
            check_stream_order(last_imu, r.t, "IMU", line_number);
            last_imu = r.t;
            out.imu.push_back(r);
        } else if (tag == "SCAN") {
            if (tok.size() < 5) {
                throw DataError("line " + std::to_string(line_number) + ": truncated SCAN record");
            }
            ScanRecord r;
            r.t = parse_double(tok[1], line_number);
            const long long n = parse_int(tok[2], line_number);
            r.angle_min = parse_double(tok[3], line_number);
            r.angle_increment = parse_double(tok[4], line_number);
            if (n < 0 || tok.size() != static_cast<std::size_t>(5 + n)) {
                throw DataError("line " + std::to_string(line_number) +
                                ": SCAN beam count mismatch");
            }
            r.ranges.reserve(static_cast<std::size_t>(n));
            for (long long k = 0; k < n; ++k) {
                r.ranges.push_back(parse_double(tok[5 + static_cast<std::size_t>(k)], line_number));
            }
            check_stream_order(last_scan, r.t, "SCAN", line_number);
            last_scan = r.t;
            out.scans.push_back(std::move(r));
        } else if (tag == "ENC") {
            need(4);
            EncRecord r;
            r.t = parse_double(tok[1], line_number);
            r.left = parse_int(tok[2], line_number);
            r.right = parse_int(tok[3], line_number);
            check_stream_order(last_enc, r.t, "ENC", line_number);
            last_enc = r.t;
            out.encoder.push_back(r);
        } else if (tag == "GT") {
            need(5);
            GtRecord r;
            r.t = parse_double(tok[1], line_number);
            r.x = parse_double(tok[2], line_number);
            r.y = parse_double(tok[3], line_number);
            r.theta = parse_double(tok[4], line_number);
            check_stream_order(last_gt, r.t, "GT", line_number);
            last_gt = r.t;
            out.ground_truth.push_back(r);
        } else {
            throw DataError("line " + std::to_string(line_number) + ": unknown record '" + tag +
                            "'");
        }

        const double t = parse_double(tok[1], line_number);
        if (t < last_t) {
            throw DataError("line " + std::to_string(line_number) +
                            ": timestamp regression in the merged stream");
        }
        if (t < 0.0 || !std::isfinite(t)) {
            throw DataError("line " + std::to_string(line_number) + ": invalid timestamp");
        }
        last_t = t;
    }
    return out;
}

std::string write_dataset(const Dataset& dataset) {
    struct Line {
        double t;
        int rank;
        std::size_t seq;
        std::string text;
    };
    std::vector<Line> lines;
    lines.reserve(dataset.imu.size() + dataset.scans.size() + dataset.encoder.size() +
                  dataset.ground_truth.size());

    for (std::size_t i = 0; i < dataset.ground_truth.size(); ++i) {
        const auto& r = dataset.ground_truth[i];
        lines.push_back({r.t, stream_rank("GT"), i,
                         "GT " + format_fixed9(r.t) + " " + format_fixed9(r.x) + " " +
                             format_fixed9(r.y) + " " + format_fixed9(r.theta)});
    }
    for (std::size_t i = 0; i < dataset.imu.size(); ++i) {
        const auto& r = dataset.imu[i];
        lines.push_back({r.t, stream_rank("IMU"), i,
                         "IMU " + format_fixed9(r.t) + " " + format_fixed9(r.wz) + " " +
                             format_fixed9(r.ax) + " " + format_fixed9(r.ay)});
    }
    for (std::size_t i = 0; i < dataset.encoder.size(); ++i) {
        const auto& r = dataset.encoder[i];
        lines.push_back({r.t, stream_rank("ENC"), i,
                         "ENC " + format_fixed9(r.t) + " " + std::to_string(r.left) + " " +
                             std::to_string(r.right)});
    }
    for (std::size_t i = 0; i < dataset.scans.size(); ++i) {
        const auto& r = dataset.scans[i];
        std::string text = "SCAN " + format_fixed9(r.t) + " " + std::to_string(r.ranges.size()) +
                           " " + format_fixed9(r.angle_min) + " " +
                           format_fixed9(r.angle_increment);
        for (double range : r.ranges) {
            text += " " + format_fixed9(range);
        }
        lines.push_back({r.t, stream_rank("SCAN"), i, std::move(text)});
    }

    std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.rank != b.rank) return a.rank < b.rank;
        return a.seq < b.seq;
    });

    std::string out;
    for (const Line& l : lines) {
        out += l.text;
        out += '\n';
    }
    return out;
}

Dataset load_dataset_file(const std::string& path) {
    return read_dataset(read_text_file(path));
}

void save_dataset_file(const std::string& path, const Dataset& dataset) {
    write_text_file(path, write_dataset(dataset));
}

}  // namespace slam2d
