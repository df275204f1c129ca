// Command-line front end: simulate corridor datasets, run the SLAM pipeline,
// evaluate trajectories, and measure map metrics.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slam2d/dataset.hpp"
#include "slam2d/evaluate.hpp"
#include "slam2d/map_metrics.hpp"
#include "slam2d/pipeline.hpp"
#include "slam2d/sim.hpp"
#include "slam2d/textio.hpp"

namespace {

using namespace slam2d;

TrajectorySpec load_trajectory_spec(const std::string& path) {
    TrajectorySpec spec;
    spec.waypoints.clear();
    const std::string text = read_text_file(path);
    int line_number = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_number;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto tok = split_whitespace(line);
        if (tok.empty()) continue;
        if (tok[0] == "waypoint" && tok.size() == 3) {
            spec.waypoints.emplace_back(parse_double(tok[1], line_number),
                                        parse_double(tok[2], line_number));
        } else if (tok[0] == "linear_speed" && tok.size() == 2) {
            spec.linear_speed = parse_double(tok[1], line_number);
        } else if (tok[0] == "angular_speed" && tok.size() == 2) {
            spec.angular_speed = parse_double(tok[1], line_number);
        } else if (tok[0] == "hold_time" && tok.size() == 2) {
            spec.hold_time = parse_double(tok[1], line_number);
        } else {
            throw DataError("line " + std::to_string(line_number) +
                            ": bad trajectory spec entry");
        }
    }
    return spec;
}

MeasureSpec load_measure_spec(const std::string& path) {
    MeasureSpec spec;
    bool seen[4] = {false, false, false, false};
    const std::string text = read_text_file(path);
    int line_number = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_number;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto tok = split_whitespace(line);
        if (tok.empty()) continue;
        if (tok.size() != 9) {
            throw DataError("line " + std::to_string(line_number) +
                            ": metric spec expects 'name x0 y0 x1 y1 x0 y0 x1 y1'");
        }
        std::array<Rect, 2> pair;
        for (int k = 0; k < 2; ++k) {
            pair[k] = {parse_double(tok[1 + 4 * k], line_number),
                       parse_double(tok[2 + 4 * k], line_number),
                       parse_double(tok[3 + 4 * k], line_number),
                       parse_double(tok[4 + 4 * k], line_number)};
        }
        if (tok[0] == "a") { spec.a = pair; seen[0] = true; }
        else if (tok[0] == "b") { spec.b = pair; seen[1] = true; }
        else if (tok[0] == "c") { spec.c = pair; seen[2] = true; }
        else if (tok[0] == "alpha") { spec.alpha = pair; seen[3] = true; }
        else {
            throw DataError("line " + std::to_string(line_number) + ": unknown metric '" +
                            tok[0] + "'");
        }
    }
    if (!(seen[0] && seen[1] && seen[2] && seen[3])) {
        throw DataError("measure spec must define a, b, c and alpha");
    }
    return spec;
}

OccupancyGrid load_grid(const std::string& prefix) {
    const auto bytes = read_binary_file(prefix + ".pgm");
    // P5\n<width> <height>\n255\n
    std::size_t pos = 0;
    auto next_token = [&]() {
        std::string tok;
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) {
            tok.push_back(static_cast<char>(bytes[pos++]));
        }
        return tok;
    };
    if (next_token() != "P5") {
        throw DataError("map is not a binary PGM");
    }
    const int width = static_cast<int>(parse_int(next_token(), 0));
    const int height = static_cast<int>(parse_int(next_token(), 0));
    if (next_token() != "255") {
        throw DataError("unsupported PGM maxval");
    }
    ++pos;  // single whitespace after maxval
    if (bytes.size() - pos < static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DataError("truncated PGM payload");
    }

    double resolution = 0.0;
    Eigen::Vector2d origin{0.0, 0.0};
    {
        const std::string meta = read_text_file(prefix + ".meta");
        int line_number = 0;
        std::size_t mpos = 0;
        while (mpos < meta.size()) {
            std::size_t end = meta.find('\n', mpos);
            if (end == std::string::npos) end = meta.size();
            const std::string line = meta.substr(mpos, end - mpos);
            mpos = end + 1;
            ++line_number;
            const auto tok = split_whitespace(line);
            if (tok.empty()) continue;
            if (tok[0] == "resolution" && tok.size() == 2) {
                resolution = parse_double(tok[1], line_number);
            } else if (tok[0] == "origin" && tok.size() == 3) {
                origin = {parse_double(tok[1], line_number), parse_double(tok[2], line_number)};
            } else {
                throw DataError("bad map metadata line " + std::to_string(line_number));
            }
        }
    }
    if (!(resolution > 0.0)) {
        throw DataError("map metadata lacks a resolution");
    }

    OccupancyGrid grid(resolution, origin, width, height);
    for (int row = 0; row < height; ++row) {
        const int iy = height - 1 - row;
        for (int ix = 0; ix < width; ++ix) {
            const std::uint8_t v =
                bytes[pos + static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(ix)];
            // Re-saturate the tri-level image into log-odds.
            if (v == 0) {
                grid.set_log_odds(ix, iy, 5.0);
            } else if (v == 254) {
                grid.set_log_odds(ix, iy, -5.0);
            }
        }
    }
    return grid;
}

int run_main(const std::string& dataset_path, const std::string& config_path,
             const std::string& mode_flag, const std::string& traj_out,
             const std::string& map_out) {
    RunConfig config;
    if (!config_path.empty()) {
        config = parse_run_config(read_text_file(config_path));
    }
    if (!mode_flag.empty()) {
        config.mode = parse_run_mode(mode_flag);
    }
    const Dataset dataset = load_dataset_file(dataset_path);
    const RunResult result = run_slam(dataset, config);
    if (!traj_out.empty()) {
        write_text_file(traj_out, write_trajectory(result.trajectory));
    }
    if (!map_out.empty()) {
        write_binary_file(map_out + ".pgm", result.grid.export_pgm());
        write_text_file(map_out + ".meta", result.grid.export_metadata());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D lidar-inertial-encoder SLAM engine"};
    app.require_subcommand(1);

    auto* sim_cmd = app.add_subcommand("simulate", "Generate a corridor dataset");
    std::vector<double> world_dims;
    std::string traj_path, out_path;
    std::uint64_t seed = 0;
    sim_cmd->add_option("--world", world_dims, "Corridor dimensions a,b,c")
        ->delimiter(',')
        ->expected(3)
        ->required();
    sim_cmd->add_option("--traj", traj_path, "Trajectory spec file")->required();
    sim_cmd->add_option("--seed", seed, "RNG seed")->required();
    sim_cmd->add_option("--out", out_path, "Output dataset path")->required();

    auto* run_cmd = app.add_subcommand("run", "Run SLAM over a dataset");
    std::string dataset_path, config_path, mode_flag, traj_out, map_out;
    run_cmd->add_option("--dataset", dataset_path, "Dataset path")->required();
    run_cmd->add_option("--config", config_path, "Run config file");
    run_cmd->add_option("--mode", mode_flag, "fused|lidar_only|encoder_only");
    run_cmd->add_option("--traj-out", traj_out, "Trajectory output path");
    run_cmd->add_option("--map-out", map_out, "Map output prefix (.pgm/.meta)");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trajectory against ground truth");
    std::string est_path, gt_path, report_path, csv_path;
    eval_cmd->add_option("--est", est_path, "Estimated trajectory file")->required();
    eval_cmd->add_option("--gt", gt_path, "Ground-truth trajectory or dataset file")->required();
    eval_cmd->add_option("--report", report_path, "Report output path")->required();
    eval_cmd->add_option("--csv", csv_path, "Optional per-pose error CSV path");

    auto* metrics_cmd = app.add_subcommand("metrics", "Measure key distances on a map");
    std::string map_prefix, spec_path, metrics_report;
    metrics_cmd->add_option("--map", map_prefix, "Map prefix (.pgm/.meta)")->required();
    metrics_cmd->add_option("--spec", spec_path, "Measurement region spec file")->required();
    metrics_cmd->add_option("--report", metrics_report, "Report output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sim_cmd->parsed()) {
            const World world = build_corridor_world(world_dims[0], world_dims[1], world_dims[2]);
            const TrajectorySpec traj = load_trajectory_spec(traj_path);
            const SensorRig rig;
            save_dataset_file(out_path, simulate(world, traj, rig, seed));
            return 0;
        }
        if (run_cmd->parsed()) {
            return run_main(dataset_path, config_path, mode_flag, traj_out, map_out);
        }
        if (eval_cmd->parsed()) {
            const Trajectory est = read_trajectory(read_text_file(est_path));
            Trajectory truth;
            const std::string gt_text = read_text_file(gt_path);
            const auto first = split_whitespace(gt_text.substr(0, gt_text.find('\n')));
            if (!first.empty() &&
                (first[0] == "GT" || first[0] == "IMU" || first[0] == "ENC" ||
                 first[0] == "SCAN")) {
                truth = gt_trajectory(read_dataset(gt_text));
            } else {
                truth = read_trajectory(gt_text);
            }
            const EvalReport report = evaluate(est, truth);
            write_text_file(report_path, write_eval_report(report));
            if (!csv_path.empty()) {
                write_text_file(csv_path, write_error_csv(report));
            }
            return 0;
        }
        if (metrics_cmd->parsed()) {
            const OccupancyGrid grid = load_grid(map_prefix);
            const MeasureSpec spec = load_measure_spec(spec_path);
            const MapMetrics metrics = measure_map(grid, spec).require_all();
            std::string report = "a " + format_fixed9(metrics.a) + "\n";
            report += "b " + format_fixed9(metrics.b) + "\n";
            report += "c " + format_fixed9(metrics.c) + "\n";
            report += "alpha " + format_fixed9(metrics.alpha_deg) + "\n";
            write_text_file(metrics_report, report);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
