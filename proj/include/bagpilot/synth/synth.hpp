// SPDX-License-Identifier: Apache-2.0
// Deterministic differential-drive simulator that writes fixture bags plus a
// ground-truth sidecar.
#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bagpilot/bag/format.hpp"
#include "bagpilot/msg/builtin.hpp"

namespace bagpilot::synth {

struct Command {
  double start_s = 0.0;
  double end_s = 0.0;
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
};

struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
};

struct World {
  double half_x = 5.0;
  double half_y = 5.0;
  std::vector<Obstacle> obstacles;
};

struct ScanModel {
  int beam_count = 360;
  double fov = 2.0 * std::numbers::pi;
  double range_min = 0.1;
  double range_max = 10.0;

  double angle_min() const noexcept { return -fov / 2.0; }
  double angle_increment() const noexcept;
};

struct Rates {
  double odom_hz = 20.0;
  double cmd_hz = 10.0;
  double scan_hz = 5.0;
  double tf_hz = 20.0;
  double camera_hz = 0.0;  // 0 disables the camera topic
};

struct LogEvent {
  double time_s = 0.0;
  msg::LogLevel level = msg::LogLevel::Info;
  std::string node;
  std::string text;
};

struct Noise {
  double pose_sigma = 0.0;  // m, applied to reported odometry positions
  double scan_sigma = 0.0;  // m, applied to reported ranges

  bool enabled() const noexcept { return pose_sigma > 0.0 || scan_sigma > 0.0; }
};

struct Scenario {
  std::string name = "custom";
  std::uint64_t seed = 0;
  double duration = 10.0;
  /// Unix time of simulation t=0.
  double start_time = 1'700'000'000.0;
  msg::Pose2D initial_pose;
  Rates rates;
  std::vector<Command> script;
  World world;
  ScanModel scan;
  std::vector<LogEvent> logs;
  Noise noise;

  /// Throws Error(InvalidScenario) describing the first violated rule.
  void validate() const;
  /// Command active at `t` seconds; zero velocity outside every interval.
  Command command_at(double t) const noexcept;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

/// Built-in scenarios: straight_line, circle, pillar_room, patrol_5m.
Scenario named_scenario(std::string_view name);
std::vector<std::string> scenario_names();

struct TruePose {
  TimeNs time_ns = 0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

struct TraceSummary {
  double duration = 0.0;
  /// Sum of straight segments between consecutive odometry samples.
  double total_distance = 0.0;
  /// Integrated path length of the continuous motion.
  double arc_length = 0.0;
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  double max_speed = 0.0;  // finite differences between odometry samples
  TruePose final_pose;     // state at t = duration
};

struct ScanSample {
  TimeNs time_ns = 0;
  TruePose pose;
  std::vector<double> ranges;  // exact geometry, +inf for misses
};

struct CommandSample {
  TimeNs time_ns = 0;
  double v = 0.0;
  double omega = 0.0;
};

struct SimTrace {
  Scenario scenario;
  TimeNs start_ns = 0;
  std::vector<TruePose> poses;  // at odometry rate
  std::vector<CommandSample> commands;
  std::vector<ScanSample> scans;
  std::vector<bag::ConnectionRecord> connections;
  std::vector<bag::RawMessage> messages;  // time-sorted
  TraceSummary summary;

  nlohmann::json truth() const;
};

/// Ray-casts from (x, y) along `angle` against the room walls and obstacles.
/// Returns the nearest hit distance, or +inf when nothing lies within range_max.
double cast_ray(const World& world, double x, double y, double angle, double range_max) noexcept;

/// Throws Error(InvalidScenario).
SimTrace simulate(const Scenario& scenario);

/// Writes the bag and `<bag>.truth.json` next to it.
bag::WrittenBagStats write_fixture(const SimTrace& trace, const std::filesystem::path& bag_path);

std::filesystem::path truth_path(const std::filesystem::path& bag_path);

/// A 2x2 RGB PNG used as camera payload.
std::span<const std::uint8_t> tiny_png() noexcept;

}  // namespace bagpilot::synth
