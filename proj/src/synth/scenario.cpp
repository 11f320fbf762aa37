// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bagpilot/error.hpp"
#include "bagpilot/synth/synth.hpp"

namespace bagpilot::synth {

namespace {

[[noreturn]] void invalid(std::string what) { throw Error(Errc::InvalidScenario, std::move(what)); }

bool inside_room(const World& w, double x, double y, double margin = 0.0) {
  return std::abs(x) + margin <= w.half_x && std::abs(y) + margin <= w.half_y;
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

double ScanModel::angle_increment() const noexcept {
  constexpr double kFull = 2.0 * std::numbers::pi;
  if (beam_count <= 1) return 0.0;
  return fov >= kFull - 1e-12 ? fov / beam_count : fov / (beam_count - 1);
}

Command Scenario::command_at(double t) const noexcept {
  for (const auto& c : script) {
    if (t >= c.start_s && t < c.end_s) return c;
  }
  return {t, t, 0.0, 0.0};
}

void Scenario::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) invalid(fmt::format("duration must be positive, got {}", duration));
  if (!(start_time >= 0.0) || start_time > 4.0e9) invalid("start_time must be a unix time between 0 and 4e9");
  if (!(rates.odom_hz > 0.0)) invalid("odom_hz must be positive");
  for (const auto& [name, hz] : {std::pair{"cmd_hz", rates.cmd_hz}, std::pair{"scan_hz", rates.scan_hz},
                                 std::pair{"tf_hz", rates.tf_hz}, std::pair{"camera_hz", rates.camera_hz}}) {
    if (!(hz >= 0.0) || hz > 1000.0) invalid(fmt::format("{} must be in [0, 1000], got {}", name, hz));
  }
  auto sorted = script;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& c = sorted[i];
    if (!(c.start_s < c.end_s) || c.start_s < 0.0 || c.end_s > duration + 1e-9) {
      invalid(fmt::format("command [{}, {}) must be a non-empty interval within [0, {}]", c.start_s, c.end_s,
                          duration));
    }
    if (!std::isfinite(c.v) || !std::isfinite(c.omega)) invalid("command velocities must be finite");
    if (i > 0 && c.start_s < sorted[i - 1].end_s) {
      invalid(fmt::format("commands starting at {} and {} overlap", sorted[i - 1].start_s, c.start_s));
    }
  }
  if (!(world.half_x > 0.0) || !(world.half_y > 0.0)) invalid("room half extents must be positive");
  for (const auto& o : world.obstacles) {
    if (!(o.radius > 0.0) || !inside_room(world, o.cx, o.cy, o.radius)) {
      invalid(fmt::format("obstacle at ({}, {}) radius {} must lie inside the room", o.cx, o.cy, o.radius));
    }
    if (std::hypot(initial_pose.x - o.cx, initial_pose.y - o.cy) <= o.radius) {
      invalid("initial pose lies inside an obstacle");
    }
  }
  if (!inside_room(world, initial_pose.x, initial_pose.y)) invalid("initial pose lies outside the room");
  if (scan.beam_count < 1 || scan.beam_count > 100'000) invalid("beam_count must be in [1, 100000]");
  if (!(scan.fov > 0.0) || scan.fov > 2.0 * std::numbers::pi + 1e-12) invalid("fov must be in (0, 2*pi]");
  if (!(scan.range_min >= 0.0) || !(scan.range_min < scan.range_max)) invalid("need 0 <= range_min < range_max");
  for (const auto& e : logs) {
    if (e.time_s < 0.0 || e.time_s > duration) invalid(fmt::format("log event at {} s is outside the run", e.time_s));
  }
  if (noise.pose_sigma < 0.0 || noise.scan_sigma < 0.0) invalid("noise sigmas must be non-negative");
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    read_opt(j, "name", s.name);
    read_opt(j, "seed", s.seed);
    read_opt(j, "duration", s.duration);
    read_opt(j, "start_time", s.start_time);
    if (j.contains("initial_pose")) {
      const auto& p = j.at("initial_pose");
      read_opt(p, "x", s.initial_pose.x);
      read_opt(p, "y", s.initial_pose.y);
      read_opt(p, "theta", s.initial_pose.yaw);
    }
    if (j.contains("rates")) {
      const auto& r = j.at("rates");
      read_opt(r, "odom_hz", s.rates.odom_hz);
      read_opt(r, "cmd_hz", s.rates.cmd_hz);
      read_opt(r, "scan_hz", s.rates.scan_hz);
      read_opt(r, "tf_hz", s.rates.tf_hz);
      read_opt(r, "camera_hz", s.rates.camera_hz);
    }
    for (const auto& c : j.value("script", nlohmann::json::array())) {
      s.script.push_back({c.at("start").get<double>(), c.at("end").get<double>(), c.value("v", 0.0),
                          c.value("omega", 0.0)});
    }
    if (j.contains("world")) {
      const auto& w = j.at("world");
      if (w.contains("half_extents")) {
        s.world.half_x = w.at("half_extents").at(0).get<double>();
        s.world.half_y = w.at("half_extents").at(1).get<double>();
      }
      for (const auto& o : w.value("obstacles", nlohmann::json::array())) {
        s.world.obstacles.push_back({o.at("cx").get<double>(), o.at("cy").get<double>(), o.at("radius").get<double>()});
      }
    }
    if (j.contains("scan")) {
      const auto& sc = j.at("scan");
      read_opt(sc, "beam_count", s.scan.beam_count);
      read_opt(sc, "fov", s.scan.fov);
      read_opt(sc, "range_min", s.scan.range_min);
      read_opt(sc, "range_max", s.scan.range_max);
    }
    for (const auto& e : j.value("logs", nlohmann::json::array())) {
      const auto level_text = e.at("level").is_number() ? std::to_string(e.at("level").get<int>())
                                                        : e.at("level").get<std::string>();
      const auto level = msg::parse_log_level(level_text);
      if (!level) invalid(fmt::format("unknown log level '{}'", level_text));
      s.logs.push_back({e.at("time").get<double>(), *level, e.value("node", "/bag_synth"), e.value("text", "")});
    }
    if (j.contains("noise")) {
      read_opt(j.at("noise"), "pose_sigma", s.noise.pose_sigma);
      read_opt(j.at("noise"), "scan_sigma", s.noise.scan_sigma);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    invalid(fmt::format("malformed scenario document: {}", e.what()));
  }
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["duration"] = s.duration;
  j["start_time"] = s.start_time;
  j["initial_pose"] = {{"x", s.initial_pose.x}, {"y", s.initial_pose.y}, {"theta", s.initial_pose.yaw}};
  j["rates"] = {{"odom_hz", s.rates.odom_hz},
                {"cmd_hz", s.rates.cmd_hz},
                {"scan_hz", s.rates.scan_hz},
                {"tf_hz", s.rates.tf_hz},
                {"camera_hz", s.rates.camera_hz}};
  auto& script = j["script"] = nlohmann::json::array();
  for (const auto& c : s.script) script.push_back({{"start", c.start_s}, {"end", c.end_s}, {"v", c.v}, {"omega", c.omega}});
  auto& obstacles = j["world"]["obstacles"] = nlohmann::json::array();
  j["world"]["half_extents"] = {s.world.half_x, s.world.half_y};
  for (const auto& o : s.world.obstacles) obstacles.push_back({{"cx", o.cx}, {"cy", o.cy}, {"radius", o.radius}});
  j["scan"] = {{"beam_count", s.scan.beam_count},
               {"fov", s.scan.fov},
               {"range_min", s.scan.range_min},
               {"range_max", s.scan.range_max}};
  auto& logs = j["logs"] = nlohmann::json::array();
  for (const auto& e : s.logs) {
    logs.push_back({{"time", e.time_s},
                    {"level", msg::log_level_name(static_cast<int>(e.level))},
                    {"node", e.node},
                    {"text", e.text}});
  }
  j["noise"] = {{"pose_sigma", s.noise.pose_sigma}, {"scan_sigma", s.noise.scan_sigma}};
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, fmt::format("cannot open scenario '{}'", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    invalid(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return scenario_from_json(j);
}

std::vector<std::string> scenario_names() { return {"straight_line", "circle", "pillar_room", "patrol_5m"}; }

Scenario named_scenario(std::string_view name) {
  using msg::LogLevel;
  Scenario s;
  s.name = std::string(name);
  s.seed = 1;
  if (name == "straight_line") {
    s.duration = 10.0;
    s.script = {{0.0, 10.0, 0.5, 0.0}};
    s.world.half_x = s.world.half_y = 10.0;
    s.logs = {{0.0, LogLevel::Info, "/bag_synth", "scenario straight_line started"}};
  } else if (name == "circle") {
    constexpr double kRadius = 2.0;
    constexpr double kSpeed = 0.5;
    s.duration = 2.0 * std::numbers::pi * kRadius / kSpeed;
    s.script = {{0.0, s.duration, kSpeed, kSpeed / kRadius}};
    s.world.half_x = s.world.half_y = 6.0;
    s.logs = {{0.0, LogLevel::Info, "/bag_synth", "scenario circle started"}};
  } else if (name == "pillar_room") {
    s.duration = 2.0;
    s.world.half_x = s.world.half_y = 3.0;
    s.world.obstacles = {{0.8, 0.0, 0.2}};
    s.logs = {{0.0, LogLevel::Info, "/bag_synth", "scenario pillar_room started"}};
  } else if (name == "patrol_5m") {
    // A 3 m square patrolled for five minutes: drive 6 s, turn a quarter at
    // 0.656 rad/s, pause, repeat.
    constexpr double kTurnRate = 0.656;
    const double turn = (std::numbers::pi / 2.0) / kTurnRate;
    constexpr double kCycle = 9.0;
    s.duration = 300.0;
    s.start_time = 1'755'341'678.758273;
    s.initial_pose = {-1.5, -1.5, 0.0};
    s.rates.camera_hz = 1.0;
    for (double t = 0.0; t + 6.0 <= s.duration; t += kCycle) {
      s.script.push_back({t, t + 6.0, 0.5, 0.0});
      if (t + 6.0 + turn <= s.duration) s.script.push_back({t + 6.0, t + 6.0 + turn, 0.0, kTurnRate});
    }
    s.world.half_x = s.world.half_y = 5.0;
    s.world.obstacles = {{3.0, 0.0, 0.3}, {-3.2, 3.0, 0.25}};
    s.logs = {
        {0.0, LogLevel::Info, "/bag_synth", "patrol started"},
        {1.0, LogLevel::Info, "/lidar_driver", "lidar spinning at 5 Hz"},
        {2.0, LogLevel::Info, "/planner", "route loaded: 4 waypoints"},
        {30.0, LogLevel::Info, "/planner", "waypoint 1 reached"},
        {45.5, LogLevel::Warn, "/controller", "tracking error above 0.1 m"},
        {60.0, LogLevel::Info, "/planner", "waypoint 2 reached"},
        {90.0, LogLevel::Info, "/planner", "waypoint 3 reached"},
        {121.25, LogLevel::Error, "/lidar_driver", "dropped 3 scans"},
        {150.0, LogLevel::Info, "/planner", "lap 1 complete"},
        {180.0, LogLevel::Warn, "/controller", "wheel slip suspected"},
        {210.0, LogLevel::Info, "/planner", "waypoint 1 reached"},
        {240.0, LogLevel::Info, "/planner", "waypoint 2 reached"},
        {299.0, LogLevel::Info, "/bag_synth", "patrol finished"},
    };
  } else {
    invalid(fmt::format("unknown scenario '{}'; known: {}", name, fmt::join(scenario_names(), ", ")));
  }
  s.validate();
  return s;
}

}  // namespace bagpilot::synth
