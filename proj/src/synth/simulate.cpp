// SPDX-License-Identifier: Apache-2.0
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "bagpilot/error.hpp"
#include "bagpilot/msg/codec.hpp"
#include "bagpilot/synth/synth.hpp"

namespace bagpilot::synth {

namespace {

using msg::Array;
using msg::Record;
using msg::Value;

constexpr double kStep = 1e-3;  // internal integration step, s
constexpr double kLaserHeight = 0.2;

constexpr std::uint8_t kTinyPng[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52,
    0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x08, 0x02, 0x00, 0x00, 0x00, 0xfd, 0xd4, 0x9a,
    0x73, 0x00, 0x00, 0x00, 0x16, 0x49, 0x44, 0x41, 0x54, 0x78, 0xda, 0x63, 0xf8, 0xcf, 0xc0, 0xc0,
    0xf0, 0x9f, 0x81, 0x91, 0x81, 0xe1, 0xff, 0xff, 0xff, 0x0c, 0x00, 0x1e, 0xf6, 0x04, 0xfd, 0x0b,
    0x31, 0x7c, 0x09, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

// Topic order doubles as the tie-break for messages sharing a timestamp.
enum Topic : std::uint32_t { kTfStatic, kTf, kOdom, kCmd, kScan, kCamera, kRosout, kTopicCount };

struct TopicDef {
  const char* topic;
  std::string_view type;
  bool latching;
};

constexpr TopicDef kTopics[] = {
    {"/tf_static", msg::kTfMessage, true},          {"/tf", msg::kTfMessage, false},
    {"/odom", msg::kOdometry, false},               {"/cmd_vel", msg::kTwist, false},
    {"/scan", msg::kLaserScan, false},              {"/camera/image_raw/compressed", msg::kCompressedImage, false},
    {"/rosout", msg::kLog, false},
};

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

Value time_value(TimeNs t) {
  return msg::Time{static_cast<std::uint32_t>(t / kNsPerSec), static_cast<std::uint32_t>(t % kNsPerSec)};
}

Value header(std::uint64_t seq, TimeNs t, std::string frame) {
  return Record{{"seq", seq}, {"stamp", time_value(t)}, {"frame_id", std::move(frame)}};
}

Value vec3(double x, double y, double z) { return Record{{"x", x}, {"y", y}, {"z", z}}; }

Value quat_from_yaw(double yaw) {
  return Record{{"x", 0.0}, {"y", 0.0}, {"z", std::sin(yaw / 2.0)}, {"w", std::cos(yaw / 2.0)}};
}

Value zeros36() { return Array(36, Value(0.0)); }

Value transform(std::uint64_t seq, TimeNs t, std::string parent, std::string child, double x, double y, double z,
                double yaw) {
  return Record{{"header", header(seq, t, std::move(parent))},
                {"child_frame_id", std::move(child)},
                {"transform", Record{{"translation", vec3(x, y, z)}, {"rotation", quat_from_yaw(yaw)}}}};
}

std::vector<TimeNs> sample_times(double hz, TimeNs duration_ns) {
  std::vector<TimeNs> out;
  if (hz <= 0.0) return out;
  for (std::int64_t k = 0;; ++k) {
    const auto t = static_cast<TimeNs>(std::llround(static_cast<double>(k) * 1e9 / hz));
    if (t > duration_ns) break;
    out.push_back(t);
  }
  return out;
}

struct State {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double arc = 0.0;
};

class Integrator {
 public:
  explicit Integrator(const Scenario& s) : s_(s) {
    state_.x = s.initial_pose.x;
    state_.y = s.initial_pose.y;
    state_.theta = s.initial_pose.yaw;
    for (const auto& c : s.script) {
      bounds_.push_back(c.start_s);
      bounds_.push_back(c.end_s);
    }
    std::sort(bounds_.begin(), bounds_.end());
  }

  // Exact arcs over 1 ms substeps, split at command boundaries.
  void advance_to(double target) {
    while (state_.t < target) {
      double next = std::min(target, state_.t + kStep);
      const auto b = std::upper_bound(bounds_.begin(), bounds_.end(), state_.t);
      if (b != bounds_.end() && *b < next) next = *b;
      const auto c = s_.command_at(state_.t);
      const double h = next - state_.t;
      if (std::abs(c.omega) < 1e-12) {
        state_.x += c.v * std::cos(state_.theta) * h;
        state_.y += c.v * std::sin(state_.theta) * h;
      } else {
        const double th1 = state_.theta + c.omega * h;
        state_.x += c.v / c.omega * (std::sin(th1) - std::sin(state_.theta));
        state_.y += c.v / c.omega * (std::cos(state_.theta) - std::cos(th1));
        state_.theta = th1;
      }
      state_.arc += std::abs(c.v) * h;
      state_.t = next;
    }
  }

  const State& state() const noexcept { return state_; }

 private:
  const Scenario& s_;
  State state_;
  std::vector<double> bounds_;
};

struct Event {
  TimeNs rel_ns;
  Topic topic;
  std::size_t index;
};

}  // namespace

std::span<const std::uint8_t> tiny_png() noexcept { return kTinyPng; }

double cast_ray(const World& world, double x, double y, double angle, double range_max) noexcept {
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  double best = std::numeric_limits<double>::infinity();
  // Walls of the room, seen from inside.
  if (dx > 0) best = std::min(best, (world.half_x - x) / dx);
  if (dx < 0) best = std::min(best, (-world.half_x - x) / dx);
  if (dy > 0) best = std::min(best, (world.half_y - y) / dy);
  if (dy < 0) best = std::min(best, (-world.half_y - y) / dy);
  for (const auto& o : world.obstacles) {
    const double ox = x - o.cx;
    const double oy = y - o.cy;
    const double b = dx * ox + dy * oy;
    const double c = ox * ox + oy * oy - o.radius * o.radius;
    const double disc = b * b - c;
    if (disc < 0) continue;
    const double root = std::sqrt(disc);
    double t = -b - root;
    if (t < 0) t = -b + root;
    if (t >= 0) best = std::min(best, t);
  }
  return best <= range_max ? best : std::numeric_limits<double>::infinity();
}

SimTrace simulate(const Scenario& scenario) {
  scenario.validate();
  SimTrace trace;
  trace.scenario = scenario;
  trace.start_ns = seconds_to_ns(scenario.start_time);
  const TimeNs duration_ns = seconds_to_ns(scenario.duration);
  const auto& rates = scenario.rates;

  std::vector<Event> events;
  auto add_events = [&](Topic topic, const std::vector<TimeNs>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) events.push_back({times[i], topic, i});
  };
  add_events(kTfStatic, {0});
  add_events(kTf, sample_times(rates.tf_hz, duration_ns));
  add_events(kOdom, sample_times(rates.odom_hz, duration_ns));
  add_events(kCmd, sample_times(rates.cmd_hz, duration_ns));
  add_events(kScan, sample_times(rates.scan_hz, duration_ns));
  add_events(kCamera, sample_times(rates.camera_hz, duration_ns));
  for (std::size_t i = 0; i < scenario.logs.size(); ++i) {
    events.push_back({seconds_to_ns(scenario.logs[i].time_s), kRosout, i});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.rel_ns != b.rel_ns ? a.rel_ns < b.rel_ns : a.topic < b.topic;
  });

  std::vector<bool> used(kTopicCount, false);
  std::vector<std::uint64_t> seq(kTopicCount, 0);
  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> pose_noise(0.0, scenario.noise.pose_sigma > 0 ? scenario.noise.pose_sigma : 1.0);
  std::normal_distribution<double> scan_noise(0.0, scenario.noise.scan_sigma > 0 ? scenario.noise.scan_sigma : 1.0);

  Integrator integ(scenario);
  const auto& scan = scenario.scan;
  for (const auto& ev : events) {
    integ.advance_to(static_cast<double>(ev.rel_ns) * 1e-9);
    const auto& st = integ.state();
    const TimeNs t = trace.start_ns + ev.rel_ns;
    const double yaw = wrap_angle(st.theta);
    const auto cmd = scenario.command_at(static_cast<double>(ev.rel_ns) * 1e-9);
    Value value;
    switch (ev.topic) {
      case kTfStatic:
        value = Record{{"transforms", Array{transform(seq[ev.topic], t, "base_link", "laser", 0.0, 0.0,
                                                       kLaserHeight, 0.0)}}};
        break;
      case kTf:
        value = Record{{"transforms", Array{transform(seq[ev.topic], t, "odom", "base_link", st.x, st.y, 0.0, yaw)}}};
        break;
      case kOdom: {
        trace.poses.push_back({t, st.x, st.y, yaw});
        double px = st.x;
        double py = st.y;
        if (scenario.noise.pose_sigma > 0) {
          px += pose_noise(rng);
          py += pose_noise(rng);
        }
        value = Record{
            {"header", header(seq[ev.topic], t, "odom")},
            {"child_frame_id", std::string("base_link")},
            {"pose", Record{{"pose", Record{{"position", vec3(px, py, 0.0)}, {"orientation", quat_from_yaw(yaw)}}},
                            {"covariance", zeros36()}}},
            {"twist", Record{{"twist", Record{{"linear", vec3(cmd.v, 0.0, 0.0)}, {"angular", vec3(0.0, 0.0, cmd.omega)}}},
                             {"covariance", zeros36()}}},
        };
        break;
      }
      case kCmd:
        trace.commands.push_back({t, cmd.v, cmd.omega});
        value = Record{{"linear", vec3(cmd.v, 0.0, 0.0)}, {"angular", vec3(0.0, 0.0, cmd.omega)}};
        break;
      case kScan: {
        ScanSample sample{t, {t, st.x, st.y, yaw}, {}};
        Array ranges;
        sample.ranges.reserve(static_cast<std::size_t>(scan.beam_count));
        for (int i = 0; i < scan.beam_count; ++i) {
          const double bearing = scan.angle_min() + i * scan.angle_increment();
          const double r = cast_ray(scenario.world, st.x, st.y, st.theta + bearing, scan.range_max);
          sample.ranges.push_back(r);
          double reported = r;
          if (scenario.noise.scan_sigma > 0 && std::isfinite(r)) reported = std::max(0.0, r + scan_noise(rng));
          ranges.emplace_back(static_cast<float>(reported));
        }
        trace.scans.push_back(std::move(sample));
        const float angle_min = static_cast<float>(scan.angle_min());
        const float inc = static_cast<float>(scan.angle_increment());
        value = Record{
            {"header", header(seq[ev.topic], t, "laser")},
            {"angle_min", angle_min},
            {"angle_max", static_cast<float>(scan.angle_min() + (scan.beam_count - 1) * scan.angle_increment())},
            {"angle_increment", inc},
            {"time_increment", 0.0f},
            {"scan_time", static_cast<float>(1.0 / rates.scan_hz)},
            {"range_min", static_cast<float>(scan.range_min)},
            {"range_max", static_cast<float>(scan.range_max)},
            {"ranges", std::move(ranges)},
            {"intensities", Array{}},
        };
        break;
      }
      case kCamera: {
        Array data;
        for (auto b : kTinyPng) data.emplace_back(static_cast<std::uint64_t>(b));
        value = Record{{"header", header(seq[ev.topic], t, "camera")},
                       {"format", std::string("png")},
                       {"data", std::move(data)}};
        break;
      }
      case kRosout: {
        const auto& e = scenario.logs[ev.index];
        value = Record{{"header", header(seq[ev.topic], t, "")},
                       {"level", static_cast<std::int64_t>(e.level)},
                       {"name", e.node},
                       {"msg", e.text},
                       {"file", std::string("bag_synth.cpp")},
                       {"function", std::string("simulate")},
                       {"line", std::uint64_t{0}},
                       {"topics", Array{}}};
        break;
      }
      case kTopicCount:
        break;
    }
    const auto type = kTopics[ev.topic].type;
    trace.messages.push_back({ev.topic, t, msg::encode(msg::builtin_schema(type), value)});
    used[ev.topic] = true;
    ++seq[ev.topic];
  }

  for (std::uint32_t id = 0; id < kTopicCount; ++id) {
    if (!used[id]) continue;
    const auto& b = msg::builtin(kTopics[id].type);
    bag::ConnectionRecord c;
    c.conn_id = id;
    c.topic = kTopics[id].topic;
    c.type_name = b.type_name;
    c.md5sum = b.md5sum;
    c.message_definition = b.definition;
    c.callerid = "/bag_synth";
    c.latching = kTopics[id].latching;
    trace.connections.push_back(std::move(c));
  }

  integ.advance_to(static_cast<double>(duration_ns) * 1e-9);
  const auto& end = integ.state();
  auto& sum = trace.summary;
  sum.duration = static_cast<double>(duration_ns) * 1e-9;
  sum.arc_length = end.arc;
  sum.final_pose = {trace.start_ns + duration_ns, end.x, end.y, wrap_angle(end.theta)};
  if (!trace.poses.empty()) {
    sum.x_min = sum.x_max = trace.poses.front().x;
    sum.y_min = sum.y_max = trace.poses.front().y;
  }
  double max_v = 0.0;
  for (const auto& c : scenario.script) max_v = std::max(max_v, std::abs(c.v));
  for (std::size_t i = 0; i < trace.poses.size(); ++i) {
    const auto& p = trace.poses[i];
    sum.x_min = std::min(sum.x_min, p.x);
    sum.x_max = std::max(sum.x_max, p.x);
    sum.y_min = std::min(sum.y_min, p.y);
    sum.y_max = std::max(sum.y_max, p.y);
    if (i == 0) continue;
    const auto& q = trace.poses[i - 1];
    const double d = std::hypot(p.x - q.x, p.y - q.y);
    sum.total_distance += d;
    const double dt = static_cast<double>(p.time_ns - q.time_ns) * 1e-9;
    if (dt > 0) sum.max_speed = std::max(sum.max_speed, d / dt);
  }
  // A chord never exceeds the arc it spans, so neither can the sampled speed.
  if (sum.total_distance > sum.arc_length + 1e-9 || sum.max_speed > max_v + 1e-6) {
    throw Error(Errc::InvalidScenario, "internal consistency check failed while integrating the scenario");
  }
  return trace;
}

nlohmann::json SimTrace::truth() const {
  nlohmann::json j;
  j["scenario"] = scenario_to_json(scenario);
  j["start_time"] = ns_to_seconds(start_ns);
  j["end_time"] = messages.empty() ? ns_to_seconds(start_ns) : ns_to_seconds(messages.back().time_ns);
  j["duration"] = summary.duration;
  auto& counts = j["topics"] = nlohmann::json::object();
  for (const auto& c : connections) {
    counts[c.topic] = {{"type", c.type_name},
                       {"count", std::count_if(messages.begin(), messages.end(),
                                               [&](const auto& m) { return m.conn_id == c.conn_id; })}};
  }
  const auto& s = summary;
  j["trajectory"] = {{"total_distance", s.total_distance},
                     {"arc_length", s.arc_length},
                     {"x_min", s.x_min},
                     {"x_max", s.x_max},
                     {"x_span", s.x_max - s.x_min},
                     {"y_min", s.y_min},
                     {"y_max", s.y_max},
                     {"y_span", s.y_max - s.y_min},
                     {"max_speed", s.max_speed},
                     {"final_pose", {{"x", s.final_pose.x}, {"y", s.final_pose.y}, {"theta", s.final_pose.theta}}}};
  auto& levels = j["logs"] = nlohmann::json::object();
  for (const auto& e : scenario.logs) {
    auto& n = levels[msg::log_level_name(static_cast<int>(e.level))];
    n = n.is_null() ? 1 : n.get<int>() + 1;
  }
  auto& cmds = j["cmd_vel"] = nlohmann::json::array();
  for (const auto& c : commands) cmds.push_back({ns_to_seconds(c.time_ns), c.v, c.omega});
  return j;
}

std::filesystem::path truth_path(const std::filesystem::path& bag_path) {
  auto p = bag_path;
  p += ".truth.json";
  return p;
}

bag::WrittenBagStats write_fixture(const SimTrace& trace, const std::filesystem::path& bag_path) {
  const auto stats = bag::write_bag(bag_path, trace.connections, trace.messages);
  const auto sidecar = truth_path(bag_path);
  std::ofstream out(sidecar, std::ios::trunc);
  out << trace.truth().dump(2) << '\n';
  if (!out) throw Error(Errc::IoFailure, fmt::format("cannot write '{}'", sidecar.string()));
  return stats;
}

}  // namespace bagpilot::synth
