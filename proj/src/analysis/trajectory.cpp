// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::analysis {

TrajectoryReport trajectory_from_poses(const std::vector<PoseSample>& poses, bool include_waypoints,
                                       std::size_t waypoint_count) {
  TrajectoryReport r;
  r.message_count = poses.size();
  if (poses.empty()) return r;
  const auto& first = poses.front();
  const auto& last = poses.back();
  r.start_time = ns_to_seconds(first.time_ns);
  r.end_time = ns_to_seconds(last.time_ns);
  r.duration = static_cast<double>(last.time_ns - first.time_ns) * 1e-9;
  r.x_min = r.x_max = first.pose.x;
  r.y_min = r.y_max = first.pose.y;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& p = poses[i].pose;
    r.x_min = std::min(r.x_min, p.x);
    r.x_max = std::max(r.x_max, p.x);
    r.y_min = std::min(r.y_min, p.y);
    r.y_max = std::max(r.y_max, p.y);
    if (i == 0) continue;
    const auto& q = poses[i - 1];
    const double d = std::hypot(p.x - q.pose.x, p.y - q.pose.y);
    r.total_distance += d;
    const TimeNs dt = poses[i].time_ns - q.time_ns;
    if (dt > 0) r.max_speed = std::max(r.max_speed, d / (static_cast<double>(dt) * 1e-9));
  }
  r.x_span = r.x_max - r.x_min;
  r.y_span = r.y_max - r.y_min;
  r.displacement = std::hypot(last.pose.x - first.pose.x, last.pose.y - first.pose.y);
  r.mean_speed = r.duration > 0 ? r.total_distance / r.duration : 0.0;
  if (include_waypoints) {
    std::vector<Waypoint> w;
    const std::size_t n = poses.size();
    const std::size_t count = std::min(n, std::max<std::size_t>(waypoint_count, 2));
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t idx = count == 1 ? 0 : k * (n - 1) / (count - 1);
      const auto& p = poses[idx];
      w.push_back({p.time_ns, p.pose.x, p.pose.y, p.pose.yaw});
    }
    r.waypoints = std::move(w);
  }
  return r;
}

std::vector<PoseSample> load_poses(const bag::BagHandle& bag, std::string_view topic_name,
                                   std::optional<double> start_time, std::optional<double> end_time) {
  const auto topic = store::resolve_topic(bag, topic_name);
  for (const auto* c : bag.connections_for_topic(topic)) {
    if (!msg::is_pose_type(c->type_name)) {
      throw Error(Errc::UnsupportedPoseType,
                  fmt::format("'{}' carries {}; trajectory analysis needs nav_msgs/Odometry, "
                              "geometry_msgs/PoseStamped or geometry_msgs/PoseWithCovarianceStamped",
                              topic, c->type_name));
    }
  }
  const auto w = store::TimeWindow::from_seconds(start_time, end_time);
  bag::MessageQuery q{.topics = std::set<std::string, std::less<>>{topic}, .start_ns = {}, .end_ns = {}};
  if (start_time) q.start_ns = w.start_ns;
  if (end_time) q.end_ns = w.end_ns;
  std::vector<PoseSample> out;
  bag.for_each(q, [&](const bag::MessageView& m) {
    out.push_back({m.time_ns, *msg::extract_pose2d(m.connection->type_name, store::decode_message(m))});
    return true;
  });
  return out;
}

TrajectoryReport analyze_trajectory(const bag::BagHandle& bag, std::string_view topic_name,
                                    std::optional<double> start_time, std::optional<double> end_time,
                                    bool include_waypoints, std::size_t waypoint_count) {
  if (start_time && end_time && *start_time > *end_time) {
    throw Error(Errc::InvalidRange, fmt::format("start_time {:.6f} is after end_time {:.6f}", *start_time, *end_time));
  }
  const auto topic = store::resolve_topic(bag, topic_name);
  const auto poses = load_poses(bag, topic, start_time, end_time);
  if (poses.empty()) {
    throw Error(Errc::NoMessagesInWindow, fmt::format("no poses on '{}' in the requested window", topic));
  }
  auto r = trajectory_from_poses(poses, include_waypoints, waypoint_count);
  r.topic = topic;
  r.type_name = bag.connections_for_topic(topic).front()->type_name;
  return r;
}

nlohmann::json to_json(const TrajectoryReport& r) {
  nlohmann::json j = {{"pose_topic", r.topic},
                      {"type", r.type_name},
                      {"start_time", r.start_time},
                      {"end_time", r.end_time},
                      {"duration", r.duration},
                      {"message_count", r.message_count},
                      {"total_distance", r.total_distance},
                      {"mean_speed", r.mean_speed},
                      {"max_speed", r.max_speed},
                      {"speed_method", "finite differences of consecutive positions"},
                      {"x_min", r.x_min},
                      {"x_max", r.x_max},
                      {"x_span", r.x_span},
                      {"y_min", r.y_min},
                      {"y_max", r.y_max},
                      {"y_span", r.y_span},
                      {"displacement", r.displacement}};
  if (r.waypoints) {
    auto w = nlohmann::json::array();
    for (const auto& p : *r.waypoints) {
      w.push_back({{"time", ns_to_seconds(p.time_ns)}, {"x", p.x}, {"y", p.y}, {"heading", p.heading}});
    }
    j["waypoints"] = std::move(w);
  }
  return j;
}

}  // namespace bagpilot::analysis
