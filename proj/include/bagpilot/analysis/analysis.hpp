// SPDX-License-Identifier: Apache-2.0
// Trajectory, LiDAR, log, TF and image analysis over opened bags.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bagpilot/bag/format.hpp"
#include "bagpilot/msg/builtin.hpp"

namespace bagpilot::analysis {

// --- trajectory -----------------------------------------------------------

struct PoseSample {
  TimeNs time_ns = 0;
  msg::Pose2D pose;
};

struct Waypoint {
  TimeNs time_ns = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct TrajectoryReport {
  std::string topic;
  std::string type_name;
  double start_time = 0.0;
  double end_time = 0.0;
  double duration = 0.0;
  std::uint64_t message_count = 0;
  double total_distance = 0.0;
  double mean_speed = 0.0;
  double max_speed = 0.0;
  double x_min = 0.0, x_max = 0.0, x_span = 0.0;
  double y_min = 0.0, y_max = 0.0, y_span = 0.0;
  double displacement = 0.0;
  std::optional<std::vector<Waypoint>> waypoints;
};

inline constexpr std::size_t kDefaultWaypointCount = 20;

/// Metrics over time-ordered poses. Speeds come from successive position
/// differences; pairs with equal timestamps add distance but no speed sample.
/// Waypoints are strided uniformly in index and include both endpoints.
TrajectoryReport trajectory_from_poses(const std::vector<PoseSample>& poses, bool include_waypoints = false,
                                       std::size_t waypoint_count = kDefaultWaypointCount);

/// Poses of an Odometry / PoseStamped / PoseWithCovarianceStamped topic in
/// [start, end]. Throws Error(UnknownTopic) or Error(UnsupportedPoseType).
std::vector<PoseSample> load_poses(const bag::BagHandle& bag, std::string_view topic,
                                   std::optional<double> start_time = {}, std::optional<double> end_time = {});

/// Throws like load_poses, and Error(NoMessagesInWindow) when no pose lies in
/// the window. A single pose yields a zero-distance report.
TrajectoryReport analyze_trajectory(const bag::BagHandle& bag, std::string_view topic,
                                    std::optional<double> start_time = {}, std::optional<double> end_time = {},
                                    bool include_waypoints = false,
                                    std::size_t waypoint_count = kDefaultWaypointCount);

nlohmann::json to_json(const TrajectoryReport& r);

// --- LiDAR ----------------------------------------------------------------

struct ScanData {
  TimeNs time_ns = 0;
  std::string frame_id;
  double angle_min = 0.0;
  double angle_max = 0.0;
  double angle_increment = 0.0;
  double range_min = 0.0;
  double range_max = 0.0;
  std::vector<float> ranges;

  double bearing(std::size_t beam) const noexcept { return angle_min + static_cast<double>(beam) * angle_increment; }
  bool valid(std::size_t beam) const noexcept;
};

/// Throws Error(ShapeMismatch) when the value is not a LaserScan.
ScanData scan_from_value(const msg::Value& scan, TimeNs time_ns);

struct ScanParams {
  double obstacle_threshold = 1.0;
  double gap_threshold = 3.0;
  /// Obstacle runs separated by fewer than this many invalid beams merge.
  std::size_t bridge_beams = 3;
};

struct ScanObstacle {
  std::size_t first_beam = 0;
  std::size_t last_beam = 0;
  double start_angle = 0.0;
  double end_angle = 0.0;
  double min_range = 0.0;
  double bearing_of_min = 0.0;
};

struct ScanGap {
  std::size_t first_beam = 0;
  std::size_t last_beam = 0;
  double start_angle = 0.0;
  double end_angle = 0.0;
  double angular_width = 0.0;  // beam count times angle_increment
};

struct RangeStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

struct ScanReport {
  std::string topic;
  TimeNs time_ns = 0;
  std::optional<double> requested_time;
  ScanParams params;
  double angle_min = 0.0, angle_max = 0.0, angle_increment = 0.0, range_max = 0.0;
  std::size_t beam_count = 0;
  std::size_t valid_count = 0;
  std::optional<RangeStats> stats;  // absent when no beam is valid
  std::vector<ScanObstacle> obstacles;
  std::vector<ScanGap> gaps;
  std::optional<std::pair<double, double>> nearest;  // (range, bearing)
};

/// Beam i is valid iff finite and range_min <= r <= range_max. Obstacles are
/// runs of valid beams closer than the threshold, bridged across short runs
/// of invalid beams; gaps are runs of beams beyond the gap threshold or
/// invalid. No wrap-around at the ends of the field of view.
ScanReport analyze_scan(const ScanData& scan, const ScanParams& params = {});

/// Nearest scan to `time` within `tolerance`. Throws Error(UnknownTopic),
/// Error(NoScanNearTime) or Error(ShapeMismatch) for non-LaserScan topics.
ScanData scan_at_time(const bag::BagHandle& bag, std::string_view topic, double time, double tolerance = 1.0);

ScanReport analyze_lidar_scan(const bag::BagHandle& bag, std::string_view topic, double time,
                              const ScanParams& params = {});

nlohmann::json to_json(const ScanReport& r);

// --- logs -----------------------------------------------------------------

struct LogEntry {
  TimeNs time_ns = 0;
  int level = 0;
  std::string node;
  std::string message;
  std::string file;
  std::string function;
  std::uint32_t line = 0;
};

struct LogQuery {
  std::optional<msg::LogLevel> min_level;
  std::optional<std::string> node;
  std::optional<double> start_time;
  std::optional<double> end_time;
  std::size_t limit = 50;
};

struct LogReport {
  std::vector<std::string> topics;
  LogQuery query;
  std::uint64_t total = 0;
  std::map<std::string, std::uint64_t> counts_by_level;  // every level name present
  std::map<std::string, std::uint64_t> counts_by_node;
  std::uint64_t filtered_total = 0;
  std::vector<LogEntry> entries;  // first `limit` filtered entries
};

/// Counts cover every entry in the time window; level and node filters only
/// select the listed entries. Throws Error(NoLogTopic).
LogReport analyze_logs(const bag::BagHandle& bag, const LogQuery& query = {});

nlohmann::json to_json(const LogReport& r);

// --- TF -------------------------------------------------------------------

struct TfEdge {
  std::string parent;
  std::string child;
  bool is_static = false;
  std::array<double, 3> translation{};
  std::array<double, 4> rotation{0, 0, 0, 1};  // x, y, z, w
  std::uint64_t observations = 0;
};

struct TfTree {
  std::vector<std::string> topics;
  std::vector<std::string> frames;  // sorted
  std::vector<TfEdge> edges;        // sorted by (parent, child)
  std::vector<std::string> roots;
  std::vector<std::string> multi_parent;
  std::vector<std::vector<std::string>> cycles;  // frames of each directed cycle component
};

struct TfObservation {
  std::string parent;
  std::string child;
  bool is_static = false;
  std::array<double, 3> translation{};
  std::array<double, 4> rotation{0, 0, 0, 1};
};

/// Edges keyed by (parent, child); the sample transform is the last observed.
/// Leading '/' is stripped from frame ids.
TfTree build_tf_tree(const std::vector<TfObservation>& observations);

/// Reads up to `sample_limit` messages per TF topic. Throws Error(NoTfTopic).
TfTree get_tf_tree(const bag::BagHandle& bag, std::size_t sample_limit = 1000);

nlohmann::json to_json(const TfTree& t);

// --- images ---------------------------------------------------------------

struct ImageResult {
  std::string topic;
  TimeNs time_ns = 0;
  double requested_time = 0.0;
  double delta = 0.0;
  std::string frame_id;
  std::string format;
  std::string mime_type;
  std::vector<std::uint8_t> data;
};

/// Nearest CompressedImage to `time`. Throws Error(UnknownTopic),
/// Error(NoMessageWithinTolerance) or Error(UnsupportedImageEncoding).
ImageResult get_image_at_time(const bag::BagHandle& bag, std::string_view topic, double time,
                              double tolerance = 1.0);

/// Metadata only; the bytes travel as an image content block.
nlohmann::json to_json(const ImageResult& r);

}  // namespace bagpilot::analysis
