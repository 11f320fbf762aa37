// SPDX-License-Identifier: Apache-2.0
// PNG rendering of time series, XY trajectories and polar LiDAR scans.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bagpilot/bag/format.hpp"

namespace bagpilot::plot {

inline constexpr int kMinSize = 64;
inline constexpr int kMaxSize = 4096;
inline constexpr int kDefaultWidth = 800;
inline constexpr int kDefaultHeight = 600;
inline constexpr std::size_t kDefaultBins = 30;
inline constexpr std::size_t kMaxBins = 1000;

enum class Style { Line, Scatter, Step, Histogram };

std::string_view style_name(Style s) noexcept;
std::optional<Style> parse_style(std::string_view name) noexcept;
std::vector<std::string> style_names();

/// Presentation options shared by every plot kind.
struct Canvas {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = kDefaultWidth;
  int height = kDefaultHeight;
};

struct SeriesSummary {
  std::string name;
  std::size_t point_count = 0;
  std::optional<double> min;  // absent for empty series
  std::optional<double> max;
  std::optional<double> mean;
};

/// Shared bin edges (bins + 1, last bin closed) and one count row per series.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::vector<std::uint64_t>> counts;
};

struct Extents {
  double x_min = 0.0, x_max = 0.0, x_span = 0.0;
  double y_min = 0.0, y_max = 0.0, y_span = 0.0;
};

struct ScanSummary {
  std::string topic;
  TimeNs time_ns = 0;
  std::size_t beam_count = 0;
  std::size_t valid_count = 0;
  std::optional<double> min_range;
  std::optional<double> max_range;
  double range_max = 0.0;
};

struct PlotResult {
  std::vector<std::uint8_t> png;
  int width = 0;
  int height = 0;
  std::vector<SeriesSummary> series;
  std::vector<std::string> warnings;
  std::optional<Histogram> histogram;
  std::optional<Extents> extents;
  std::optional<ScanSummary> scan;
};

// --- time series ---------------------------------------------------------

struct TimeseriesRequest {
  /// Topic-qualified paths such as "cmd_vel.linear.x" or "/odom.twist.twist.linear.x".
  std::vector<std::string> fields;
  Style style = Style::Line;
  std::optional<double> start_time;
  std::optional<double> end_time;
  std::size_t bins = kDefaultBins;
  Canvas canvas;
};

/// The x axis is seconds since bag start. Histogram style bins the values of
/// every series over one shared set of edges. A series with no points is a
/// warning, not an error.
PlotResult plot_timeseries(const bag::BagHandle& bag, const TimeseriesRequest& request);

// --- XY trajectory -------------------------------------------------------

struct XyRequest {
  /// Either a pose topic, or x_field and y_field on one topic.
  std::optional<std::string> pose_topic;
  std::optional<std::string> x_field;
  std::optional<std::string> y_field;
  std::optional<double> start_time;
  std::optional<double> end_time;
  Canvas canvas;
};

/// Equal-aspect XY path with distinct start and end markers.
PlotResult plot_2d(const bag::BagHandle& bag, const XyRequest& request);

// --- LiDAR scan ----------------------------------------------------------

struct ScanRequest {
  std::string topic;
  double time = 0.0;
  double tolerance = 1.0;
  Canvas canvas;
};

/// Nearest scan rendered in polar form out to range_max; invalid beams are
/// omitted. Throws Error(NoScanNearTime).
PlotResult plot_lidar_scan(const bag::BagHandle& bag, const ScanRequest& request);

// --- shared ---------------------------------------------------------------

/// A topic-qualified field split into the bag topic and the in-message path.
struct FieldRef {
  std::string topic;
  std::string field;
};

/// The leading dotted segment names the topic, with the usual alias rules.
/// Throws Error(NoSuchField) when nothing follows the topic, or the topic
/// resolution errors.
FieldRef resolve_field(const bag::BagHandle& bag, std::string_view qualified);

/// Throws Error(InvalidArgument) for sizes outside [kMinSize, kMaxSize].
void validate_canvas(const Canvas& canvas);

/// Everything except the image bytes.
nlohmann::json to_json(const PlotResult& r);

}  // namespace bagpilot::plot
