// SPDX-License-Identifier: Apache-2.0
// The tool registry: descriptors, argument handling and result rendering.
#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/filter/filter.hpp"
#include "bagpilot/mcp/schema.hpp"
#include "bagpilot/mcp/server.hpp"
#include "bagpilot/plot/plot.hpp"

namespace bagpilot::mcp {

namespace {

// --- schema construction ----------------------------------------------------

json prop(std::string_view type, std::string_view description) {
  return {{"type", type}, {"description", description}};
}

json bag_path_prop() { return prop("string", "Optional: specific bag file or directory to search"); }

json object_schema(json properties, std::vector<std::string> required = {}) {
  json s{{"type", "object"}, {"properties", std::move(properties)}};
  s["required"] = required;
  return s;
}

json canvas_props(json props) {
  props["title"] = prop("string", "Plot title");
  props["x_label"] = prop("string", "X axis label");
  props["y_label"] = prop("string", "Y axis label");
  auto size = [](std::string_view what, int def) {
    auto p = prop("integer", fmt::format("Image {} in pixels (default: {})", what, def));
    p["minimum"] = plot::kMinSize;
    p["maximum"] = plot::kMaxSize;
    return p;
  };
  props["width"] = size("width", plot::kDefaultWidth);
  props["height"] = size("height", plot::kDefaultHeight);
  props["bag_path"] = bag_path_prop();
  return props;
}

json with_enum(json p, const std::vector<std::string>& values) {
  p["enum"] = values;
  return p;
}

json with_min(json p, double minimum) {
  p["minimum"] = minimum;
  return p;
}

// --- argument access (types are guaranteed by validation) -------------------

std::optional<std::string> opt_str(const json& a, const char* key) {
  if (!a.contains(key)) return std::nullopt;
  return a[key].get<std::string>();
}

std::optional<double> opt_num(const json& a, const char* key) {
  if (!a.contains(key)) return std::nullopt;
  return a[key].get<double>();
}

std::optional<std::int64_t> opt_int(const json& a, const char* key) {
  if (!a.contains(key)) return std::nullopt;
  return static_cast<std::int64_t>(std::llround(a[key].get<double>()));
}

bool opt_bool(const json& a, const char* key, bool def) { return a.contains(key) ? a[key].get<bool>() : def; }

// --- result rendering -------------------------------------------------------

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

json text_block(const std::string& summary, const json& data) {
  return {{"type", "text"}, {"text", fmt::format("{}\n\n```json\n{}\n```", summary, dump(data))}};
}

ToolResult text_result(const std::string& summary, const json& data) {
  ToolResult r;
  r.content.push_back(text_block(summary, data));
  return r;
}

ToolResult image_result(const std::string& summary, const json& data, std::span<const std::uint8_t> bytes,
                        const std::string& mime) {
  auto r = text_result(summary, data);
  r.content.push_back({{"type", "image"}, {"data", base64_encode(bytes)}, {"mimeType", mime}});
  return r;
}

std::string with_note(std::string text, const store::ResolvedBag& rb) {
  if (!rb.note.empty()) text += "\n" + rb.note;
  return text;
}

std::string secs(double t) { return fmt::format("{}", t); }

double since_start(const bag::BagHandle& bag, TimeNs t) {
  return static_cast<double>(t - bag.start_time().value_or(t)) * 1e-9;
}

// --- tool bodies ------------------------------------------------------------

using Handler = std::function<ToolResult(store::Session&, const json&)>;

ToolResult set_bag_path(store::Session& s, const json& a) {
  const auto r = s.set_bag_path(a["path"].get<std::string>());
  json data{{"path", r.resolved.string()},
            {"kind", r.is_directory ? "directory" : "file"},
            {"bag_count", r.is_directory ? json(r.bag_count) : json()}};
  auto text = r.is_directory ? fmt::format("Bag path set to directory {} ({} bag file(s)).", r.resolved.string(),
                                           r.bag_count)
                             : fmt::format("Bag path set to file {}.", r.resolved.string());
  if (r.warning) {
    text += "\nWarning: " + *r.warning;
    data["warning"] = *r.warning;
  }
  return text_result(text, data);
}

ToolResult list_bags(store::Session& s, const json& a) {
  const auto dir = s.listing_dir(opt_str(a, "path"));
  const auto entries = store::list_bag_files(dir);
  auto list = json::array();
  std::string text = entries.empty() ? fmt::format("No bag files in {}.", dir.string())
                                     : fmt::format("{} bag file(s) in {}:", entries.size(), dir.string());
  for (const auto& e : entries) {
    const auto secs_since_epoch = static_cast<std::time_t>(std::floor(e.modified_time));
    const auto when = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(secs_since_epoch));
    text += fmt::format("\n  {}  {} bytes  modified {}", e.name, e.size_bytes, when);
    list.push_back({{"name", e.name},
                    {"path", e.path.string()},
                    {"size_bytes", e.size_bytes},
                    {"modified_time", e.modified_time}});
  }
  return text_result(text, {{"directory", dir.string()}, {"bags", list}});
}

ToolResult bag_info(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  const auto sum = store::summarize(*rb.bag);
  auto text = fmt::format("Bag {}: {} messages on {} topics, duration {:.3f} s (start {}, end {}).",
                          sum.path.string(), sum.message_count, sum.topics.size(), sum.duration,
                          secs(sum.start_time), secs(sum.end_time));
  for (const auto& t : sum.topics) {
    text += fmt::format("\n  {} [{}]: {} messages, {:.2f} Hz", t.topic, t.type_name, t.message_count, t.mean_rate_hz);
  }
  if (sum.reindexed) text += "\nThe bag had no usable index and was read by a linear scan.";
  return text_result(with_note(text, rb), store::to_json(sum));
}

ToolResult get_message_at_time(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  const auto m = store::message_at_time(*rb.bag, a["topic"].get<std::string>(), a["time"].get<double>(),
                                        opt_num(a, "tolerance").value_or(store::kDefaultTolerance));
  const auto text = fmt::format("Message on {} at {} (t+{:.3f} s into the bag), {:+.3f} s from the requested {}.",
                                m.topic, secs(ns_to_seconds(m.message.time_ns)),
                                since_start(*rb.bag, m.message.time_ns), m.delta, secs(m.requested_time));
  return text_result(with_note(text, rb), store::to_json(m));
}

ToolResult get_messages_in_range(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  std::optional<std::size_t> cap = store::kDefaultMaxMessages;
  if (auto n = opt_int(a, "max_messages")) cap = static_cast<std::size_t>(*n);
  const auto r = store::messages_in_range(*rb.bag, a["topic"].get<std::string>(), a["start_time"].get<double>(),
                                          a["end_time"].get<double>(), cap);
  auto text = fmt::format("{} message(s) on {} between {} and {}.", r.messages.size(), r.topic, secs(r.start_time),
                          secs(r.end_time));
  if (r.truncated) {
    text += fmt::format(" The range holds {} messages; these are evenly strided across it. Raise max_messages for more.",
                        r.total_in_range);
  }
  return text_result(with_note(text, rb), store::to_json(r));
}

ToolResult search_messages(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  store::SearchCondition cond;
  cond.type = *store::parse_condition_type(a["condition_type"].get<std::string>());
  cond.field = opt_str(a, "field");
  cond.value = a["value"].get<std::string>();
  const auto limit = static_cast<std::size_t>(opt_int(a, "limit").value_or(store::kDefaultSearchLimit));
  const auto r = store::search_messages(*rb.bag, a["topic"].get<std::string>(), cond, limit,
                                        opt_num(a, "start_time"), opt_num(a, "end_time"));
  std::string text;
  if (cond.type == store::ConditionType::NearPosition) {
    text = r.total_matches
               ? fmt::format("{} of {} messages on {} lie within {} m of ({}, {}).", r.total_matches, r.scanned,
                             r.topic, r.radius, r.target_x, r.target_y)
               : fmt::format("No message on {} lies within {} m of ({}, {}).", r.topic, r.radius, r.target_x,
                             r.target_y);
    if (r.closest) {
      text += fmt::format(" Closest approach: {:.3f} m at position ({:.3f}, {:.3f}), timestamp {}.",
                          r.closest->distance, r.closest->x, r.closest->y, secs(ns_to_seconds(r.closest->time_ns)));
    }
  } else {
    text = fmt::format("{} of {} messages on {} match {} {}{}.", r.total_matches, r.scanned, r.topic,
                       cond.field ? *cond.field : std::string("<message>"), store::condition_name(cond.type),
                       fmt::format(" \"{}\"", cond.value));
    if (r.total_matches > r.matches.size()) text += fmt::format(" Showing the first {}.", r.matches.size());
    for (const auto& m : r.matches) {
      text += fmt::format("\n  {} (t+{:.3f} s){}", secs(ns_to_seconds(m.time_ns)), since_start(*rb.bag, m.time_ns),
                          m.field_value.is_null() ? "" : ": " + dump(m.field_value));
    }
  }
  return text_result(with_note(text, rb), store::to_json(r));
}

ToolResult filter_bag(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  filter::FilterSpec spec{.source = rb.path,
                          .destination = opt_str(a, "output_path").value_or(""),
                          .topics = {},
                          .start_time = opt_num(a, "start_time"),
                          .end_time = opt_num(a, "end_time"),
                          .max_rate_hz = opt_num(a, "max_rate_hz")};
  if (a.contains("topics")) spec.topics = a["topics"].get<std::set<std::string>>();
  const auto r = filter::filter_bag(spec);
  auto text = fmt::format("Filtered copy written to {}: kept {} of {} messages, {} bytes, {:.3f} s long.",
                          r.destination.string(), r.total_out, r.total_in, r.output_file_size, r.output_duration);
  for (const auto& t : r.topics) {
    if (t.output_count) text += fmt::format("\n  {}: {} of {}", t.topic, t.output_count, t.input_count);
  }
  return text_result(with_note(text, rb), filter::to_json(r));
}

ToolResult analyze_trajectory(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  const auto r = analysis::analyze_trajectory(
      *rb.bag, a["pose_topic"].get<std::string>(), opt_num(a, "start_time"), opt_num(a, "end_time"),
      opt_bool(a, "include_waypoints", false),
      static_cast<std::size_t>(opt_int(a, "waypoint_count").value_or(analysis::kDefaultWaypointCount)));
  const auto text = fmt::format(
      "Trajectory on {} over {:.3f} s ({} poses): distance {:.3f} m, displacement {:.3f} m, mean speed {:.3f} m/s, "
      "max speed {:.3f} m/s.\nX range: {:.3f} to {:.3f} meters (total span: {:.3f} meters)\n"
      "Y range: {:.3f} to {:.3f} meters (total span: {:.3f} meters)",
      r.topic, r.duration, r.message_count, r.total_distance, r.displacement, r.mean_speed, r.max_speed, r.x_min,
      r.x_max, r.x_span, r.y_min, r.y_max, r.y_span);
  return text_result(with_note(text, rb), analysis::to_json(r));
}

ToolResult analyze_lidar_scan(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  analysis::ScanParams params;
  params.obstacle_threshold = opt_num(a, "obstacle_threshold").value_or(params.obstacle_threshold);
  params.gap_threshold = opt_num(a, "gap_threshold").value_or(params.gap_threshold);
  const auto r = analysis::analyze_lidar_scan(*rb.bag, a["scan_topic"].get<std::string>(), a["time"].get<double>(),
                                              params);
  auto text = fmt::format("Scan on {} at {} (t+{:.3f} s): {} of {} beams valid", r.topic,
                          secs(ns_to_seconds(r.time_ns)), since_start(*rb.bag, r.time_ns), r.valid_count,
                          r.beam_count);
  if (r.stats) {
    text += fmt::format("; range min {:.3f} m, max {:.3f} m, mean {:.3f} m.", r.stats->min, r.stats->max, r.stats->mean);
  } else {
    text += ".";
  }
  text += fmt::format("\n{} obstacle(s) closer than {} m", r.obstacles.size(), params.obstacle_threshold);
  if (r.nearest) {
    text += fmt::format("; nearest return {:.3f} m at bearing {:.1f} deg", r.nearest->first,
                        r.nearest->second * 180.0 / M_PI);
  }
  text += fmt::format(".\n{} gap(s) beyond {} m or without returns.", r.gaps.size(), params.gap_threshold);
  return text_result(with_note(text, rb), analysis::to_json(r));
}

ToolResult analyze_logs(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  analysis::LogQuery q;
  if (auto level = opt_str(a, "level")) q.min_level = msg::parse_log_level(*level);
  q.node = opt_str(a, "node");
  q.start_time = opt_num(a, "start_time");
  q.end_time = opt_num(a, "end_time");
  if (auto n = opt_int(a, "limit")) q.limit = static_cast<std::size_t>(*n);
  const auto r = analysis::analyze_logs(*rb.bag, q);
  std::vector<std::string> counts;
  for (const auto level : {"DEBUG", "INFO", "WARN", "ERROR", "FATAL"}) {
    counts.push_back(fmt::format("{} {}", level, r.counts_by_level.at(level)));
  }
  auto text = fmt::format("{} log entries on {} ({}).", r.total, fmt::join(r.topics, ", "), fmt::join(counts, ", "));
  if (q.min_level || q.node) {
    text += fmt::format(" {} match level >= {}{}.", r.filtered_total,
                        q.min_level ? msg::log_level_name(static_cast<int>(*q.min_level)) : "DEBUG",
                        q.node ? fmt::format(" and node {}", *q.node) : "");
  }
  if (r.filtered_total > r.entries.size()) text += fmt::format(" Showing the first {}.", r.entries.size());
  for (const auto& e : r.entries) {
    text += fmt::format("\n  [{} t+{:.3f}] {} {}: {}", secs(ns_to_seconds(e.time_ns)), since_start(*rb.bag, e.time_ns),
                        msg::log_level_name(e.level), e.node, e.message);
  }
  return text_result(with_note(text, rb), analysis::to_json(r));
}

void render_tree(const analysis::TfTree& t, const std::string& frame, int depth, std::set<std::string>& seen,
                 std::string& out) {
  out += fmt::format("\n{}{}", std::string(static_cast<std::size_t>(2 + depth * 2), ' '), frame);
  if (!seen.insert(frame).second) return;
  for (const auto& e : t.edges) {
    if (e.parent == frame) render_tree(t, e.child, depth + 1, seen, out);
  }
}

ToolResult get_tf_tree(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  const auto t = analysis::get_tf_tree(*rb.bag, static_cast<std::size_t>(opt_int(a, "sample_limit").value_or(1000)));
  const auto n_static = std::count_if(t.edges.begin(), t.edges.end(), [](const auto& e) { return e.is_static; });
  auto text = fmt::format("TF tree from {}: {} frames, {} edges ({} static). Roots: {}.", fmt::join(t.topics, ", "),
                          t.frames.size(), t.edges.size(), n_static, fmt::join(t.roots, ", "));
  std::set<std::string> seen;
  for (const auto& root : t.roots) render_tree(t, root, 0, seen, text);
  if (!t.multi_parent.empty()) text += fmt::format("\nFrames with several parents: {}.", fmt::join(t.multi_parent, ", "));
  for (const auto& c : t.cycles) text += fmt::format("\nCycle among: {}.", fmt::join(c, ", "));
  return text_result(with_note(text, rb), analysis::to_json(t));
}

ToolResult get_image_at_time(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  const auto img = analysis::get_image_at_time(*rb.bag, a["image_topic"].get<std::string>(), a["time"].get<double>());
  const auto text = fmt::format("Image from {} at {} ({:+.3f} s from the requested time), {} bytes, {}.", img.topic,
                                secs(ns_to_seconds(img.time_ns)), img.delta, img.data.size(), img.mime_type);
  return image_result(with_note(text, rb), analysis::to_json(img), img.data, img.mime_type);
}

plot::Canvas canvas_from(const json& a) {
  plot::Canvas c;
  c.title = opt_str(a, "title").value_or("");
  c.x_label = opt_str(a, "x_label").value_or("");
  c.y_label = opt_str(a, "y_label").value_or("");
  c.width = static_cast<int>(opt_int(a, "width").value_or(plot::kDefaultWidth));
  c.height = static_cast<int>(opt_int(a, "height").value_or(plot::kDefaultHeight));
  return c;
}

std::string series_lines(const plot::PlotResult& r) {
  std::string out;
  for (const auto& s : r.series) {
    if (s.point_count) {
      out += fmt::format("\n  {}: {} points, min {:.4g}, max {:.4g}, mean {:.4g}", s.name, s.point_count, *s.min,
                         *s.max, *s.mean);
    } else {
      out += fmt::format("\n  {}: no points", s.name);
    }
  }
  for (const auto& w : r.warnings) out += "\nWarning: " + w;
  return out;
}

std::string window_text(const json& a) {
  const auto s = opt_num(a, "start_time"), e = opt_num(a, "end_time");
  if (s && e) return fmt::format("from {} to {}", secs(*s), secs(*e));
  if (s) return fmt::format("from {} to the end of the bag", secs(*s));
  if (e) return fmt::format("from the start of the bag to {}", secs(*e));
  return "over the whole bag";
}

ToolResult plot_timeseries(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  plot::TimeseriesRequest req;
  req.fields = a["fields"].get<std::vector<std::string>>();
  req.style = *plot::parse_style(opt_str(a, "style").value_or("line"));
  req.start_time = opt_num(a, "start_time");
  req.end_time = opt_num(a, "end_time");
  req.bins = static_cast<std::size_t>(opt_int(a, "bins").value_or(plot::kDefaultBins));
  req.canvas = canvas_from(a);
  const auto r = plot::plot_timeseries(*rb.bag, req);
  const auto text = fmt::format("I've created a {} showing {} {}.{}",
                                req.style == plot::Style::Histogram
                                    ? fmt::format("histogram ({} bins)", req.bins)
                                    : fmt::format("time series plot ({} style)", plot::style_name(req.style)),
                                fmt::join(req.fields, ", "), window_text(a), series_lines(r));
  return image_result(with_note(text, rb), plot::to_json(r), r.png, "image/png");
}

ToolResult plot_2d(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  plot::XyRequest req;
  req.pose_topic = opt_str(a, "pose_topic");
  req.x_field = opt_str(a, "x_field");
  req.y_field = opt_str(a, "y_field");
  if (!req.pose_topic && !req.x_field && !req.y_field) req.pose_topic = "/odom";
  req.start_time = opt_num(a, "start_time");
  req.end_time = opt_num(a, "end_time");
  req.canvas = canvas_from(a);
  const auto r = plot::plot_2d(*rb.bag, req);
  auto text = fmt::format("I've created a 2D trajectory plot of {} {}.",
                          req.pose_topic ? *req.pose_topic : *req.x_field + " vs " + *req.y_field, window_text(a));
  if (r.extents) {
    text += fmt::format("\nX range: {:.3f} to {:.3f} (span {:.3f}); Y range: {:.3f} to {:.3f} (span {:.3f}).",
                        r.extents->x_min, r.extents->x_max, r.extents->x_span, r.extents->y_min, r.extents->y_max,
                        r.extents->y_span);
  }
  text += series_lines(r);
  return image_result(with_note(text, rb), plot::to_json(r), r.png, "image/png");
}

ToolResult plot_lidar_scan(store::Session& s, const json& a) {
  const auto rb = s.resolve(opt_str(a, "bag_path"));
  plot::ScanRequest req;
  req.topic = a["scan_topic"].get<std::string>();
  req.time = a["time"].get<double>();
  req.canvas = canvas_from(a);
  const auto r = plot::plot_lidar_scan(*rb.bag, req);
  const auto& sc = *r.scan;
  auto text = fmt::format("I've created a polar plot of the {} scan at {} (t+{:.3f} s): {} of {} beams valid", sc.topic,
                          secs(ns_to_seconds(sc.time_ns)), since_start(*rb.bag, sc.time_ns), sc.valid_count,
                          sc.beam_count);
  text += sc.min_range ? fmt::format(", range {:.3f} to {:.3f} m.", *sc.min_range, *sc.max_range) : ".";
  for (const auto& w : r.warnings) text += "\nWarning: " + w;
  return image_result(with_note(text, rb), plot::to_json(r), r.png, "image/png");
}

// --- registry -----------------------------------------------------------------

struct Tool {
  ToolDescriptor descriptor;
  Handler handler;
};

std::vector<Tool> build_registry() {
  const auto time_window = [](json props) {
    props["start_time"] = prop("number", "Optional start unix timestamp in seconds");
    props["end_time"] = prop("number", "Optional end unix timestamp in seconds");
    return props;
  };
  std::vector<Tool> tools;
  tools.push_back({{"set_bag_path", "Set the path to a rosbag file or directory",
                    object_schema({{"path", prop("string", "Path to a .bag/.jsonl file or a directory of bags")}},
                                  {"path"})},
                   set_bag_path});
  tools.push_back({{"list_bags", "List all available rosbag files in the directory",
                    object_schema({{"path", prop("string", "Optional: directory to list (default: the current bag path)")}})},
                   list_bags});
  tools.push_back({{"bag_info", "Retrieve bag metadata: topics, counts, duration",
                    object_schema({{"bag_path", bag_path_prop()}})},
                   bag_info});
  tools.push_back(
      {{"get_message_at_time", "Get message from a topic at a specific timestamp",
        object_schema({{"topic", prop("string", "ROS topic name")},
                       {"time", prop("number", "Unix timestamp in seconds")},
                       {"tolerance", with_min(prop("number", "Maximum time difference in seconds (default: 1.0)"), 0)},
                       {"bag_path", bag_path_prop()}},
                      {"topic", "time"})},
       get_message_at_time});
  tools.push_back({{"get_messages_in_range", "Get all messages from a topic within a time range",
                    object_schema({{"topic", prop("string", "ROS topic name")},
                                   {"start_time", prop("number", "Start unix timestamp in seconds")},
                                   {"end_time", prop("number", "End unix timestamp in seconds")},
                                   {"max_messages", prop("integer", "Maximum messages to return (default: 100)")},
                                   {"bag_path", bag_path_prop()}},
                                  {"topic", "start_time", "end_time"})},
                   get_messages_in_range});
  tools.push_back(
      {{"search_messages", "Search messages using conditions (regex, equals, etc.)",
        object_schema(time_window({{"topic", prop("string", "ROS topic name")},
                                   {"condition_type", with_enum(prop("string", "Condition to test on each message"),
                                                                store::condition_names())},
                                   {"value", prop("string",
                                                  "Value to compare against; for near_position use \"x,y,radius\" "
                                                  "in meters")},
                                   {"field", prop("string",
                                                  "Optional dotted field path, e.g. linear.x (not used by "
                                                  "near_position; regex and contains default to the whole message)")},
                                   {"limit", with_min(prop("integer", "Maximum matches to return (default: 10)"), 1)},
                                   {"bag_path", bag_path_prop()}}),
                      {"topic", "condition_type", "value"})},
       search_messages});
  tools.push_back(
      {{"filter_bag", "Create a filtered copy of a bag file by topic, time, or rate",
        object_schema(time_window({{"output_path",
                                    prop("string", "Output .bag path (default: <source>_filtered.bag next to the source)")},
                                   {"topics", [] {
                                      auto p = prop("array", "Topics to keep (default: all)");
                                      p["items"] = {{"type", "string"}};
                                      p["minItems"] = 1;
                                      return p;
                                    }()},
                                   {"max_rate_hz", prop("number", "Optional per-topic rate cap in Hz")},
                                   {"bag_path", bag_path_prop()}}))},
       filter_bag});
  tools.push_back(
      {{"analyze_trajectory", "Compute trajectory metrics (distance, speed, waypoints)",
        object_schema(time_window({{"pose_topic", prop("string", "Odometry or pose topic, e.g. /odom")},
                                   {"include_waypoints", prop("boolean", "Include evenly spaced waypoints (default: false)")},
                                   {"waypoint_count",
                                    with_min(prop("integer", "Number of waypoints when included (default: 20)"), 2)},
                                   {"bag_path", bag_path_prop()}}),
                      {"pose_topic"})},
       analyze_trajectory});
  tools.push_back(
      {{"analyze_lidar_scan", "Analyze LiDAR scans for obstacles, gaps, statistics",
        object_schema({{"scan_topic", prop("string", "LaserScan topic, e.g. /scan")},
                       {"time", prop("number", "Unix timestamp in seconds; the nearest scan is used")},
                       {"obstacle_threshold", with_min(prop("number", "Obstacle distance in meters (default: 1.0)"), 0)},
                       {"gap_threshold", with_min(prop("number", "Gap distance in meters (default: 3.0)"), 0)},
                       {"bag_path", bag_path_prop()}},
                      {"scan_topic", "time"})},
       analyze_lidar_scan});
  tools.push_back(
      {{"analyze_logs", "Parse/analyze ROS logs; filter by level or node",
        object_schema(time_window({{"level", with_enum(prop("string", "Minimum severity to list"),
                                                       {"DEBUG", "INFO", "WARN", "ERROR", "FATAL"})},
                                   {"node", prop("string", "Only list entries from this node")},
                                   {"limit", with_min(prop("integer", "Maximum entries to list (default: 50)"), 0)},
                                   {"bag_path", bag_path_prop()}}))},
       analyze_logs});
  tools.push_back(
      {{"get_tf_tree", "Get TF tree of coordinate frame relationships",
        object_schema({{"sample_limit", with_min(prop("integer", "Messages read per TF topic (default: 1000)"), 1)},
                       {"bag_path", bag_path_prop()}})},
       get_tf_tree});
  tools.push_back({{"get_image_at_time", "Extract camera image at specific time (base64 JPEG)",
                    object_schema({{"image_topic", prop("string", "CompressedImage topic")},
                                   {"time", prop("number", "Unix timestamp in seconds")},
                                   {"bag_path", bag_path_prop()}},
                                  {"image_topic", "time"})},
                   get_image_at_time});
  tools.push_back(
      {{"plot_timeseries", "Plot time series data with multiple styles",
        object_schema(canvas_props(time_window(
                          {{"fields", [] {
                              auto p = prop("array", "Fields as topic.field paths, e.g. cmd_vel.linear.x");
                              p["items"] = {{"type", "string"}};
                              p["minItems"] = 1;
                              return p;
                            }()},
                           {"style", with_enum(prop("string", "Plot style (default: line)"), plot::style_names())},
                           {"bins", [] {
                              auto p = prop("integer", "Histogram bins (default: 30)");
                              p["minimum"] = 1;
                              p["maximum"] = plot::kMaxBins;
                              return p;
                            }()}})),
                      {"fields"})},
       plot_timeseries});
  tools.push_back(
      {{"plot_2d", "Create 2D trajectory plots (XY)",
        object_schema(canvas_props(time_window(
            {{"pose_topic", prop("string", "Odometry or pose topic (default: /odom when no fields are given)")},
             {"x_field", prop("string", "Alternative to pose_topic: x as topic.field")},
             {"y_field", prop("string", "Alternative to pose_topic: y as topic.field on the same topic")}})))},
       plot_2d});
  tools.push_back({{"plot_lidar_scan", "Visualize LiDAR scans as polar plots",
                    object_schema(canvas_props({{"scan_topic", prop("string", "LaserScan topic, e.g. /scan")},
                                                {"time", prop("number", "Unix timestamp in seconds")}}),
                                  {"scan_topic", "time"})},
                   plot_lidar_scan});
  return tools;
}

const std::vector<Tool>& registry() {
  static const auto tools = build_registry();
  return tools;
}

const Tool* find_tool(std::string_view name) {
  for (const auto& t : registry()) {
    if (t.descriptor.name == name) return &t;
  }
  return nullptr;
}

ToolResult error_result(std::string_view code, const std::string& message) {
  ToolResult r;
  r.is_error = true;
  r.content.push_back(text_block(fmt::format("Error ({}): {}", code, message),
                                 {{"error", {{"code", code}, {"message", message}}}}));
  return r;
}

}  // namespace

json ToolResult::to_json() const { return {{"content", content}, {"isError", is_error}}; }

const std::vector<ToolDescriptor>& tool_descriptors() {
  static const auto list = [] {
    std::vector<ToolDescriptor> out;
    for (const auto& t : registry()) out.push_back(t.descriptor);
    return out;
  }();
  return list;
}

ToolServer::ToolServer(std::optional<std::string> initial_bag_path) {
  if (initial_bag_path) session_.set_bag_path(*initial_bag_path);
}

bool ToolServer::has_tool(std::string_view name) const { return find_tool(name) != nullptr; }

ToolResult ToolServer::call(const std::string& name, const json& arguments) {
  const auto* tool = find_tool(name);
  if (!tool) return error_result("UnknownTool", fmt::format("unknown tool '{}'", name));
  if (!arguments.is_object()) {
    return error_result("InvalidArguments", fmt::format("arguments must be a JSON object, got {}", dump(arguments)));
  }
  // A null optional argument means "not given".
  json args = arguments;
  const auto& required = tool->descriptor.input_schema["required"];
  for (auto it = args.begin(); it != args.end();) {
    if (it->is_null() && std::find(required.begin(), required.end(), it.key()) == required.end()) {
      it = args.erase(it);
    } else {
      ++it;
    }
  }
  if (auto problem = validate(tool->descriptor.input_schema, args)) {
    return error_result("InvalidArguments", fmt::format("{} (tool {})", *problem, name));
  }
  std::lock_guard lock(mutex_);
  ++dispatched_;
  try {
    return tool->handler(session_, args);
  } catch (const Error& e) {
    return error_result(e.code_name(), e.what());
  } catch (const std::exception& e) {
    spdlog::error("tool {} failed: {}", name, e.what());
    return error_result("InternalError", e.what());
  }
}

}  // namespace bagpilot::mcp
