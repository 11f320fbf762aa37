// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"

namespace bagpilot::analysis {

namespace {

double real_field(const msg::Value& v, std::string_view name) {
  const auto* f = v.find(name);
  const auto x = f ? msg::to_real(*f) : std::nullopt;
  if (!x) throw Error(Errc::ShapeMismatch, fmt::format("LaserScan field '{}' missing or not numeric", name));
  return *x;
}

}  // namespace

bool ScanData::valid(std::size_t beam) const noexcept {
  const double r = ranges[beam];
  return std::isfinite(r) && r >= range_min && r <= range_max;
}

ScanData scan_from_value(const msg::Value& v, TimeNs time_ns) {
  ScanData s;
  s.time_ns = time_ns;
  s.angle_min = real_field(v, "angle_min");
  s.angle_max = real_field(v, "angle_max");
  s.angle_increment = real_field(v, "angle_increment");
  s.range_min = real_field(v, "range_min");
  s.range_max = real_field(v, "range_max");
  if (const auto* h = v.find("header"); h && h->find("frame_id") && h->find("frame_id")->is<std::string>()) {
    s.frame_id = h->find("frame_id")->as<std::string>();
  }
  const auto* ranges = v.find("ranges");
  if (!ranges || !ranges->is_array()) throw Error(Errc::ShapeMismatch, "LaserScan field 'ranges' missing");
  for (const auto& r : ranges->as<msg::Array>()) {
    s.ranges.push_back(r.is<float>() ? r.as<float>() : static_cast<float>(msg::to_real(r).value_or(NAN)));
  }
  return s;
}

ScanReport analyze_scan(const ScanData& scan, const ScanParams& params) {
  ScanReport r;
  r.time_ns = scan.time_ns;
  r.params = params;
  r.angle_min = scan.angle_min;
  r.angle_max = scan.angle_max;
  r.angle_increment = scan.angle_increment;
  r.range_max = scan.range_max;
  const std::size_t n = scan.ranges.size();
  r.beam_count = n;

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!scan.valid(i)) continue;
    const double v = scan.ranges[i];
    if (!r.stats) {
      r.stats = RangeStats{v, v, 0.0};
      r.nearest = std::make_pair(v, scan.bearing(i));
    }
    if (v < r.stats->min) r.nearest = std::make_pair(v, scan.bearing(i));
    r.stats->min = std::min(r.stats->min, v);
    r.stats->max = std::max(r.stats->max, v);
    sum += v;
    ++r.valid_count;
  }
  if (r.stats) r.stats->mean = sum / static_cast<double>(r.valid_count);

  // Obstacles: runs of close beams; runs split only by a short stretch of
  // invalid beams are merged.
  std::optional<ScanObstacle> open;
  std::size_t invalid_run = 0;
  const auto close_open = [&] {
    if (open) r.obstacles.push_back(*open);
    open.reset();
  };
  for (std::size_t i = 0; i < n; ++i) {
    const bool valid = scan.valid(i);
    const bool close = valid && scan.ranges[i] < params.obstacle_threshold;
    if (close) {
      const double v = scan.ranges[i];
      if (open && invalid_run < params.bridge_beams) {
        open->last_beam = i;
        if (v < open->min_range) {
          open->min_range = v;
          open->bearing_of_min = scan.bearing(i);
        }
      } else {
        close_open();
        open = ScanObstacle{i, i, 0, 0, v, scan.bearing(i)};
      }
      invalid_run = 0;
    } else if (!valid && open) {
      ++invalid_run;
      if (invalid_run >= params.bridge_beams) close_open();
    } else {
      close_open();
    }
  }
  close_open();
  for (auto& o : r.obstacles) {
    o.start_angle = scan.bearing(o.first_beam);
    o.end_angle = scan.bearing(o.last_beam);
  }

  std::optional<std::size_t> gap_start;
  for (std::size_t i = 0; i <= n; ++i) {
    const bool in_gap = i < n && (!scan.valid(i) || scan.ranges[i] > params.gap_threshold);
    if (in_gap && !gap_start) gap_start = i;
    if (!in_gap && gap_start) {
      const std::size_t last = i - 1;
      r.gaps.push_back({*gap_start, last, scan.bearing(*gap_start), scan.bearing(last),
                        static_cast<double>(i - *gap_start) * scan.angle_increment});
      gap_start.reset();
    }
  }
  return r;
}

ScanData scan_at_time(const bag::BagHandle& bag, std::string_view topic_name, double time, double tolerance) {
  const auto topic = store::resolve_topic(bag, topic_name);
  for (const auto* c : bag.connections_for_topic(topic)) {
    if (c->type_name != msg::kLaserScan) {
      throw Error(Errc::ShapeMismatch, fmt::format("'{}' carries {}, not {}", topic, c->type_name, msg::kLaserScan));
    }
  }
  try {
    const auto m = store::message_at_time(bag, topic, time, tolerance);
    return scan_from_value(m.message.value, m.message.time_ns);
  } catch (const Error& e) {
    if (e.code() != Errc::NoMessageWithinTolerance) throw;
    throw Error(Errc::NoScanNearTime, e.what());
  }
}

ScanReport analyze_lidar_scan(const bag::BagHandle& bag, std::string_view topic, double time,
                              const ScanParams& params) {
  if (!(params.obstacle_threshold > 0) || !(params.gap_threshold > 0)) {
    throw Error(Errc::InvalidArgument, "obstacle_threshold and gap_threshold must be positive");
  }
  auto r = analyze_scan(scan_at_time(bag, topic, time), params);
  r.topic = store::resolve_topic(bag, topic);
  r.requested_time = time;
  return r;
}

nlohmann::json to_json(const ScanReport& r) {
  nlohmann::json j = {{"scan_topic", r.topic},
                      {"time", ns_to_seconds(r.time_ns)},
                      {"obstacle_threshold", r.params.obstacle_threshold},
                      {"gap_threshold", r.params.gap_threshold},
                      {"angle_min", r.angle_min},
                      {"angle_max", r.angle_max},
                      {"angle_increment", r.angle_increment},
                      {"range_max", r.range_max},
                      {"beam_count", r.beam_count},
                      {"valid_count", r.valid_count}};
  if (r.requested_time) j["requested_time"] = *r.requested_time;
  if (r.stats) {
    j["range_min_seen"] = r.stats->min;
    j["range_max_seen"] = r.stats->max;
    j["range_mean"] = r.stats->mean;
  } else {
    j["range_min_seen"] = j["range_max_seen"] = j["range_mean"] = nullptr;
  }
  if (r.nearest) {
    j["nearest"] = {{"range", r.nearest->first}, {"bearing", r.nearest->second}};
  } else {
    j["nearest"] = nullptr;
  }
  auto obstacles = nlohmann::json::array();
  for (const auto& o : r.obstacles) {
    obstacles.push_back({{"start_angle", o.start_angle},
                         {"end_angle", o.end_angle},
                         {"min_range", o.min_range},
                         {"bearing_of_min", o.bearing_of_min},
                         {"beams", o.last_beam - o.first_beam + 1}});
  }
  auto gaps = nlohmann::json::array();
  for (const auto& g : r.gaps) {
    gaps.push_back({{"start_angle", g.start_angle},
                    {"end_angle", g.end_angle},
                    {"angular_width", g.angular_width},
                    {"beams", g.last_beam - g.first_beam + 1}});
  }
  j["obstacle_count"] = r.obstacles.size();
  j["obstacles"] = std::move(obstacles);
  j["gaps"] = std::move(gaps);
  return j;
}

}  // namespace bagpilot::analysis
