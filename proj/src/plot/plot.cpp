// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/plot/plot.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "bagpilot/analysis/analysis.hpp"
#include "bagpilot/error.hpp"
#include "bagpilot/store/store.hpp"
#include "figure.hpp"

namespace bagpilot::plot {

using detail::Figure;
using detail::Range;

namespace {

struct Series {
  std::string name;
  std::vector<double> t;  // seconds since bag start
  std::vector<double> v;
};

std::string or_default(const std::string& given, std::string fallback) {
  return given.empty() ? std::move(fallback) : given;
}

SeriesSummary summarize(std::string name, std::span<const double> values) {
  SeriesSummary s{std::move(name), values.size(), {}, {}, {}};
  if (values.empty()) return s;
  double lo = values[0], hi = values[0], sum = 0.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  s.min = lo;
  s.max = hi;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

void check_window(const std::optional<double>& start, const std::optional<double>& end) {
  if (start && end && *start > *end) {
    throw Error(Errc::InvalidRange, fmt::format("start_time {:.6f} is after end_time {:.6f}", *start, *end));
  }
}

// Numeric value of `path` in `message`; throws FieldNotNumeric for anything
// that is not a scalar number.
double numeric_field(const msg::Value& message, const msg::FieldPath& path, std::string_view label) {
  const auto& v = msg::get_field(message, path);
  if (v.is_array() || v.is_record() || v.is<std::string>()) {
    throw Error(Errc::FieldNotNumeric,
                fmt::format("field '{}' is not a numeric scalar; plot a numeric leaf field instead", label));
  }
  return msg::to_real(v).value_or(NAN);
}

// One pass per topic; every path on that topic is sampled from each message.
// Paths are checked against the topic's first message even when the window is
// empty, so a typo is reported rather than plotted as an empty series.
std::vector<Series> read_series(const bag::BagHandle& bag, const std::vector<std::string>& labels,
                                const std::vector<FieldRef>& refs, const store::TimeWindow& window,
                                std::vector<std::string>& warnings) {
  const TimeNs origin = bag.start_time().value_or(0);
  std::vector<Series> out(refs.size());
  std::map<std::string, std::vector<std::size_t>> by_topic;
  std::vector<msg::FieldPath> paths;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    out[i].name = labels[i];
    by_topic[refs[i].topic].push_back(i);
    paths.push_back(msg::FieldPath::parse(refs[i].field));
  }
  std::vector<std::size_t> skipped(refs.size(), 0);
  for (const auto& [topic, idx] : by_topic) {
    const std::set<std::string, std::less<>> only{topic};
    bag.for_each({.topics = only, .start_ns = {}, .end_ns = {}}, [&](const bag::MessageView& m) {
      const auto v = store::decode_message(m);
      for (auto i : idx) numeric_field(v, paths[i], labels[i]);
      return false;
    });
    bag.for_each({.topics = only, .start_ns = window.start_ns, .end_ns = window.end_ns},
                 [&](const bag::MessageView& m) {
                   if (!window.contains(m.time_ns)) return true;
                   const auto v = store::decode_message(m);
                   const double t = static_cast<double>(m.time_ns - origin) * 1e-9;
                   for (auto i : idx) {
                     const double x = numeric_field(v, paths[i], labels[i]);
                     if (!std::isfinite(x)) {
                       ++skipped[i];
                       continue;
                     }
                     out[i].t.push_back(t);
                     out[i].v.push_back(x);
                   }
                   return true;
                 });
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (skipped[i]) warnings.push_back(fmt::format("{}: {} non-finite values omitted", out[i].name, skipped[i]));
    if (out[i].v.empty()) warnings.push_back(fmt::format("{}: no data points in the requested window", out[i].name));
  }
  return out;
}

Histogram bin_values(const std::vector<Series>& series, std::size_t bins) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.v) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (lo > hi) {
    lo = 0.0;
    hi = 1.0;
  } else if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges.push_back(i == bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins));
  }
  for (const auto& s : series) {
    std::vector<std::uint64_t> counts(bins, 0);
    for (double v : s.v) {
      const auto b = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
      ++counts[std::min(b, bins - 1)];
    }
    h.counts.push_back(std::move(counts));
  }
  return h;
}

}  // namespace

std::string_view style_name(Style s) noexcept {
  switch (s) {
    case Style::Line: return "line";
    case Style::Scatter: return "scatter";
    case Style::Step: return "step";
    case Style::Histogram: return "histogram";
  }
  return "line";
}

std::optional<Style> parse_style(std::string_view name) noexcept {
  for (auto s : {Style::Line, Style::Scatter, Style::Step, Style::Histogram}) {
    if (style_name(s) == name) return s;
  }
  return std::nullopt;
}

std::vector<std::string> style_names() { return {"line", "scatter", "step", "histogram"}; }

void validate_canvas(const Canvas& canvas) {
  for (auto [name, v] : {std::pair{"width", canvas.width}, std::pair{"height", canvas.height}}) {
    if (v < kMinSize || v > kMaxSize) {
      throw Error(Errc::InvalidArgument,
                  fmt::format("{} must be between {} and {} pixels, got {}", name, kMinSize, kMaxSize, v));
    }
  }
}

FieldRef resolve_field(const bag::BagHandle& bag, std::string_view qualified) {
  // Topic names may not contain '.', so the first dot separates topic and field.
  const auto dot = qualified.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == qualified.size()) {
    throw Error(Errc::NoSuchField,
                fmt::format("'{}' must be <topic>.<field>, e.g. cmd_vel.linear.x; topics are: {}", qualified,
                            fmt::join(bag.topics(), ", ")));
  }
  return {store::resolve_topic(bag, qualified.substr(0, dot)), std::string(qualified.substr(dot + 1))};
}

PlotResult plot_timeseries(const bag::BagHandle& bag, const TimeseriesRequest& request) {
  validate_canvas(request.canvas);
  check_window(request.start_time, request.end_time);
  if (request.fields.empty()) throw Error(Errc::InvalidArgument, "fields must name at least one topic field");
  if (request.bins == 0 || request.bins > kMaxBins) {
    throw Error(Errc::InvalidArgument, fmt::format("bins must be between 1 and {}, got {}", kMaxBins, request.bins));
  }
  std::vector<FieldRef> refs;
  for (const auto& f : request.fields) refs.push_back(resolve_field(bag, f));

  PlotResult r;
  r.width = request.canvas.width;
  r.height = request.canvas.height;
  const auto window = store::TimeWindow::from_seconds(request.start_time, request.end_time);
  const auto series = read_series(bag, request.fields, refs, window, r.warnings);
  for (const auto& s : series) r.series.push_back(summarize(s.name, s.v));

  const auto& c = request.canvas;
  Figure fig(c);
  std::vector<std::pair<std::string, cv::Scalar>> legend;
  for (std::size_t i = 0; i < series.size(); ++i) legend.emplace_back(series[i].name, detail::palette(i));
  const bool empty = std::all_of(series.begin(), series.end(), [](const Series& s) { return s.v.empty(); });

  if (request.style == Style::Histogram) {
    r.histogram = bin_values(series, request.bins);
    const auto& h = *r.histogram;
    std::uint64_t peak = 0;
    for (const auto& row : h.counts) peak = std::max(peak, *std::max_element(row.begin(), row.end()));
    const double span = h.edges.back() - h.edges.front();
    fig.set_axes({h.edges.front() - span * 0.02, h.edges.back() + span * 0.02},
                 {0.0, std::max<double>(1.0, static_cast<double>(peak) * 1.08)});
    fig.draw_axes(or_default(c.title, "Histogram"), or_default(c.x_label, series.size() == 1 ? series[0].name : "Value"),
                  or_default(c.y_label, "Count"));
    const double share = 1.0 / static_cast<double>(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
      for (std::size_t b = 0; b < request.bins; ++b) {
        if (!h.counts[i][b]) continue;
        const double w = h.edges[b + 1] - h.edges[b];
        const double x0 = h.edges[b] + w * share * static_cast<double>(i);
        fig.bar(x0, x0 + w * share, static_cast<double>(h.counts[i][b]), detail::palette(i));
      }
    }
  } else {
    std::vector<double> all_t, all_v;
    for (const auto& s : series) {
      all_t.insert(all_t.end(), s.t.begin(), s.t.end());
      all_v.insert(all_v.end(), s.v.begin(), s.v.end());
    }
    fig.set_axes(detail::padded_range(all_t, 0.0), detail::padded_range(all_v));
    fig.draw_axes(or_default(c.title, "Time series"), or_default(c.x_label, "Time since bag start (s)"),
                  or_default(c.y_label, series.size() == 1 ? series[0].name : "Value"));
    for (std::size_t i = 0; i < series.size(); ++i) {
      const auto color = detail::palette(i);
      switch (request.style) {
        case Style::Scatter: fig.scatter(series[i].t, series[i].v, color, 2.5 * fig.scale()); break;
        case Style::Step: fig.step(series[i].t, series[i].v, color); break;
        default: fig.polyline(series[i].t, series[i].v, color); break;
      }
    }
  }
  if (empty) fig.message("no data in the requested window");
  fig.legend(legend);
  r.png = fig.encode_png();
  return r;
}

PlotResult plot_2d(const bag::BagHandle& bag, const XyRequest& request) {
  validate_canvas(request.canvas);
  check_window(request.start_time, request.end_time);
  const bool by_fields = request.x_field || request.y_field;
  if (request.pose_topic && by_fields) {
    throw Error(Errc::InvalidArgument, "give either pose_topic or x_field and y_field, not both");
  }
  if (!request.pose_topic && !by_fields) {
    throw Error(Errc::InvalidArgument, "pose_topic is required unless x_field and y_field are given");
  }
  if (by_fields && (!request.x_field || !request.y_field)) {
    throw Error(Errc::InvalidArgument, fmt::format("{} is required together with {}", request.x_field ? "y_field" : "x_field",
                                                   request.x_field ? "x_field" : "y_field"));
  }

  PlotResult r;
  r.width = request.canvas.width;
  r.height = request.canvas.height;
  std::vector<double> xs, ys;
  std::string name, x_name = "x (m)", y_name = "y (m)";
  if (request.pose_topic) {
    name = store::resolve_topic(bag, *request.pose_topic);
    for (const auto& p : analysis::load_poses(bag, name, request.start_time, request.end_time)) {
      xs.push_back(p.pose.x);
      ys.push_back(p.pose.y);
    }
    r.series = {summarize("x", xs), summarize("y", ys)};
  } else {
    const auto fx = resolve_field(bag, *request.x_field), fy = resolve_field(bag, *request.y_field);
    if (fx.topic != fy.topic) {
      throw Error(Errc::InvalidArgument, fmt::format("x_field and y_field must be on the same topic, got {} and {}",
                                                     fx.topic, fy.topic));
    }
    const auto window = store::TimeWindow::from_seconds(request.start_time, request.end_time);
    const auto series = read_series(bag, {*request.x_field, *request.y_field}, {fx, fy}, window, r.warnings);
    // Both fields come from the same messages, so samples pair up unless one
    // axis dropped a non-finite value.
    if (series[0].t == series[1].t) {
      xs = series[0].v;
      ys = series[1].v;
    } else {
      throw Error(Errc::InvalidArgument, "x_field and y_field contain non-finite values at different messages");
    }
    name = fx.topic;
    x_name = *request.x_field;
    y_name = *request.y_field;
    r.series = {summarize(x_name, xs), summarize(y_name, ys)};
  }
  if (xs.empty()) {
    if (r.warnings.empty()) r.warnings.push_back(fmt::format("{}: no poses in the requested window", name));
  } else {
    Extents e;
    e.x_min = *r.series[0].min;
    e.x_max = *r.series[0].max;
    e.y_min = *r.series[1].min;
    e.y_max = *r.series[1].max;
    e.x_span = e.x_max - e.x_min;
    e.y_span = e.y_max - e.y_min;
    r.extents = e;
  }

  const auto& c = request.canvas;
  Figure fig(c);
  const auto xr = detail::padded_range(xs), yr = detail::padded_range(ys);
  fig.set_axes(xr, yr, true);
  fig.draw_axes(or_default(c.title, fmt::format("Trajectory ({})", name)), or_default(c.x_label, x_name),
                or_default(c.y_label, y_name));
  const auto path_color = detail::palette(0), start_color = detail::palette(2), end_color = detail::palette(3);
  std::vector<std::pair<std::string, cv::Scalar>> legend{{"path", path_color}};
  if (!xs.empty()) {
    fig.polyline(xs, ys, path_color);
    const double k = fig.scale();
    fig.circle_px(fig.to_px(xs.front(), ys.front()), 6 * k, start_color, cv::FILLED);
    legend.emplace_back("start", start_color);
    if (xs.size() > 1) {
      const auto e = fig.to_px(xs.back(), ys.back());
      const double s = 5 * k;
      cv::rectangle(fig.image(), cv::Point(static_cast<int>(e.x - s), static_cast<int>(e.y - s)),
                    cv::Point(static_cast<int>(e.x + s), static_cast<int>(e.y + s)), end_color, cv::FILLED);
      legend.emplace_back("end", end_color);
    }
  } else {
    fig.message("no poses in the requested window");
  }
  fig.legend(legend);
  r.png = fig.encode_png();
  return r;
}

PlotResult plot_lidar_scan(const bag::BagHandle& bag, const ScanRequest& request) {
  validate_canvas(request.canvas);
  const auto topic = store::resolve_topic(bag, request.topic);
  const auto scan = analysis::scan_at_time(bag, topic, request.time, request.tolerance);
  const auto report = analysis::analyze_scan(scan);

  PlotResult r;
  r.width = request.canvas.width;
  r.height = request.canvas.height;
  ScanSummary s;
  s.topic = topic;
  s.time_ns = scan.time_ns;
  s.beam_count = report.beam_count;
  s.valid_count = report.valid_count;
  s.range_max = scan.range_max;
  SeriesSummary series{topic, report.valid_count, {}, {}, {}};
  if (report.stats) {
    s.min_range = series.min = report.stats->min;
    s.max_range = series.max = report.stats->max;
    series.mean = report.stats->mean;
  } else {
    r.warnings.push_back(fmt::format("{}: scan has no valid beams", topic));
  }
  r.scan = s;
  r.series.push_back(series);

  const auto& c = request.canvas;
  Figure fig(c);
  const double k = fig.scale();
  const double t_rel = static_cast<double>(scan.time_ns - bag.start_time().value_or(scan.time_ns)) * 1e-9;
  fig.draw_title(or_default(c.title, fmt::format("LiDAR scan {} at t = {:.2f} s", topic, t_rel)));

  double r_axis = scan.range_max;
  if (!(std::isfinite(r_axis) && r_axis > 0)) r_axis = report.stats ? report.stats->max : 1.0;
  if (!(r_axis > 0)) r_axis = 1.0;
  const auto& a = fig.area();
  const cv::Point2d centre(a.x + a.width / 2.0, a.y + a.height / 2.0);
  const double radius = std::min(a.width, a.height) / 2.0 - 14 * k;
  const double px_per_m = radius / r_axis;
  // Bearing 0 (the sensor's +x) points up; positive bearings turn left.
  const auto polar = [&](double range, double bearing) {
    return cv::Point2d(centre.x - range * px_per_m * std::sin(bearing), centre.y - range * px_per_m * std::cos(bearing));
  };
  const cv::Scalar grid(215, 215, 215), label(90, 90, 90);
  const auto rings = detail::nice_ticks(0.0, r_axis, 5);
  const double ring_step = rings.size() > 1 ? rings[1] - rings[0] : r_axis;
  for (double ring : rings) {
    if (ring <= 0) continue;
    fig.circle_px(centre, ring * px_per_m, grid, 1);
    fig.text(detail::tick_label(ring, ring_step) + " m", polar(ring, -0.35) + cv::Point2d(3 * k, 0), 0.35 * k, label);
  }
  fig.circle_px(centre, radius, label, 1);
  for (int deg = 0; deg < 360; deg += 30) {
    const double b = deg * M_PI / 180.0;
    fig.line_px(centre, polar(r_axis, b), grid);
    const int shown = deg > 180 ? deg - 360 : deg;
    fig.text(fmt::format("{}", shown), polar(r_axis, b) + cv::Point2d(-2 * k, 4 * k) +
                                           cv::Point2d(-std::sin(b) * 10 * k, -std::cos(b) * 10 * k),
             0.35 * k, label, detail::Align::Center);
  }
  const auto beam_color = detail::palette(0);
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    if (scan.valid(i)) fig.circle_px(polar(scan.ranges[i], scan.bearing(i)), 1.6 * k, beam_color, cv::FILLED);
  }
  fig.circle_px(centre, 4 * k, cv::Scalar(0, 0, 0), cv::FILLED);
  std::vector<std::pair<std::string, cv::Scalar>> legend{{"valid beams", beam_color}};
  if (report.nearest) {
    const auto nearest_color = detail::palette(3);
    fig.circle_px(polar(report.nearest->first, report.nearest->second), 5 * k, nearest_color, 2);
    legend.emplace_back(fmt::format("nearest {:.2f} m", report.nearest->first), nearest_color);
  } else {
    fig.message("no valid beams");
  }
  fig.legend(legend);
  r.png = fig.encode_png();
  return r;
}

nlohmann::json to_json(const PlotResult& r) {
  auto series = nlohmann::json::array();
  for (const auto& s : r.series) {
    nlohmann::json j{{"name", s.name}, {"point_count", s.point_count}};
    j["min"] = s.min ? nlohmann::json(*s.min) : nlohmann::json();
    j["max"] = s.max ? nlohmann::json(*s.max) : nlohmann::json();
    j["mean"] = s.mean ? nlohmann::json(*s.mean) : nlohmann::json();
    series.push_back(std::move(j));
  }
  nlohmann::json j{{"mime_type", "image/png"},
                   {"width", r.width},
                   {"height", r.height},
                   {"size_bytes", r.png.size()},
                   {"series", series},
                   {"warnings", r.warnings}};
  if (r.histogram) j["histogram"] = {{"edges", r.histogram->edges}, {"counts", r.histogram->counts}};
  if (r.extents) {
    const auto& e = *r.extents;
    j["extents"] = {{"x_min", e.x_min}, {"x_max", e.x_max}, {"x_span", e.x_span},
                    {"y_min", e.y_min}, {"y_max", e.y_max}, {"y_span", e.y_span}};
  }
  if (r.scan) {
    const auto& s = *r.scan;
    j["scan"] = {{"topic", s.topic},
                 {"time", ns_to_seconds(s.time_ns)},
                 {"beam_count", s.beam_count},
                 {"valid_count", s.valid_count},
                 {"min_range", s.min_range ? nlohmann::json(*s.min_range) : nlohmann::json()},
                 {"max_range", s.max_range ? nlohmann::json(*s.max_range) : nlohmann::json()},
                 {"range_max", s.range_max}};
  }
  return j;
}

}  // namespace bagpilot::plot
