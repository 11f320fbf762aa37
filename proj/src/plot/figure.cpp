// SPDX-License-Identifier: Apache-2.0
#include "figure.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "bagpilot/error.hpp"

namespace bagpilot::plot::detail {

namespace {

constexpr int kShift = 4;  // sub-pixel bits for anti-aliased primitives
constexpr double kSub = 1 << kShift;
constexpr int kFont = cv::FONT_HERSHEY_SIMPLEX;

const cv::Scalar kWhite(255, 255, 255);
const cv::Scalar kBlack(0, 0, 0);
const cv::Scalar kGrid(225, 225, 225);
const cv::Scalar kFrame(90, 90, 90);

cv::Point sub(cv::Point2d p) { return {static_cast<int>(std::lround(p.x * kSub)), static_cast<int>(std::lround(p.y * kSub))}; }

int text_thickness(double size) { return size >= 0.9 ? 2 : 1; }

}  // namespace

Range padded_range(std::span<const double> values, double pad_fraction) {
  double lo = INFINITY, hi = -INFINITY;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > hi) return {0.0, 1.0};
  if (lo == hi) {
    const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - d, hi + d};
  }
  const double pad = (hi - lo) * pad_fraction;
  return {lo - pad, hi + pad};
}

std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) return {};
  const double raw = (hi - lo) / std::max(target, 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = (norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0) * mag;
  std::vector<double> out;
  for (double i = std::ceil(lo / step); i * step <= hi + step * 1e-9; i += 1.0) {
    out.push_back(std::abs(i) < 0.5 ? 0.0 : i * step);
  }
  return out;
}

std::string tick_label(double value, double step) {
  const int decimals = step > 0 ? std::clamp(static_cast<int>(-std::floor(std::log10(step) + 1e-9)), 0, 9) : 0;
  auto s = fmt::format("{:.{}f}", value, decimals);
  if (s.find_first_not_of("-0.") == std::string::npos) s = decimals ? fmt::format("{:.{}f}", 0.0, decimals) : "0";
  return s;
}

cv::Scalar palette(std::size_t i) {
  // Tableau 10, BGR.
  static const cv::Scalar colors[] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44},  {40, 39, 214},
                                      {189, 103, 148}, {75, 86, 140},  {194, 119, 227}, {127, 127, 127},
                                      {34, 189, 188},  {207, 190, 23}};
  return colors[i % std::size(colors)];
}

Figure::Figure(const Canvas& canvas) : img_(canvas.height, canvas.width, CV_8UC3, kWhite) {
  k_ = std::clamp(std::min(canvas.width, canvas.height) / 600.0, 0.4, 2.5);
  const int left = static_cast<int>(72 * k_), right = static_cast<int>(20 * k_);
  const int top = static_cast<int>(42 * k_), bottom = static_cast<int>(56 * k_);
  area_ = cv::Rect(left, top, std::max(canvas.width - left - right, 1), std::max(canvas.height - top - bottom, 1));
}

void Figure::set_axes(Range x, Range y, bool equal_aspect) {
  if (equal_aspect) {
    const double sx = area_.width / (x.hi - x.lo), sy = area_.height / (y.hi - y.lo);
    const double s = std::min(sx, sy);
    const double cx = (x.lo + x.hi) / 2, cy = (y.lo + y.hi) / 2;
    const double hw = area_.width / s / 2, hh = area_.height / s / 2;
    x = {cx - hw, cx + hw};
    y = {cy - hh, cy + hh};
  }
  x_ = x;
  y_ = y;
}

cv::Point2d Figure::to_px(double x, double y) const noexcept {
  return {area_.x + (x - x_.lo) / (x_.hi - x_.lo) * area_.width,
          area_.y + area_.height - (y - y_.lo) / (y_.hi - y_.lo) * area_.height};
}

void Figure::draw_title(const std::string& title) {
  if (!title.empty()) text(title, {img_.cols / 2.0, 28 * k_}, 0.6 * k_, kBlack, Align::Center);
}

void Figure::draw_axes(const std::string& title, const std::string& x_label, const std::string& y_label) {
  const double fs = 0.4 * k_;
  const auto xt = nice_ticks(x_.lo, x_.hi, std::max(2, area_.width / static_cast<int>(90 * k_)));
  const auto yt = nice_ticks(y_.lo, y_.hi, std::max(2, area_.height / static_cast<int>(60 * k_)));
  const double xstep = xt.size() > 1 ? xt[1] - xt[0] : 0.0;
  const double ystep = yt.size() > 1 ? yt[1] - yt[0] : 0.0;
  const double bottom = area_.y + area_.height, left = area_.x;
  for (double t : xt) {
    const double px = to_px(t, 0).x;
    line_px({px, static_cast<double>(area_.y)}, {px, bottom}, kGrid);
    line_px({px, bottom}, {px, bottom + 5 * k_}, kFrame);
    text(tick_label(t, xstep), {px, bottom + 20 * k_}, fs, kBlack, Align::Center);
  }
  for (double t : yt) {
    const double py = to_px(0, t).y;
    line_px({left, py}, {left + area_.width, py}, kGrid);
    line_px({left - 5 * k_, py}, {left, py}, kFrame);
    text(tick_label(t, ystep), {left - 8 * k_, py + 5 * k_}, fs, kBlack, Align::Right);
  }
  cv::rectangle(img_, area_, kFrame, 1);
  if (!x_label.empty()) text(x_label, {left + area_.width / 2.0, img_.rows - 10 * k_}, 0.45 * k_, kBlack, Align::Center);
  if (!y_label.empty()) vertical_text(y_label, {14 * k_, area_.y + area_.height / 2.0}, 0.45 * k_);
  draw_title(title);
}

void Figure::polyline(std::span<const double> xs, std::span<const double> ys, const cv::Scalar& color,
                      int thickness) {
  if (xs.empty()) return;
  std::vector<cv::Point> pts;
  pts.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back(sub(to_px(xs[i], ys[i])));
  if (pts.size() == 1) {
    cv::circle(img_, pts[0], static_cast<int>(2 * k_ * kSub), color, cv::FILLED, cv::LINE_AA, kShift);
    return;
  }
  cv::polylines(img_, pts, false, color, std::max(1, static_cast<int>(std::lround(thickness * k_ * 0.75))),
                cv::LINE_AA, kShift);
}

void Figure::step(std::span<const double> xs, std::span<const double> ys, const cv::Scalar& color) {
  std::vector<double> sx, sy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) {
      sx.push_back(xs[i]);
      sy.push_back(ys[i - 1]);
    }
    sx.push_back(xs[i]);
    sy.push_back(ys[i]);
  }
  polyline(sx, sy, color);
}

void Figure::scatter(std::span<const double> xs, std::span<const double> ys, const cv::Scalar& color, double radius) {
  for (std::size_t i = 0; i < xs.size(); ++i) circle_px(to_px(xs[i], ys[i]), radius, color, cv::FILLED);
}

void Figure::bar(double x0, double x1, double y, const cv::Scalar& color) {
  const auto a = to_px(x0, y), b = to_px(x1, std::max(y_.lo, 0.0));
  const cv::Rect r(cv::Point(static_cast<int>(std::lround(a.x)), static_cast<int>(std::lround(a.y))),
                   cv::Point(static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y))));
  cv::rectangle(img_, r, color, cv::FILLED);
  cv::rectangle(img_, r, kFrame, 1);
}

void Figure::line_px(cv::Point2d a, cv::Point2d b, const cv::Scalar& color, int thickness) {
  cv::line(img_, sub(a), sub(b), color, thickness, cv::LINE_AA, kShift);
}

void Figure::circle_px(cv::Point2d c, double radius, const cv::Scalar& color, int thickness) {
  cv::circle(img_, sub(c), static_cast<int>(std::lround(radius * kSub)), color, thickness, cv::LINE_AA, kShift);
}

void Figure::text(std::string_view s, cv::Point2d at, double size, const cv::Scalar& color, Align align) {
  const std::string str(s);
  int baseline = 0;
  const auto sz = cv::getTextSize(str, kFont, size, text_thickness(size), &baseline);
  double x = at.x;
  if (align == Align::Center) x -= sz.width / 2.0;
  if (align == Align::Right) x -= sz.width;
  cv::putText(img_, str, cv::Point(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(at.y))), kFont,
              size, color, text_thickness(size), cv::LINE_AA);
}

void Figure::vertical_text(std::string_view s, cv::Point2d centre, double size) {
  const std::string str(s);
  int baseline = 0;
  const auto sz = cv::getTextSize(str, kFont, size, text_thickness(size), &baseline);
  cv::Mat patch(sz.height + baseline + 4, sz.width + 4, CV_8UC3, kWhite);
  cv::putText(patch, str, cv::Point(2, sz.height + 2), kFont, size, kBlack, text_thickness(size), cv::LINE_AA);
  cv::Mat rotated;
  cv::rotate(patch, rotated, cv::ROTATE_90_COUNTERCLOCKWISE);
  cv::Rect dst(static_cast<int>(centre.x - rotated.cols / 2.0), static_cast<int>(centre.y - rotated.rows / 2.0),
               rotated.cols, rotated.rows);
  const cv::Rect clipped = dst & cv::Rect(0, 0, img_.cols, img_.rows);
  if (clipped.empty()) return;
  rotated(cv::Rect(clipped.x - dst.x, clipped.y - dst.y, clipped.width, clipped.height)).copyTo(img_(clipped));
}

void Figure::legend(const std::vector<std::pair<std::string, cv::Scalar>>& entries) {
  if (entries.empty()) return;
  const double fs = 0.4 * k_;
  int widest = 0, baseline = 0;
  for (const auto& [name, color] : entries) {
    widest = std::max(widest, cv::getTextSize(name, kFont, fs, text_thickness(fs), &baseline).width);
  }
  const double row = 18 * k_, swatch = 22 * k_, pad = 6 * k_;
  const double w = pad * 3 + swatch + widest, h = pad * 2 + row * static_cast<double>(entries.size());
  const double x0 = area_.x + area_.width - w - 8 * k_, y0 = area_.y + 8 * k_;
  const cv::Rect box(static_cast<int>(x0), static_cast<int>(y0), static_cast<int>(w), static_cast<int>(h));
  cv::rectangle(img_, box, kWhite, cv::FILLED);
  cv::rectangle(img_, box, kFrame, 1);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double cy = y0 + pad + row * (static_cast<double>(i) + 0.5);
    line_px({x0 + pad, cy}, {x0 + pad + swatch, cy}, entries[i].second, std::max(1, static_cast<int>(2 * k_)));
    text(entries[i].first, {x0 + pad * 2 + swatch, cy + 5 * k_}, fs, kBlack);
  }
}

void Figure::message(std::string_view s) {
  text(s, {area_.x + area_.width / 2.0, area_.y + area_.height / 2.0}, 0.5 * k_, kFrame, Align::Center);
}

std::vector<std::uint8_t> Figure::encode_png() const {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", img_, out, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw Error(Errc::IoFailure, "PNG encoding failed");
  }
  return out;
}

}  // namespace bagpilot::plot::detail
