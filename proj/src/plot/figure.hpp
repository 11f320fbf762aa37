// SPDX-License-Identifier: Apache-2.0
// Minimal raster figure on top of OpenCV drawing primitives.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "bagpilot/plot/plot.hpp"

namespace bagpilot::plot::detail {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

/// Range over the finite values, padded so that data never sits on the frame.
/// Empty input gives [0, 1]; a single value gets a symmetric margin.
Range padded_range(std::span<const double> values, double pad_fraction = 0.05);

/// Round-number ticks covering [lo, hi], roughly `target` of them.
std::vector<double> nice_ticks(double lo, double hi, int target);
std::string tick_label(double value, double step);

cv::Scalar palette(std::size_t i);

enum class Align { Left, Center, Right };

class Figure {
 public:
  explicit Figure(const Canvas& canvas);

  cv::Mat& image() noexcept { return img_; }
  const cv::Rect& area() const noexcept { return area_; }
  double scale() const noexcept { return k_; }

  /// Fixes the data-to-pixel mapping. With equal_aspect the ranges are
  /// widened about their centres until one unit is the same length on both axes.
  void set_axes(Range x, Range y, bool equal_aspect = false);
  Range x_range() const noexcept { return x_; }
  Range y_range() const noexcept { return y_; }
  cv::Point2d to_px(double x, double y) const noexcept;

  /// Frame, grid, tick labels, axis labels and title.
  void draw_axes(const std::string& title, const std::string& x_label, const std::string& y_label);
  void draw_title(const std::string& title);

  void polyline(std::span<const double> xs, std::span<const double> ys, const cv::Scalar& color, int thickness = 2);
  void step(std::span<const double> xs, std::span<const double> ys, const cv::Scalar& color);
  void scatter(std::span<const double> xs, std::span<const double> ys, const cv::Scalar& color, double radius);
  void bar(double x0, double x1, double y, const cv::Scalar& color);
  void line_px(cv::Point2d a, cv::Point2d b, const cv::Scalar& color, int thickness = 1);
  void circle_px(cv::Point2d c, double radius, const cv::Scalar& color, int thickness);
  void text(std::string_view s, cv::Point2d at, double size, const cv::Scalar& color, Align align = Align::Left);
  void legend(const std::vector<std::pair<std::string, cv::Scalar>>& entries);
  void message(std::string_view s);

  std::vector<std::uint8_t> encode_png() const;

 private:
  void vertical_text(std::string_view s, cv::Point2d centre, double size);

  cv::Mat img_;
  double k_ = 1.0;
  cv::Rect area_;
  Range x_, y_;
};

}  // namespace bagpilot::plot::detail
