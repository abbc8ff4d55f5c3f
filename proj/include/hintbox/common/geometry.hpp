// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>

namespace hintbox {

// Axis-aligned pixel box [x1, y1, x2, y2]; x2/y2 are exclusive edges, so a
// box covers width() * height() pixels when its corners are integral.
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  [[nodiscard]] double width() const noexcept { return x2 - x1; }
  [[nodiscard]] double height() const noexcept { return y2 - y1; }
  [[nodiscard]] double area() const noexcept { return std::max(0.0, width()) * std::max(0.0, height()); }
  [[nodiscard]] double cx() const noexcept { return (x1 + x2) / 2.0; }
  [[nodiscard]] double cy() const noexcept { return (y1 + y2) / 2.0; }
  [[nodiscard]] bool valid() const noexcept { return x1 < x2 && y1 < y2; }
  [[nodiscard]] bool inside(double w, double h) const noexcept {
    return x1 >= 0 && y1 >= 0 && x2 <= w && y2 <= h;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

inline double intersection_area(const Box& a, const Box& b) noexcept {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0 && h > 0) ? w * h : 0.0;
}

inline double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

struct Vec3 {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

}  // namespace hintbox

namespace hintbox {

// Pixels whose centers fall inside a box, clipped to a width x height image:
// columns [x0, x1), rows [y0, y1).
struct PixelRange {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  [[nodiscard]] bool empty() const noexcept { return x0 >= x1 || y0 >= y1; }
  [[nodiscard]] long long count() const noexcept {
    return empty() ? 0 : static_cast<long long>(x1 - x0) * static_cast<long long>(y1 - y0);
  }
};

PixelRange pixel_range(const Box& box, int width, int height) noexcept;

}  // namespace hintbox
