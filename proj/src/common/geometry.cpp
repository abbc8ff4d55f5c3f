// SPDX-License-Identifier: Apache-2.0
#include "hintbox/common/geometry.hpp"

#include <cmath>

namespace hintbox {

namespace {
int edge(double v, int limit) {
  const double e = std::ceil(v - 0.5);
  if (!(e > 0)) return 0;
  if (e > limit) return limit;
  return static_cast<int>(e);
}
}  // namespace

PixelRange pixel_range(const Box& box, int width, int height) noexcept {
  return {edge(box.x1, width), edge(box.y1, height), edge(box.x2, width), edge(box.y2, height)};
}

}  // namespace hintbox
