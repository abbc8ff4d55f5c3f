// SPDX-License-Identifier: Apache-2.0
#include "hintbox/kernels/kernels.hpp"

#include <cassert>

namespace hintbox::kernels::scalar {

void depth_to_gray(std::span<const float> depth, std::span<std::uint8_t> gray) {
  assert(gray.size() >= depth.size());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    float v = depth[i] > 0.0f ? depth[i] : 0.0f;  // NaN -> 0
    v = v < 1.0f ? v : 1.0f;
    v = v * 255.0f + 0.5f;
    gray[i] = static_cast<std::uint8_t>(static_cast<int>(v));
  }
}

void blend_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const unsigned c[3] = {4u * r + 5u, 4u * g + 5u, 4u * b + 5u};
  for (std::size_t i = 0; i + 2 < rgb.size(); i += 3) {
    for (std::size_t k = 0; k < 3; ++k) {
      rgb[i + k] = static_cast<std::uint8_t>((6u * rgb[i + k] + c[k]) / 10u);
    }
  }
}

void fill_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  for (std::size_t i = 0; i + 2 < rgb.size(); i += 3) {
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
}

double sum_f32(std::span<const float> values) {
  double s = 0.0;
  for (float v : values) s += static_cast<double>(v);
  return s;
}

}  // namespace hintbox::kernels::scalar
