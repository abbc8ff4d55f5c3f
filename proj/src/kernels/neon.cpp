// SPDX-License-Identifier: Apache-2.0
#include "hintbox/kernels/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

#include <cassert>

namespace hintbox::kernels::neon {

void depth_to_gray(std::span<const float> depth, std::span<std::uint8_t> gray) {
  assert(gray.size() >= depth.size());
  const std::size_t n = depth.size();
  const float32x4_t zero = vdupq_n_f32(0.0f);
  const float32x4_t one = vdupq_n_f32(1.0f);
  const float32x4_t scale = vdupq_n_f32(255.0f);
  const float32x4_t half = vdupq_n_f32(0.5f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    float32x4_t a = vld1q_f32(depth.data() + i);
    float32x4_t b = vld1q_f32(depth.data() + i + 4);
    // Comparison-select keeps NaN -> 0 like the scalar path (vmaxq propagates NaN).
    a = vbslq_f32(vcgtq_f32(a, zero), a, zero);
    b = vbslq_f32(vcgtq_f32(b, zero), b, zero);
    a = vbslq_f32(vcltq_f32(a, one), a, one);
    b = vbslq_f32(vcltq_f32(b, one), b, one);
    a = vaddq_f32(vmulq_f32(a, scale), half);
    b = vaddq_f32(vmulq_f32(b, scale), half);
    const uint16x8_t w = vcombine_u16(vqmovn_u32(vcvtq_u32_f32(a)), vqmovn_u32(vcvtq_u32_f32(b)));
    vst1_u8(gray.data() + i, vqmovn_u16(w));
  }
  scalar::depth_to_gray(depth.subspan(i), gray.subspan(i));
}

void blend_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t n = rgb.size() - rgb.size() % 3;
  const uint16x8_t six = vdupq_n_u16(6);
  const uint16x8_t cr = vdupq_n_u16(static_cast<std::uint16_t>(4u * r + 5u));
  const uint16x8_t cg = vdupq_n_u16(static_cast<std::uint16_t>(4u * g + 5u));
  const uint16x8_t cb = vdupq_n_u16(static_cast<std::uint16_t>(4u * b + 5u));
  const auto blend = [&](uint8x8_t s, uint16x8_t c) {
    const uint16x8_t x = vmlaq_u16(c, vmovl_u8(s), six);
    // x < 2^12: x / 10 == (x * 52429) >> 19
    const uint32x4_t lo = vshrq_n_u32(vmull_n_u16(vget_low_u16(x), 52429), 19);
    const uint32x4_t hi = vshrq_n_u32(vmull_n_u16(vget_high_u16(x), 52429), 19);
    return vmovn_u16(vcombine_u16(vmovn_u32(lo), vmovn_u32(hi)));
  };
  std::size_t i = 0;
  for (; i + 24 <= n; i += 24) {
    uint8x8x3_t px = vld3_u8(rgb.data() + i);
    px.val[0] = blend(px.val[0], cr);
    px.val[1] = blend(px.val[1], cg);
    px.val[2] = blend(px.val[2], cb);
    vst3_u8(rgb.data() + i, px);
  }
  scalar::blend_rgb(rgb.subspan(i, n - i), r, g, b);
}

void fill_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const std::size_t n = rgb.size() - rgb.size() % 3;
  uint8x16x3_t px;
  px.val[0] = vdupq_n_u8(r);
  px.val[1] = vdupq_n_u8(g);
  px.val[2] = vdupq_n_u8(b);
  std::size_t i = 0;
  for (; i + 48 <= n; i += 48) vst3q_u8(rgb.data() + i, px);
  scalar::fill_rgb(rgb.subspan(i, n - i), r, g, b);
}

double sum_f32(std::span<const float> values) {
  const std::size_t n = values.size();
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t v = vld1q_f32(values.data() + i);
    acc0 = vaddq_f64(acc0, vcvt_f64_f32(vget_low_f32(v)));
    acc1 = vaddq_f64(acc1, vcvt_high_f64_f32(v));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += static_cast<double>(values[i]);
  return s;
}

}  // namespace hintbox::kernels::neon
#endif
