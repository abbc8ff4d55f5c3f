// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2; only reached after a runtime CPU check.
#include "hintbox/kernels/kernels.hpp"

#include <immintrin.h>

#include <array>
#include <cassert>

namespace hintbox::kernels::avx2 {

void depth_to_gray(std::span<const float> depth, std::span<std::uint8_t> gray) {
  assert(gray.size() >= depth.size());
  const std::size_t n = depth.size();
  const __m256 zero = _mm256_setzero_ps();
  const __m256 one = _mm256_set1_ps(1.0f);
  const __m256 scale = _mm256_set1_ps(255.0f);
  const __m256 half = _mm256_set1_ps(0.5f);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    // max(x, 0) returns the second operand for NaN, matching the scalar path.
    __m256 a = _mm256_min_ps(_mm256_max_ps(_mm256_loadu_ps(depth.data() + i), zero), one);
    __m256 b = _mm256_min_ps(_mm256_max_ps(_mm256_loadu_ps(depth.data() + i + 8), zero), one);
    a = _mm256_add_ps(_mm256_mul_ps(a, scale), half);
    b = _mm256_add_ps(_mm256_mul_ps(b, scale), half);
    const __m256i ia = _mm256_cvttps_epi32(a);
    const __m256i ib = _mm256_cvttps_epi32(b);
    // packs operate per 128-bit lane; permute restores element order.
    __m256i w = _mm256_packus_epi32(ia, ib);
    w = _mm256_permute4x64_epi64(w, 0xD8);
    const __m128i lo = _mm256_castsi256_si128(w);
    const __m128i hi = _mm256_extracti128_si256(w, 1);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(gray.data() + i), _mm_packus_epi16(lo, hi));
  }
  scalar::depth_to_gray(depth.subspan(i), gray.subspan(i));
}

namespace {

// 96 bytes = lcm(3, 32): three vectors hold a whole number of RGB pixels.
struct Pattern {
  __m256i v[3];
};

Pattern rgb_pattern(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  alignas(32) std::array<std::uint8_t, 96> p{};
  for (std::size_t i = 0; i < 96; i += 3) {
    p[i] = r;
    p[i + 1] = g;
    p[i + 2] = b;
  }
  return {{_mm256_load_si256(reinterpret_cast<const __m256i*>(p.data())),
          _mm256_load_si256(reinterpret_cast<const __m256i*>(p.data() + 32)),
          _mm256_load_si256(reinterpret_cast<const __m256i*>(p.data() + 64))}};
}

// (6 * s + c) / 10 on 16-bit lanes, c already holding 4 * color + 5.
// The product stays below 2^12, where x / 10 == (x * 52429) >> 19.
inline __m256i blend16(__m256i s, __m256i c) {
  const __m256i six = _mm256_set1_epi16(6);
  const __m256i magic = _mm256_set1_epi16(static_cast<short>(52429));
  const __m256i x = _mm256_add_epi16(_mm256_mullo_epi16(s, six), c);
  return _mm256_srli_epi16(_mm256_mulhi_epu16(x, magic), 3);
}

inline __m256i blend_bytes(__m256i px, __m256i pat) {
  const __m256i zero = _mm256_setzero_si256();
  const __m256i four = _mm256_set1_epi16(4);
  const __m256i five = _mm256_set1_epi16(5);
  const __m256i c_lo = _mm256_add_epi16(_mm256_mullo_epi16(_mm256_unpacklo_epi8(pat, zero), four), five);
  const __m256i c_hi = _mm256_add_epi16(_mm256_mullo_epi16(_mm256_unpackhi_epi8(pat, zero), four), five);
  const __m256i lo = blend16(_mm256_unpacklo_epi8(px, zero), c_lo);
  const __m256i hi = blend16(_mm256_unpackhi_epi8(px, zero), c_hi);
  return _mm256_packus_epi16(lo, hi);
}

}  // namespace

void blend_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto pat = rgb_pattern(r, g, b);
  const std::size_t n = rgb.size() - rgb.size() % 3;
  std::size_t i = 0;
  for (; i + 96 <= n; i += 96) {
    for (std::size_t k = 0; k < 3; ++k) {
      auto* p = reinterpret_cast<__m256i*>(rgb.data() + i + 32 * k);
      _mm256_storeu_si256(p, blend_bytes(_mm256_loadu_si256(p), pat.v[k]));
    }
  }
  scalar::blend_rgb(rgb.subspan(i, n - i), r, g, b);
}

void fill_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const auto pat = rgb_pattern(r, g, b);
  const std::size_t n = rgb.size() - rgb.size() % 3;
  std::size_t i = 0;
  for (; i + 96 <= n; i += 96) {
    for (std::size_t k = 0; k < 3; ++k) {
      _mm256_storeu_si256(reinterpret_cast<__m256i*>(rgb.data() + i + 32 * k), pat.v[k]);
    }
  }
  scalar::fill_rgb(rgb.subspan(i, n - i), r, g, b);
}

double sum_f32(std::span<const float> values) {
  const std::size_t n = values.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(values.data() + i);
    acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
    acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_add_pd(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += static_cast<double>(values[i]);
  return s;
}

}  // namespace hintbox::kernels::avx2
