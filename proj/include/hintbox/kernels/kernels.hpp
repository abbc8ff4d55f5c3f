// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel raster kernels behind the render and compute atomics.
//
// Every kernel has a scalar reference in hintbox::kernels::scalar and, where
// the target supports it, vector variants (avx2 on x86-64, neon on aarch64).
// The integer kernels are bit-identical across variants; sum_f32 differs only
// in summation order. The active table is chosen once at first use from CPU
// features and can be pinned with HINTBOX_ISA=scalar|avx2|neon.

#include <cstdint>
#include <span>
#include <string_view>

namespace hintbox::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // gray[i] = floor(clamp(depth[i], 0, 1) * 255 + 0.5) in single precision.
  void (*depth_to_gray)(std::span<const float> depth, std::span<std::uint8_t> gray);
  // Interleaved RGB: every pixel becomes (6 * src + 4 * color + 5) / 10 per channel.
  void (*blend_rgb)(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  // Interleaved RGB solid fill.
  void (*fill_rgb)(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  // Sum in double precision.
  double (*sum_f32)(std::span<const float> values);
};

// The dispatched table.
const KernelTable& active();

// Table for a specific ISA, or nullptr when unavailable on this CPU/build.
const KernelTable* table_for(Isa isa);

namespace scalar {
void depth_to_gray(std::span<const float> depth, std::span<std::uint8_t> gray);
void blend_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
void fill_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
double sum_f32(std::span<const float> values);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void depth_to_gray(std::span<const float> depth, std::span<std::uint8_t> gray);
void blend_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
void fill_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
double sum_f32(std::span<const float> values);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void depth_to_gray(std::span<const float> depth, std::span<std::uint8_t> gray);
void blend_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
void fill_rgb(std::span<std::uint8_t> rgb, std::uint8_t r, std::uint8_t g, std::uint8_t b);
double sum_f32(std::span<const float> values);
}  // namespace neon
#endif

}  // namespace hintbox::kernels
