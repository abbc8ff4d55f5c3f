// SPDX-License-Identifier: Apache-2.0
#include "hintbox/common/rng.hpp"
#include "hintbox/kernels/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace hintbox;
using namespace hintbox::kernels;

namespace {

std::vector<const KernelTable*> vector_tables() {
  std::vector<const KernelTable*> out;
  for (auto isa : {Isa::Avx2, Isa::Neon}) {
    if (const auto* t = table_for(isa)) out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("scalar reference formulas") {
  std::vector<float> d = {0.0f, 0.5f, 1.0f, -1.0f, 2.0f, 0.25f};
  std::vector<std::uint8_t> g(d.size());
  scalar::depth_to_gray(d, g);
  CHECK(g == std::vector<std::uint8_t>{0, 128, 255, 0, 255, 64});

  std::vector<std::uint8_t> px = {0, 100, 255};
  scalar::blend_rgb(px, 255, 0, 10);
  CHECK(px[0] == (6 * 0 + 4 * 255 + 5) / 10);
  CHECK(px[1] == (6 * 100 + 4 * 0 + 5) / 10);
  CHECK(px[2] == (6 * 255 + 4 * 10 + 5) / 10);

  std::vector<float> v = {1.5f, 2.5f, -1.0f};
  CHECK(scalar::sum_f32(v) == 3.0);
}

TEST_CASE("table lookup") {
  REQUIRE(table_for(Isa::Scalar) != nullptr);
  CHECK(table_for(Isa::Scalar)->isa == Isa::Scalar);
  CHECK(isa_name(active().isa).size() > 0);
}

TEST_CASE("blend is bit-identical on every source and color byte") {
  for (const auto* t : vector_tables()) {
    CAPTURE(isa_name(t->isa));
    // 256 source values per channel, lengths that leave vector tails.
    std::vector<std::uint8_t> base(3 * 256 + 7);
    for (std::size_t i = 0; i < base.size(); ++i) base[i] = static_cast<std::uint8_t>(i * 7 + i / 256);
    for (int c = 0; c < 256; ++c) {
      auto a = base, b = base;
      const auto r = static_cast<std::uint8_t>(c), g = static_cast<std::uint8_t>(255 - c),
                 bl = static_cast<std::uint8_t>(c * 3);
      scalar::blend_rgb(a, r, g, bl);
      t->blend_rgb(b, r, g, bl);
      REQUIRE(a == b);
    }
  }
}

TEST_CASE("fill and depth_to_gray are bit-identical") {
  Rng rng(17);
  for (const auto* t : vector_tables()) {
    CAPTURE(isa_name(t->isa));
    for (std::size_t n : {0u, 1u, 5u, 31u, 32u, 33u, 95u, 96u, 1000u, 4097u}) {
      std::vector<std::uint8_t> a(3 * n, 9), b(3 * n, 9);
      scalar::fill_rgb(a, 1, 2, 3);
      t->fill_rgb(b, 1, 2, 3);
      CHECK(a == b);

      std::vector<float> d(n);
      for (auto& x : d) x = static_cast<float>(rng.uniform(-0.2, 1.2));
      std::vector<std::uint8_t> ga(n), gb(n);
      scalar::depth_to_gray(d, ga);
      t->depth_to_gray(d, gb);
      CHECK(ga == gb);
    }
    // Every float step around each gray boundary.
    std::vector<float> edges;
    for (int k = 0; k <= 255; ++k) {
      float x = (static_cast<float>(k) + 0.5f) / 255.0f;
      for (int s = 0; s < 4; ++s) x = std::nextafter(x, 0.0f);
      for (int s = 0; s < 8; ++s) {
        edges.push_back(x);
        x = std::nextafter(x, 1.0f);
      }
    }
    edges.push_back(std::numeric_limits<float>::quiet_NaN());
    edges.push_back(std::numeric_limits<float>::infinity());
    edges.push_back(-std::numeric_limits<float>::infinity());
    std::vector<std::uint8_t> ga(edges.size()), gb(edges.size());
    scalar::depth_to_gray(edges, ga);
    t->depth_to_gray(edges, gb);
    CHECK(ga == gb);
  }
}

TEST_CASE("sum_f32 agrees within rounding") {
  Rng rng(23);
  for (const auto* t : vector_tables()) {
    CAPTURE(isa_name(t->isa));
    for (std::size_t n : {0u, 1u, 3u, 8u, 9u, 100u, 640u * 480u}) {
      std::vector<float> v(n);
      double abs_sum = 0;
      for (auto& x : v) {
        x = static_cast<float>(rng.uniform(0, 1));
        abs_sum += std::abs(static_cast<double>(x));
      }
      const double a = scalar::sum_f32(v), b = t->sum_f32(v);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, abs_sum));
    }
  }
}
