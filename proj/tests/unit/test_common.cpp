// SPDX-License-Identifier: Apache-2.0
#include "hintbox/common/geometry.hpp"
#include "hintbox/common/raster.hpp"
#include "hintbox/common/rng.hpp"
#include "hintbox/common/text.hpp"

#include <doctest.h>
#include <zlib.h>

#include <cmath>
#include <cstring>
#include <limits>

using namespace hintbox;

TEST_CASE("rng is reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    const auto k = r.range(-3, 3);
    CHECK((k >= -3 && k <= 3));
    CHECK(r.below(7) < 7);
  }
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) == derive_seed(1, {2}));
  CHECK(hash_str("") == 0xcbf29ce484222325ULL);
  CHECK(hash_str("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng moments") {
  Rng r(7);
  const int n = 200000;
  double s = 0, s2 = 0, ns = 0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    s += u;
    s2 += u * u;
    ns += r.normal(0.0, 1.0);
  }
  CHECK(std::abs(s / n - 0.5) < 0.005);
  CHECK(std::abs(s2 / n - s / n * s / n - 1.0 / 12.0) < 0.002);
  CHECK(std::abs(ns / n) < 0.01);
}

TEST_CASE("numbers print shortest and round-trip") {
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.5) == "-2.5");
  CHECK(format_number(1e21).find('e') != std::string::npos);
  CHECK(format_fixed(0.3, 6) == "0.300000");
  Rng r(2);
  for (int i = 0; i < 5000; ++i) {
    const double v = std::ldexp(r.uniform(-1, 1), static_cast<int>(r.range(-30, 30)));
    const auto text = format_number(v);
    const auto back = parse_number(text);
    REQUIRE(back.has_value());
    CHECK(std::memcmp(&*back, &v, sizeof v) == 0);
  }
  CHECK_FALSE(parse_number("1.2.3").has_value());
  CHECK_FALSE(parse_number("").has_value());
  CHECK(*parse_number(" 4 ") == 4.0);
}

TEST_CASE("text helpers") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(to_lower("AbC") == "abc");
  CHECK(normalize_label("The Lamp") == "lamp");
  CHECK(normalize_label("a person") == "person");
  CHECK(normalize_label("an apple") == "apple");
  CHECK(normalize_label("another") == "another");
  CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(join({}, ", ").empty());
}

TEST_CASE("box geometry") {
  const Box a{0, 0, 10, 10}, b{5, 5, 15, 15}, c{20, 20, 30, 30};
  CHECK(intersection_area(a, b) == 25.0);
  CHECK(iou(a, b) == doctest::Approx(25.0 / 175.0));
  CHECK(iou(a, c) == 0.0);
  CHECK(iou(a, a) == 1.0);
  CHECK(a.inside(10, 10));
  CHECK_FALSE(b.inside(10, 10));
  const auto pr = pixel_range({10, 20, 50, 80}, 640, 480);
  CHECK(pr.count() == 40 * 60);
  CHECK(pixel_range({-5, -5, 3, 3}, 640, 480).count() == 9);
  CHECK(pixel_range({700, 0, 800, 10}, 640, 480).empty());
}

TEST_CASE("ppm round trip") {
  Raster img(7, 5, {1, 2, 3});
  img.set(6, 4, {250, 0, 9});
  const auto back = decode_ppm(encode_ppm(img));
  REQUIRE(back.has_value());
  CHECK(*back == img);
  CHECK_FALSE(decode_ppm("P6\n2 2\n255\nabc").has_value());
  CHECK_FALSE(decode_ppm("garbage").has_value());
}

TEST_CASE("png decodes with zlib") {
  Raster img(9, 4, {10, 20, 30});
  for (int x = 0; x < 9; ++x) img.set(x, 2, {static_cast<std::uint8_t>(x * 20), 0, 255});
  const auto png = encode_png(img);
  REQUIRE(png.size() > 8);
  CHECK(png.substr(0, 8) == std::string("\x89PNG\r\n\x1a\n", 8));
  // Walk chunks, collect IDAT, inflate, and compare scanlines.
  std::string idat;
  std::size_t pos = 8;
  auto be32 = [&](std::size_t p) {
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(png[p])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(png[p + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(png[p + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(png[p + 3]));
  };
  bool saw_end = false;
  while (pos + 12 <= png.size()) {
    const auto len = be32(pos);
    const auto type = png.substr(pos + 4, 4);
    const auto crc = be32(pos + 8 + len);
    const auto calc = crc32(0, reinterpret_cast<const Bytef*>(png.data() + pos + 4), len + 4);
    CHECK(crc == calc);
    if (type == "IHDR") {
      CHECK(be32(pos + 8) == 9u);
      CHECK(be32(pos + 12) == 4u);
    }
    if (type == "IDAT") idat += png.substr(pos + 8, len);
    if (type == "IEND") saw_end = true;
    pos += 12 + len;
  }
  CHECK(saw_end);
  std::vector<unsigned char> raw(4 * (1 + 9 * 3));
  uLongf raw_len = raw.size();
  REQUIRE(uncompress(raw.data(), &raw_len, reinterpret_cast<const Bytef*>(idat.data()), idat.size()) == Z_OK);
  REQUIRE(raw_len == raw.size());
  for (int y = 0; y < 4; ++y) {
    const auto* line = raw.data() + y * (1 + 27);
    REQUIRE(line[0] == 0);
    for (int x = 0; x < 9; ++x) {
      const auto px = img.at(x, y);
      CHECK(line[1 + 3 * x] == px.r);
      CHECK(line[2 + 3 * x] == px.g);
      CHECK(line[3 + 3 * x] == px.b);
    }
  }
}

TEST_CASE("base64") {
  CHECK(base64_encode(std::string_view("")) == "");
  CHECK(base64_encode(std::string_view("f")) == "Zg==");
  CHECK(base64_encode(std::string_view("fo")) == "Zm8=");
  CHECK(base64_encode(std::string_view("foobar")) == "Zm9vYmFy");
  CHECK(*base64_decode("Zm9vYg==") == "foob");
  CHECK_FALSE(base64_decode("Zm9v!").has_value());
  Rng r(4);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    for (std::size_t k = 0, n = r.below(100); k < n; ++k) s.push_back(static_cast<char>(r.below(256)));
    CHECK(*base64_decode(base64_encode(std::string_view(s))) == s);
  }
}
