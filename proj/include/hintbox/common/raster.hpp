// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hintbox {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Interleaved 8-bit RGB image, row-major.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, Rgb fill = {});

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] bool empty() const noexcept { return pixels_.empty(); }

  [[nodiscard]] Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);

  std::span<std::uint8_t> row(int y);
  std::span<const std::uint8_t> row(int y) const;
  std::span<std::uint8_t> bytes() noexcept { return pixels_; }
  std::span<const std::uint8_t> bytes() const noexcept { return pixels_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Binary PPM (P6) codec.
std::string encode_ppm(const Raster& img);
std::optional<Raster> decode_ppm(std::string_view data);
bool write_ppm(const Raster& img, const std::filesystem::path& path);
std::optional<Raster> read_ppm(const std::filesystem::path& path);

// Minimal PNG (zlib-compressed, RGB8), for attaching rasters to chat requests.
std::string encode_png(const Raster& img);

std::string base64_encode(std::span<const std::uint8_t> data);
std::string base64_encode(std::string_view data);
std::optional<std::string> base64_decode(std::string_view text);

}  // namespace hintbox
