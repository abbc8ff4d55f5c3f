// SPDX-License-Identifier: Apache-2.0
#include "hintbox/common/raster.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hintbox {

Raster::Raster(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative raster size");
  pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Rgb Raster::at(int x, int y) const {
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  return {pixels_.at(i), pixels_.at(i + 1), pixels_.at(i + 2)};
}

void Raster::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

std::span<std::uint8_t> Raster::row(int y) {
  return std::span<std::uint8_t>(pixels_).subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) * 3,
                                                  static_cast<std::size_t>(width_) * 3);
}

std::span<const std::uint8_t> Raster::row(int y) const {
  return std::span<const std::uint8_t>(pixels_).subspan(static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) * 3,
                                                        static_cast<std::size_t>(width_) * 3);
}

std::string encode_ppm(const Raster& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  auto bytes = img.bytes();
  out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return out;
}

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::optional<int> header_int(std::string_view data, std::size_t& pos) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
      ++pos;
    } else {
      break;
    }
  }
  int v = 0;
  auto [ptr, ec] = std::from_chars(data.data() + pos, data.data() + data.size(), v);
  if (ec != std::errc{}) return std::nullopt;
  pos = static_cast<std::size_t>(ptr - data.data());
  return v;
}

}  // namespace

std::optional<Raster> decode_ppm(std::string_view data) {
  if (data.size() < 2 || data.substr(0, 2) != "P6") return std::nullopt;
  std::size_t pos = 2;
  auto w = header_int(data, pos);
  auto h = header_int(data, pos);
  auto maxv = header_int(data, pos);
  if (!w || !h || !maxv || *w < 0 || *h < 0 || *maxv != 255) return std::nullopt;
  if (pos >= data.size()) return std::nullopt;
  ++pos;  // single whitespace byte after maxval
  const auto need = static_cast<std::size_t>(*w) * static_cast<std::size_t>(*h) * 3;
  if (data.size() - pos < need) return std::nullopt;
  Raster img(*w, *h);
  std::copy_n(reinterpret_cast<const std::uint8_t*>(data.data() + pos), need, img.bytes().begin());
  return img;
}

bool write_ppm(const Raster& img, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) return false;
  const auto s = encode_ppm(img);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
  return static_cast<bool>(f);
}

std::optional<Raster> read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return std::nullopt;
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_ppm(ss.str());
}

namespace {

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void png_chunk(std::string& out, const char* type, const std::string& body) {
  put_be32(out, static_cast<std::uint32_t>(body.size()));
  std::string tagged(type, 4);
  tagged += body;
  out += tagged;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(tagged.data()), static_cast<uInt>(tagged.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::string encode_png(const Raster& img) {
  std::string raw;
  raw.reserve(static_cast<std::size_t>(img.height()) * (static_cast<std::size_t>(img.width()) * 3 + 1));
  for (int y = 0; y < img.height(); ++y) {
    raw.push_back('\0');  // filter: none
    auto r = img.row(y);
    raw.append(reinterpret_cast<const char*>(r.data()), r.size());
  }
  uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
  std::string z(zlen, '\0');
  if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), Z_DEFAULT_COMPRESSION) != Z_OK) {
    throw std::runtime_error("png: deflate failed");
  }
  z.resize(zlen);

  std::string out = "\x89PNG\r\n\x1a\n";
  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(img.width()));
  put_be32(ihdr, static_cast<std::uint32_t>(img.height()));
  ihdr += std::string{'\x08', '\x02', '\x00', '\x00', '\x00'};  // 8-bit RGB
  png_chunk(out, "IHDR", ihdr);
  png_chunk(out, "IDAT", z);
  png_chunk(out, "IEND", {});
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_encode(std::string_view data) {
  return base64_encode(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::optional<std::string> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) return std::nullopt;
  if (text.empty()) return std::string{};
  std::string out(3 * (text.size() / 4), '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) return std::nullopt;
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t pad = 0;
  if (text.back() == '=') ++pad;
  if (text.size() >= 2 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace hintbox
