// SPDX-License-Identifier: Apache-2.0
#include "hintbox/skills/render.hpp"

#include "hintbox/kernels/kernels.hpp"
#include "hintbox/world/world.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hintbox::skills {

namespace {

// 3x5 glyphs, one row per entry, bit 2 = left column.
using Glyph = std::array<std::uint8_t, 5>;

Glyph glyph(char c) {
  if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  static constexpr Glyph digits[] = {{7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7},
                                     {5, 5, 7, 1, 1}, {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 2, 2, 2},
                                     {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7}};
  static constexpr Glyph letters[] = {
      {2, 5, 7, 5, 5}, {6, 5, 6, 5, 6}, {3, 4, 4, 4, 3}, {6, 5, 5, 5, 6}, {7, 4, 6, 4, 7}, {7, 4, 6, 4, 4},
      {3, 4, 5, 5, 3}, {5, 5, 7, 5, 5}, {7, 2, 2, 2, 7}, {1, 1, 1, 5, 2}, {5, 5, 6, 5, 5}, {4, 4, 4, 4, 7},
      {5, 7, 7, 5, 5}, {6, 5, 5, 5, 5}, {2, 5, 5, 5, 2}, {6, 5, 6, 4, 4}, {2, 5, 5, 6, 3}, {6, 5, 6, 5, 5},
      {3, 4, 2, 1, 6}, {7, 2, 2, 2, 2}, {5, 5, 5, 5, 7}, {5, 5, 5, 5, 2}, {5, 5, 7, 7, 5}, {5, 5, 2, 5, 5},
      {5, 5, 2, 2, 2}, {7, 1, 2, 4, 7}};
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c >= 'a' && c <= 'z') return letters[c - 'a'];
  switch (c) {
    case ' ': return {0, 0, 0, 0, 0};
    case '.': return {0, 0, 0, 0, 2};
    case '-': return {0, 0, 7, 0, 0};
    case ':': return {0, 2, 0, 2, 0};
    case ',': return {0, 0, 0, 2, 4};
    case '(': return {1, 2, 2, 2, 1};
    case ')': return {4, 2, 2, 2, 4};
    case '[': return {3, 2, 2, 2, 3};
    case ']': return {6, 2, 2, 2, 6};
    case '/': return {1, 1, 2, 4, 4};
    default: return {7, 1, 2, 0, 2};
  }
}

void fill_rect(Raster& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::clamp(x0, 0, img.width());
  x1 = std::clamp(x1, 0, img.width());
  y0 = std::clamp(y0, 0, img.height());
  y1 = std::clamp(y1, 0, img.height());
  if (x0 >= x1) return;
  const auto& k = kernels::active();
  for (int y = y0; y < y1; ++y) {
    k.fill_rgb(img.row(y).subspan(static_cast<std::size_t>(x0) * 3, static_cast<std::size_t>(x1 - x0) * 3), c.r, c.g,
               c.b);
  }
}

bool box_inside(const Box& b, int w, int h) {
  return b.valid() && b.x1 >= 0 && b.y1 >= 0 && b.x2 <= w && b.y2 <= h;
}

Unexpected<RenderError> out_of_bounds(const Box& b, int w, int h) {
  return fail(RenderError{RenderErrorKind::RenderBounds, "box [" + std::to_string(b.x1) + ", " + std::to_string(b.y1) +
                                                             ", " + std::to_string(b.x2) + ", " + std::to_string(b.y2) +
                                                             "] exceeds " + std::to_string(w) + "x" + std::to_string(h)});
}

void label_box(Raster& img, const Box& b, std::string_view label, Rgb color) {
  outline_box(img, b, color);
  const int text_h = 5 * 2;
  int ty = static_cast<int>(b.y1) - text_h - 2;
  if (ty < 0) ty = static_cast<int>(b.y1) + 3;
  draw_text(img, static_cast<int>(b.x1) + 2, ty, label, color);
}

Raster crop(const Raster& base, const tools::CropView& v) {
  const auto [w, h] = tools::crop_dims(v);
  Raster out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::clamp(static_cast<int>(std::floor(v.y1 + (y + 0.5) / v.zoom)), 0, base.height() - 1);
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(static_cast<int>(std::floor(v.x1 + (x + 0.5) / v.zoom)), 0, base.width() - 1);
      out.set(x, y, base.at(sx, sy));
    }
  }
  return out;
}

}  // namespace

std::string_view visual_kind_name(VisualKind k) noexcept {
  switch (k) {
    case VisualKind::Boxes: return "boxes";
    case VisualKind::Masks: return "masks";
    case VisualKind::Depth: return "depth";
    case VisualKind::Crop: return "crop";
    case VisualKind::Montage: return "montage";
  }
  return "unknown";
}

std::optional<VisualKind> parse_visual_kind(std::string_view name) noexcept {
  for (auto k : {VisualKind::Boxes, VisualKind::Masks, VisualKind::Depth, VisualKind::Crop, VisualKind::Montage}) {
    if (visual_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

void draw_text(Raster& img, int x, int y, std::string_view text, Rgb color, int scale) {
  for (char ch : text) {
    const auto g = glyph(ch);
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (g[static_cast<std::size_t>(r)] & (4 >> c)) {
          fill_rect(img, x + c * scale, y + r * scale, x + (c + 1) * scale, y + (r + 1) * scale, color);
        }
      }
    }
    x += 4 * scale;
  }
}

void outline_box(Raster& img, const Box& box, Rgb color, int thickness) {
  const auto r = pixel_range(box, img.width(), img.height());
  if (r.empty()) return;
  fill_rect(img, r.x0, r.y0, r.x1, r.y0 + thickness, color);
  fill_rect(img, r.x0, r.y1 - thickness, r.x1, r.y1, color);
  fill_rect(img, r.x0, r.y0, r.x0 + thickness, r.y1, color);
  fill_rect(img, r.x1 - thickness, r.y0, r.x1, r.y1, color);
}

void blend_mask(Raster& img, const tools::ObjectMask& mask, Rgb color) {
  if (mask.width != img.width() || mask.height != img.height()) return;
  const auto& k = kernels::active();
  for (int y = 0; y < mask.height; ++y) {
    const auto* bits = mask.bits.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(mask.width);
    int x = 0;
    while (x < mask.width) {
      if (!bits[x]) {
        ++x;
        continue;
      }
      int end = x;
      while (end < mask.width && bits[end]) ++end;
      k.blend_rgb(img.row(y).subspan(static_cast<std::size_t>(x) * 3, static_cast<std::size_t>(end - x) * 3), color.r,
                  color.g, color.b);
      x = end;
    }
  }
}

Result<Raster, RenderError> render_hint_visual(VisualKind kind, const VisualPayload& p, const Raster& base) {
  const int w = base.width(), h = base.height();
  const auto missing = [&](std::string_view what) {
    return fail(RenderError{RenderErrorKind::MissingPayload,
                            std::string(visual_kind_name(kind)) + " needs " + std::string(what)});
  };
  if (p.detections) {
    for (const auto& d : p.detections->items) {
      if (!box_inside(d.box, w, h)) return out_of_bounds(d.box, w, h);
    }
  }
  switch (kind) {
    case VisualKind::Boxes: {
      if (!p.detections) return missing("detections");
      Raster out = base;
      for (const auto& d : p.detections->items) label_box(out, d.box, d.label, world::label_color(d.label));
      return out;
    }
    case VisualKind::Masks: {
      if (!p.masks) return missing("masks");
      Raster out = base;
      for (const auto& m : p.masks->items) {
        if (m.width != w || m.height != h) return fail(RenderError{RenderErrorKind::RenderBounds, "mask size mismatch"});
        blend_mask(out, m, world::label_color(m.label));
      }
      for (const auto& m : p.masks->items) {
        const auto e = m.extent();
        if (e.valid()) label_box(out, e, m.label, world::label_color(m.label));
      }
      return out;
    }
    case VisualKind::Depth: {
      if (!p.depth) return missing("depth field");
      if (p.depth->width != w || p.depth->height != h) {
        return fail(RenderError{RenderErrorKind::RenderBounds, "depth field size mismatch"});
      }
      std::vector<std::uint8_t> gray(p.depth->values.size());
      kernels::active().depth_to_gray(p.depth->values, gray);
      Raster out(w, h);
      auto bytes = out.bytes();
      for (std::size_t i = 0; i < gray.size(); ++i) {
        bytes[3 * i] = bytes[3 * i + 1] = bytes[3 * i + 2] = gray[i];
      }
      if (p.detections) {
        for (const auto& d : p.detections->items) label_box(out, d.box, d.label, Rgb{230, 60, 40});
      }
      return out;
    }
    case VisualKind::Crop: {
      if (!p.crop) return missing("crop window");
      const auto& v = *p.crop;
      const Box b{v.x1, v.y1, v.x2, v.y2};
      if (!box_inside(b, w, h)) return out_of_bounds(b, w, h);
      if (!(v.zoom > 0) || !std::isfinite(v.zoom)) {
        return fail(RenderError{RenderErrorKind::RenderBounds, "zoom_factor must be positive"});
      }
      const auto [cw, ch] = tools::crop_dims(v);
      if (static_cast<long>(cw) * ch > 16L * 1024 * 1024) {
        return fail(RenderError{RenderErrorKind::RenderBounds, "crop output too large"});
      }
      return crop(base, v);
    }
    case VisualKind::Montage: {
      if (!p.masks || p.masks->items.empty()) return missing("masks");
      constexpr int kGap = 4;
      std::vector<Raster> tiles;
      for (const auto& m : p.masks->items) {
        const auto e = m.extent();
        if (!e.valid()) continue;
        if (m.width != w || m.height != h) return fail(RenderError{RenderErrorKind::RenderBounds, "mask size mismatch"});
        Raster overlay = base;
        blend_mask(overlay, m, world::label_color(m.label));
        tiles.push_back(crop(overlay, tools::CropView{e.x1, e.y1, e.x2, e.y2, 1.0}));
      }
      if (tiles.empty()) return missing("non-empty masks");
      int total_w = kGap, max_h = 0;
      for (const auto& t : tiles) {
        total_w += t.width() + kGap;
        max_h = std::max(max_h, t.height());
      }
      Raster out(total_w, max_h + 2 * kGap, Rgb{255, 255, 255});
      int x = kGap;
      for (const auto& t : tiles) {
        for (int y = 0; y < t.height(); ++y) {
          const auto src = t.row(y);
          std::copy(src.begin(), src.end(), out.row(y + kGap).begin() + static_cast<std::ptrdiff_t>(x) * 3);
        }
        x += t.width() + kGap;
      }
      return out;
    }
  }
  return missing("a known kind");
}

}  // namespace hintbox::skills
