// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/raster.hpp"
#include "hintbox/common/result.hpp"
#include "hintbox/tools/atomic.hpp"
#include "hintbox/tools/image_store.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace hintbox::skills {

enum class VisualKind { Boxes, Masks, Depth, Crop, Montage };

std::string_view visual_kind_name(VisualKind k) noexcept;
std::optional<VisualKind> parse_visual_kind(std::string_view name) noexcept;

struct VisualPayload {
  const tools::Detections* detections = nullptr;
  const tools::Masks* masks = nullptr;
  const tools::DepthField* depth = nullptr;
  std::optional<tools::CropView> crop;
};

enum class RenderErrorKind { RenderBounds, MissingPayload };

struct RenderError {
  RenderErrorKind kind;
  std::string message;
};

// Boxes: 2-px outlines with label text. Masks: 40% alpha fill plus outline.
// Depth: grayscale, 0 = near = black. Crop: nearest-neighbour resample of
// the window. Montage: per-mask crops of the mask overlay, side by side.
Result<Raster, RenderError> render_hint_visual(VisualKind kind, const VisualPayload& payload, const Raster& base);

// Drawing helpers shared with the warm-up builder.
void draw_text(Raster& img, int x, int y, std::string_view text, Rgb color, int scale = 2);
void outline_box(Raster& img, const Box& box, Rgb color, int thickness = 2);
void blend_mask(Raster& img, const tools::ObjectMask& mask, Rgb color);

}  // namespace hintbox::skills
