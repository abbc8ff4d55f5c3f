// SPDX-License-Identifier: Apache-2.0
#include "hintbox/tools/atomic.hpp"

#include <cmath>

namespace hintbox::tools {

std::string_view semantic_type_name(SemanticType t) noexcept {
  switch (t) {
    case SemanticType::ImageRef: return "ImageRef";
    case SemanticType::Text: return "Text";
    case SemanticType::TextList: return "TextList";
    case SemanticType::Number: return "Number";
    case SemanticType::NumberList: return "NumberList";
  }
  return "unknown";
}

std::string_view output_kind_name(OutputKind k) noexcept {
  switch (k) {
    case OutputKind::Detections: return "detections";
    case OutputKind::Mask: return "mask";
    case OutputKind::DepthField: return "depth";
    case OutputKind::PointCloud3D: return "points3d";
    case OutputKind::ComputeResult: return "compute";
  }
  return "unknown";
}

std::size_t ObjectMask::area() const {
  std::size_t n = 0;
  for (auto b : bits) n += b != 0;
  return n;
}

Box ObjectMask::extent() const {
  int x1 = width, y1 = height, x2 = -1, y2 = -1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] == 0) continue;
      x1 = std::min(x1, x);
      y1 = std::min(y1, y);
      x2 = std::max(x2, x);
      y2 = std::max(y2, y);
    }
  }
  if (x2 < 0) return Box{};
  return Box{double(x1), double(y1), double(x2 + 1), double(y2 + 1)};
}

std::optional<std::pair<double, double>> ObjectMask::centroid() const {
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (bits[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] == 0) continue;
      sx += x + 0.5;
      sy += y + 0.5;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return std::pair{sx / double(n), sy / double(n)};
}

OutputKind kind_of(const AtomicOutput& out) noexcept {
  switch (out.index()) {
    case 0: return OutputKind::Detections;
    case 1: return OutputKind::Mask;
    case 2: return OutputKind::DepthField;
    case 3: return OutputKind::PointCloud3D;
    default: return OutputKind::ComputeResult;
  }
}

std::optional<std::string> check_output(const AtomicOutput& out, int image_width, int image_height) {
  const double w = image_width, h = image_height;
  if (const auto* d = std::get_if<Detections>(&out)) {
    for (const auto& det : d->items) {
      if (!det.box.valid()) return "degenerate box for '" + det.label + "'";
      if (!det.box.inside(w, h)) return "box outside image for '" + det.label + "'";
      if (!(det.score >= 0.0 && det.score <= 1.0)) return "score outside [0,1] for '" + det.label + "'";
    }
  } else if (const auto* m = std::get_if<Masks>(&out)) {
    for (const auto& mask : m->items) {
      if (mask.width != image_width || mask.height != image_height) return "mask size differs from image";
      if (mask.bits.size() != static_cast<std::size_t>(mask.width) * static_cast<std::size_t>(mask.height)) {
        return "mask bit count differs from size";
      }
    }
  } else if (const auto* f = std::get_if<DepthField>(&out)) {
    if (f->width != image_width || f->height != image_height) return "depth field size differs from image";
    if (f->values.size() != static_cast<std::size_t>(f->width) * static_cast<std::size_t>(f->height)) {
      return "depth value count differs from size";
    }
    for (float v : f->values) {
      if (!(v >= 0.0f && v <= 1.0f)) return "depth value outside [0,1]";
    }
  } else if (const auto* p = std::get_if<PointCloud3D>(&out)) {
    for (const auto& pt : p->points) {
      if (!std::isfinite(pt.xyz.x) || !std::isfinite(pt.xyz.y) || !std::isfinite(pt.xyz.z)) {
        return "non-finite 3D point for '" + pt.label + "'";
      }
    }
  }
  return std::nullopt;
}

std::string_view tool_error_name(ToolErrorKind k) noexcept {
  switch (k) {
    case ToolErrorKind::EmptyReturn: return "EmptyReturn";
    case ToolErrorKind::ExecutionError: return "ExecutionError";
    case ToolErrorKind::Timeout: return "Timeout";
    case ToolErrorKind::BackendUnavailable: return "BackendUnavailable";
  }
  return "unknown";
}

std::optional<ToolErrorKind> parse_tool_error(std::string_view name) noexcept {
  for (auto k : {ToolErrorKind::EmptyReturn, ToolErrorKind::ExecutionError, ToolErrorKind::Timeout,
                 ToolErrorKind::BackendUnavailable}) {
    if (tool_error_name(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<AtomicDescriptor> default_atomic_descriptors() {
  using enum SemanticType;
  const ParamSpec image{"image", ImageRef, true, std::nullopt};
  return {
      {std::string(atomic_names::kDetect),
       {image, {"text_labels", TextList, true, std::nullopt}, {"threshold", Number, false, ArgValue{0.1}}},
       OutputKind::Detections},
      {std::string(atomic_names::kSegment), {image}, OutputKind::Mask},
      {std::string(atomic_names::kDepth), {image}, OutputKind::DepthField},
      {std::string(atomic_names::kReconstruct), {image}, OutputKind::PointCloud3D},
      {std::string(atomic_names::kRender),
       {image,
        {"kind", Text, true, std::nullopt},
        {"box", NumberList, false, ArgValue{std::vector<double>{}}},
        {"zoom_factor", Number, false, ArgValue{1.0}}},
       OutputKind::ComputeResult},
      {std::string(atomic_names::kCompute),
       {image,
        {"op", Text, true, std::nullopt},
        {"text_labels", TextList, false, ArgValue{std::vector<std::string>{}}},
        {"values", NumberList, false, ArgValue{std::vector<double>{}}}},
       OutputKind::ComputeResult},
  };
}

}  // namespace hintbox::tools
