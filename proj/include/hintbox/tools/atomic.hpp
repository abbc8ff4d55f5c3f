// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/geometry.hpp"
#include "hintbox/grammar/action.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hintbox::tools {

using grammar::ActionArg;
using grammar::ArgValue;

enum class SemanticType { ImageRef, Text, TextList, Number, NumberList };

std::string_view semantic_type_name(SemanticType t) noexcept;

struct ParamSpec {
  std::string name;
  SemanticType type = SemanticType::Text;
  bool required = true;
  std::optional<ArgValue> default_value;
};

enum class OutputKind { Detections, Mask, DepthField, PointCloud3D, ComputeResult };

std::string_view output_kind_name(OutputKind k) noexcept;

// One foundational operation: a deterministic mapping from typed inputs to a
// structured output of a fixed kind.
struct AtomicDescriptor {
  std::string name;
  std::vector<ParamSpec> input_schema;
  OutputKind output_kind = OutputKind::ComputeResult;
};

struct Detection {
  std::string label;
  Box box;
  double score = 1.0;
  friend bool operator==(const Detection&, const Detection&) = default;
};

struct Detections {
  std::vector<Detection> items;
  friend bool operator==(const Detections&, const Detections&) = default;
};

// Full-image bitmask for one object (row-major, 0/1).
struct ObjectMask {
  std::string label;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  [[nodiscard]] std::size_t area() const;
  // Bounding extent of the set pixels; invalid box when empty.
  [[nodiscard]] Box extent() const;
  // Mean of pixel centers (x + 0.5, y + 0.5).
  [[nodiscard]] std::optional<std::pair<double, double>> centroid() const;
  friend bool operator==(const ObjectMask&, const ObjectMask&) = default;
};

struct Masks {
  std::vector<ObjectMask> items;
  friend bool operator==(const Masks&, const Masks&) = default;
};

// Dense relative depth, values in [0, 1], larger = farther.
struct DepthField {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  friend bool operator==(const DepthField&, const DepthField&) = default;
};

struct CameraIntrinsics {
  double focal = 0;
  double cx = 0;
  double cy = 0;
  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct LabeledPoint {
  std::string label;
  Vec3 xyz;  // camera frame, meters
  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

struct PointCloud3D {
  std::vector<LabeledPoint> points;
  std::optional<CameraIntrinsics> camera;
  friend bool operator==(const PointCloud3D&, const PointCloud3D&) = default;
};

struct ComputeResult {
  std::string text;
  std::vector<double> values;
  // Set by the render atomic: the image registered for the new raster.
  std::optional<std::string> image_ref;
  friend bool operator==(const ComputeResult&, const ComputeResult&) = default;
};

using AtomicOutput = std::variant<Detections, Masks, DepthField, PointCloud3D, ComputeResult>;

OutputKind kind_of(const AtomicOutput& out) noexcept;

// Checks the payload invariants (boxes ordered and inside the image, scores
// and depths in [0, 1]). Returns a description of the first violation.
std::optional<std::string> check_output(const AtomicOutput& out, int image_width, int image_height);

enum class ToolErrorKind { EmptyReturn, ExecutionError, Timeout, BackendUnavailable };

std::string_view tool_error_name(ToolErrorKind k) noexcept;
std::optional<ToolErrorKind> parse_tool_error(std::string_view name) noexcept;

struct ToolError {
  ToolErrorKind kind = ToolErrorKind::ExecutionError;
  std::string detail;
};

// The six operations of the atomic layer.
namespace atomic_names {
inline constexpr std::string_view kDetect = "detect_objects";
inline constexpr std::string_view kSegment = "segment";
inline constexpr std::string_view kDepth = "depth_estimate";
inline constexpr std::string_view kReconstruct = "reconstruct_3d";
inline constexpr std::string_view kRender = "render";
inline constexpr std::string_view kCompute = "compute";
}  // namespace atomic_names

std::vector<AtomicDescriptor> default_atomic_descriptors();

}  // namespace hintbox::tools
