// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic synthetic world: scene generation, noise-aware oracles for
// the perception atomics, and QA items whose answers come straight from the
// scene.

#include "hintbox/common/raster.hpp"
#include "hintbox/common/result.hpp"
#include "hintbox/grammar/trajectory.hpp"
#include "hintbox/tools/registry.hpp"
#include "hintbox/world/scene.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hintbox::world {

enum class WorldErrorKind { Infeasible, Underspecified, InjectedFailure };

struct WorldError {
  WorldErrorKind kind;
  std::string message;
  tools::ToolErrorKind fault = tools::ToolErrorKind::ExecutionError;  // InjectedFailure only
};

struct SceneParams {
  int n_objects = 4;
  std::vector<std::string> label_vocab = {"lamp",  "sofa",  "table", "chair", "cup",  "person",
                                          "plant", "clock", "book",  "bottle", "bed", "refrigerator"};
  int width = 640;
  int height = 480;
  // Guaranteed instance multiplicities (label -> minimum count).
  std::map<std::string, int> min_instances;
  int min_box = 24;
  int max_box = 140;
};

Result<SceneSpec, WorldError> generate_scene(std::uint64_t seed, const SceneParams& params = {});

struct NoiseConfig {
  double box_jitter_px = 0.0;
  double miss_prob = 0.0;
  double false_positive_prob = 0.0;
  double failure_prob = 0.0;
  std::vector<std::pair<tools::ToolErrorKind, double>> failure_kinds = {
      {tools::ToolErrorKind::EmptyReturn, 1.0}, {tools::ToolErrorKind::ExecutionError, 1.0}};

  [[nodiscard]] bool valid() const;
};

// Label matching used by every oracle: normalize_label equality.
bool label_matches(std::string_view query, std::string_view scene_label);

Result<tools::Detections, WorldError> oracle_detect(const SceneSpec& scene, const std::vector<std::string>& labels,
                                                    const NoiseConfig& noise, std::uint64_t seed,
                                                    double threshold = 0.1);
Result<tools::DepthField, WorldError> oracle_depth(const SceneSpec& scene, const NoiseConfig& noise = {},
                                                   std::uint64_t seed = 0);
Result<tools::Masks, WorldError> oracle_segment(const SceneSpec& scene, const tools::Detections& detections,
                                                const NoiseConfig& noise = {}, std::uint64_t seed = 0);
Result<tools::PointCloud3D, WorldError> oracle_3d(const SceneSpec& scene, const tools::Detections& detections,
                                                  const NoiseConfig& noise = {}, std::uint64_t seed = 0);

// Runs one perception atomic against a scene; shared by the in-process
// backend and the mock tool server.
Result<tools::AtomicOutput, tools::ToolError> run_oracle_atomic(const SceneSpec& scene, std::string_view atomic,
                                                                const tools::ToolInput& input,
                                                                const NoiseConfig& noise, std::uint64_t seed);

// Scene as seen through a crop window (objects clipped and rescaled).
SceneSpec crop_scene(const SceneSpec& scene, const tools::CropView& view);
SceneSpec apply_views(SceneSpec scene, const std::vector<tools::CropView>& views);

// Flat-shaded picture of the scene used as image-0.
Raster render_scene(const SceneSpec& scene);
Rgb label_color(std::string_view label);

// In-process binding of the perception atomics to the oracles.
class OracleBackend final : public tools::AtomicBackend {
 public:
  explicit OracleBackend(NoiseConfig noise = {}, std::uint64_t seed = 0) : noise_(std::move(noise)), seed_(seed) {}
  [[nodiscard]] std::string_view name() const override { return "oracle"; }
  Result<tools::AtomicOutput, tools::ToolError> invoke(const tools::AtomicDescriptor& desc, std::string_view binding,
                                                       const tools::ToolInput& input,
                                                       const tools::ExecContext& ctx) override;

 private:
  NoiseConfig noise_;
  std::uint64_t seed_;
};

enum class TaskType { RelDir, RelDist, AbsDist, SizeEst, Count };

std::string_view task_name(TaskType t) noexcept;
std::optional<TaskType> parse_task(std::string_view name) noexcept;
inline constexpr TaskType kAllTasks[] = {TaskType::RelDir, TaskType::RelDist, TaskType::AbsDist, TaskType::SizeEst,
                                         TaskType::Count};

struct QAItem {
  std::string id;
  TaskType task = TaskType::Count;
  std::string question;
  grammar::AnswerKind kind = grammar::AnswerKind::MultipleChoice;
  std::vector<std::string> options;  // multiple choice only, in letter order
  std::string answer;                // option letter, or the number as text
  double answer_value = 0.0;         // underlying quantity (count, meters)
  std::vector<std::string> entities;
  SceneSpec scene;
};

// Option letters for multiple-choice items.
inline constexpr char kOptionLetters[] = "ABCDEF";

Result<QAItem, WorldError> generate_qa(const SceneSpec& scene, TaskType task, std::uint64_t seed);

// Direction of `a` relative to `b` by the dominant axis of the center offset;
// horizontal wins ties. Image y grows downward.
std::string relative_direction(const Box& a, const Box& b);

double distance(const Vec3& a, const Vec3& b);

}  // namespace hintbox::world
