// SPDX-License-Identifier: Apache-2.0
#pragma once

// The six agent-facing skills. Each runs a fixed sequence of atomics and
// returns hints pairing a rendered raster with a text description.

#include "hintbox/common/result.hpp"
#include "hintbox/grammar/action.hpp"
#include "hintbox/tools/registry.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hintbox::skills {

namespace skill_names {
inline constexpr std::string_view kSegment = "SegmentObjects";
inline constexpr std::string_view kDepth = "EstimateDepth";
inline constexpr std::string_view kSize = "EstimateSize";
inline constexpr std::string_view kCount = "CountObjects";
inline constexpr std::string_view kZoom = "ZoomCrop";
inline constexpr std::string_view k3D = "Get3DPoint";
}  // namespace skill_names

struct SkillDescriptor {
  std::string name;
  std::vector<std::string> atomic_sequence;
  std::string orchestration;
  std::vector<tools::ParamSpec> schema;
  std::string summary;  // one line for prompts
};

const std::vector<SkillDescriptor>& skill_descriptors();
const SkillDescriptor* find_skill(std::string_view name);

struct Hint {
  std::string visual;  // image ref; empty only on failed results
  std::string text;
};

enum class SkillStatus { Complete, Partial, Failed };

std::string_view skill_status_name(SkillStatus s) noexcept;

struct SkillResult {
  std::string skill;
  SkillStatus status = SkillStatus::Failed;
  std::vector<Hint> hints;
  // Query label -> found, in query order.
  std::vector<std::pair<std::string, bool>> per_query;
  std::optional<tools::ToolError> error;
};

enum class SkillErrorKind { UnknownSkill, ArgValidation, OverconstrainedROI };

std::string_view skill_error_name(SkillErrorKind k) noexcept;

struct SkillError {
  SkillErrorKind kind;
  std::string message;
};

// Per-skill-call fault injection: with `probability` the first atomic of the
// call fails with a kind drawn from `kinds` (weights).
struct FaultConfig {
  double probability = 0.0;
  std::vector<std::pair<tools::ToolErrorKind, double>> kinds = {{tools::ToolErrorKind::EmptyReturn, 1.0},
                                                                {tools::ToolErrorKind::ExecutionError, 1.0}};
};

struct SkillContext {
  tools::ImageStore* images = nullptr;
  std::uint64_t seed = 0;
  std::uint64_t call_index = 0;
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
  // Fails this call deterministically, regardless of FaultConfig.
  std::optional<tools::ToolErrorKind> force_fault;
};

// Text of the observation for a failed call.
std::string failure_text(std::string_view skill, tools::ToolErrorKind kind);

class Toolbox {
 public:
  explicit Toolbox(tools::Registry registry, FaultConfig faults = {});

  Result<SkillResult, SkillError> execute(const grammar::ActionCall& call, const SkillContext& ctx) const;

  [[nodiscard]] const tools::Registry& registry() const noexcept { return registry_; }
  [[nodiscard]] const FaultConfig& faults() const noexcept { return faults_; }

 private:
  tools::Registry registry_;
  FaultConfig faults_;
};

// In-process render and compute atomics. They read and extend the episode's
// image store, so they always run next to the sandbox.
class LocalUtilities final : public tools::AtomicBackend {
 public:
  [[nodiscard]] std::string_view name() const override { return "local"; }
  Result<tools::AtomicOutput, tools::ToolError> invoke(const tools::AtomicDescriptor& desc, std::string_view binding,
                                                       const tools::ToolInput& input,
                                                       const tools::ExecContext& ctx) override;
};

inline constexpr std::string_view kDefaultDetector = "groundingdino";
inline constexpr std::string_view kAltDetector = "owlv2";

// Registry with the perception atomics bound to `perception` and render /
// compute bound to LocalUtilities.
tools::Registry make_registry(tools::BackendPtr perception, std::string detector_binding = std::string(kDefaultDetector));

Toolbox make_toolbox(tools::BackendPtr perception, FaultConfig faults = {},
                     std::string detector_binding = std::string(kDefaultDetector));

}  // namespace hintbox::skills
