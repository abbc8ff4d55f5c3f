// SPDX-License-Identifier: Apache-2.0
#pragma once

// Warm-up view-discrimination pairs and tool-use SFT trajectories written by
// a scripted teacher.

#include "hintbox/common/result.hpp"
#include "hintbox/grammar/trajectory.hpp"
#include "hintbox/skills/skills.hpp"
#include "hintbox/world/world.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hintbox::data {

inline constexpr std::string_view kWarmupSchema = "warmup.v1";
inline constexpr std::string_view kSftSchema = "sft.v1";

enum class ViewKind { MaskMap, DepthMap };

std::string_view view_kind_name(ViewKind k) noexcept;

struct WarmupPair {
  std::string id;
  std::string scene_id;
  std::string base_image;      // ref, or file path when written to disk
  std::string augmented_view;  // same
  ViewKind view_kind = ViewKind::DepthMap;
  std::string question;
  std::string answer;
};

inline constexpr std::string_view kDepthViewAnswer = "depth map: brightness encodes relative distance";

// out_dir, when set, receives <pair id>/image-k.ppm files.
std::vector<WarmupPair> build_warmup(const std::vector<world::SceneSpec>& scenes, int n, std::uint64_t seed,
                                     const skills::Toolbox& toolbox,
                                     const std::optional<std::filesystem::path>& out_dir = std::nullopt);

enum class Consistency { Complete, Partial, Empty };

std::string_view consistency_name(Consistency c) noexcept;

Consistency consistency_check(const std::vector<std::string>& entities, const skills::SkillResult& result);

struct SftTrajectory {
  world::QAItem qa;
  grammar::Trajectory turns;
  std::string text;  // canonical rendering
  Consistency consistency = Consistency::Empty;
  bool failure_injected = false;
  std::map<std::string, std::string> images;  // ref -> file path (when written)
};

enum class DataErrorKind { InvalidFraction, EmptyScenes };

struct DataError {
  DataErrorKind kind;
  std::string message;
};

// Exactly round(failure_fraction * n) items get a failed first call.
Result<std::vector<SftTrajectory>, DataError> build_sft(const std::vector<world::QAItem>& items,
                                                        const skills::Toolbox& toolbox, double failure_fraction,
                                                        std::uint64_t seed,
                                                        const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Items to feed build_sft: n items cycling through the five task types over
// the given scenes, skipping underspecified combinations.
std::vector<world::QAItem> sample_items(const std::vector<world::SceneSpec>& scenes, int n, std::uint64_t seed);

nlohmann::json warmup_to_json(const WarmupPair& p);
nlohmann::json sft_to_json(const SftTrajectory& t);

}  // namespace hintbox::data
