// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON forms of scenes ("scene.v1") and QA items ("qa.v1").

#include "hintbox/common/result.hpp"
#include "hintbox/world/world.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace hintbox::world {

inline constexpr std::string_view kSceneSchema = "scene.v1";
inline constexpr std::string_view kQASchema = "qa.v1";

struct FormatError {
  std::string message;
  std::size_t line = 0;  // 1-based line for JSONL input, 0 otherwise
};

nlohmann::json scene_to_json(const SceneSpec& scene);
Result<SceneSpec, FormatError> scene_from_json(const nlohmann::json& j);

nlohmann::json qa_to_json(const QAItem& item);
Result<QAItem, FormatError> qa_from_json(const nlohmann::json& j);

Result<std::vector<SceneSpec>, FormatError> read_scenes(const std::filesystem::path& path);
Result<void, FormatError> write_scenes(const std::filesystem::path& path, const std::vector<SceneSpec>& scenes);
Result<std::vector<QAItem>, FormatError> read_qa(const std::filesystem::path& path);
Result<void, FormatError> write_qa(const std::filesystem::path& path, const std::vector<QAItem>& items);

nlohmann::json noise_to_json(const NoiseConfig& noise);
Result<NoiseConfig, FormatError> noise_from_json(const nlohmann::json& j);

// Reads a JSONL file line by line, skipping blank lines.
Result<std::vector<nlohmann::json>, FormatError> read_jsonl(const std::filesystem::path& path);
Result<void, FormatError> write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

}  // namespace hintbox::world
