// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/result.hpp"
#include "hintbox/eval/agent.hpp"
#include "hintbox/grammar/trajectory.hpp"
#include "hintbox/reward/reward.hpp"
#include "hintbox/skills/skills.hpp"
#include "hintbox/world/world.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hintbox::eval {

struct EpisodeLimits {
  int max_calls = 8;
  int max_turns = 6;
  std::chrono::milliseconds deadline{60000};
};

enum class CallOutcome { Success, Partial, Failed };

std::string_view outcome_name(CallOutcome o) noexcept;
std::optional<CallOutcome> parse_outcome(std::string_view s) noexcept;

struct ToolCallRecord {
  grammar::ActionCall call;
  CallOutcome outcome = CallOutcome::Failed;
  std::optional<std::string> error;  // ToolError / SkillError kind name
  std::string detail;
};

struct EpisodeRecord {
  world::QAItem qa;
  std::string transcript;
  grammar::Trajectory trajectory;
  std::vector<ToolCallRecord> tool_calls;
  std::optional<grammar::NormalizedAnswer> answer;
  bool answer_correct = false;
  int n_calls = 0;
  std::int64_t wall_ms = 0;
  std::optional<std::string> agent_error;
  reward::RewardBreakdown reward;
};

struct EpisodeOptions {
  EpisodeLimits limits;
  double r = 0.25;
  std::uint64_t seed = 0;
  reward::RewardConfig reward;
  // Rasters are written under <episode_dir>/<episode id>/ when set.
  std::optional<std::filesystem::path> episode_dir;
};

std::string episode_id(const world::QAItem& qa);

EpisodeRecord run_episode(Agent& agent, const world::QAItem& qa, const skills::Toolbox& toolbox,
                          const EpisodeOptions& options);

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

// Runs every item, `jobs` episodes at a time; records come back in item order.
std::vector<EpisodeRecord> run_eval(const std::vector<world::QAItem>& items, const AgentFactory& make_agent,
                                    const skills::Toolbox& toolbox, const EpisodeOptions& options, int jobs = 1);

enum class ScoreErrorKind { NonpositiveGroundTruth, KindMismatch };

struct ScoreError {
  ScoreErrorKind kind;
  std::string message;
};

// Multiple choice: equal letters. Numeric: pred / gt in [1 - r, 1 + r], inclusive.
Result<bool, ScoreError> score_answer(const grammar::NormalizedAnswer& pred, const grammar::NormalizedAnswer& gt,
                                      double r);

grammar::NormalizedAnswer ground_truth(const world::QAItem& qa);

struct EvalReport {
  int n_episodes = 0;
  double accuracy = 0;
  double tool_sr = 0;   // tool-using episodes whose calls all succeeded
  double call_sr = 0;   // per call
  double acc_w_suc = 0;
  double acc_w_uns = 0;
  double acc_no_call = 0;
  int n_suc = 0;
  int n_uns = 0;
  int n_no_call = 0;
  double multistep_rate = 0;
  std::map<std::string, double> usage_distribution;  // skill -> share of all calls
  std::map<std::string, double> task_accuracy;
  double mean_reward = 0;
};

enum class MetricsErrorKind { EmptyInput };

struct MetricsError {
  MetricsErrorKind kind;
  std::string message;
};

Result<EvalReport, MetricsError> compute_metrics(const std::vector<EpisodeRecord>& records);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_table(const EvalReport& report);

nlohmann::json record_to_json(const EpisodeRecord& rec);

}  // namespace hintbox::eval
