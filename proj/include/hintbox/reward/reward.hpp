// SPDX-License-Identifier: Apache-2.0
#pragma once

// Rollout rewards, group-normalized advantages, the clipped policy surrogate
// with KL penalty, and the token-level NLL.
//
// All sums run left to right over tokens, then over the group, so results
// are bit-reproducible for fixed inputs.

#include "hintbox/common/result.hpp"
#include "hintbox/grammar/trajectory.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hintbox::reward {

struct RewardWeights {
  double correct = 1.0;
  double format = 0.3;
  double tool = 0.3;
};

struct RewardConfig {
  RewardWeights weights;
  double alpha = 1.0;    // decay of the numeric correctness term
  double epsilon = 0.2;  // ratio clip
  double beta = 0.01;    // KL weight
  // Relative tolerance deciding "answer correct" for the tool term on numeric
  // items when the caller does not supply it.
  double numeric_tolerance = 0.25;
  std::vector<std::string> tags = {"analy", "action", "obs", "ans"};
};

enum class RewardErrorKind { GroupTooSmall, ShapeMismatch, EmptyInput, InvalidConfig };

std::string_view reward_error_name(RewardErrorKind k) noexcept;

struct RewardError {
  RewardErrorKind kind;
  std::string message;
};

Result<RewardConfig, RewardError> config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RewardConfig& cfg);
Result<RewardConfig, RewardError> load_config(const std::filesystem::path& path);

// 0 when every tag is balanced, -1 otherwise.
double format_reward(std::string_view text, std::span<const std::string> tags);

// Indicator for multiple choice, exp(-alpha |pred - gt|) for numeric.
// An absent prediction scores 0.
double correctness_reward(const std::optional<grammar::NormalizedAnswer>& pred, const grammar::NormalizedAnswer& gt,
                          double alpha);

// 1 iff at least one call succeeded and the final answer is correct.
double tool_reward(std::span<const bool> call_success, bool answer_correct);

struct RewardBreakdown {
  double r_format = 0;
  double r_correct = 0;
  double r_tool = 0;
  double r_all = 0;
  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

double combine(double r_format, double r_correct, double r_tool, const RewardWeights& w);

// Answer of a raw rollout; falls back to the last <ans> region when the text
// does not parse.
std::optional<grammar::NormalizedAnswer> answer_from_text(std::string_view text, grammar::AnswerKind kind,
                                                          const grammar::GrammarConfig& grammar = {});

std::optional<grammar::NormalizedAnswer> normalize_ground_truth(std::string_view gt, grammar::AnswerKind kind);

// Full breakdown of one rollout. `answer_correct` overrides the built-in
// decision used by the tool term.
RewardBreakdown score_rollout(std::string_view text, const grammar::NormalizedAnswer& gt,
                              std::span<const bool> call_success, const RewardConfig& cfg,
                              std::optional<bool> answer_correct = std::nullopt);

// Population mean/sigma normalization; all zeros when sigma < 1e-8.
Result<std::vector<double>, RewardError> group_advantages(std::span<const double> rewards);

struct GrpoBatch {
  std::vector<double> rewards;
  // Overrides the advantages derived from `rewards` when non-empty.
  std::vector<double> advantages;
  std::vector<std::vector<double>> logp_theta;
  std::vector<std::vector<double>> logp_old;
  std::vector<std::vector<double>> logp_ref;
  double epsilon = 0.2;
  double beta = 0.01;
};

struct GrpoResult {
  double loss = 0;
  double mean_ratio = 0;
  double clip_fraction = 0;
  double kl = 0;
  std::vector<double> advantages;
};

Result<GrpoResult, RewardError> grpo_surrogate(const GrpoBatch& batch);

// -(1/T) sum log p.
Result<double, RewardError> token_nll(std::span<const double> logprobs);

Result<GrpoBatch, RewardError> batch_from_json(const nlohmann::json& j, const RewardConfig& cfg);
nlohmann::json result_to_json(const GrpoResult& r);
nlohmann::json breakdown_to_json(const RewardBreakdown& b);

}  // namespace hintbox::reward
