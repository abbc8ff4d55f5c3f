// SPDX-License-Identifier: Apache-2.0
#include "hintbox/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace hintbox::reward {

using nlohmann::json;

std::string_view reward_error_name(RewardErrorKind k) noexcept {
  switch (k) {
    case RewardErrorKind::GroupTooSmall: return "GroupTooSmall";
    case RewardErrorKind::ShapeMismatch: return "ShapeMismatch";
    case RewardErrorKind::EmptyInput: return "EmptyInput";
    case RewardErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "unknown";
}

Result<RewardConfig, RewardError> config_from_json(const json& j) {
  RewardConfig c;
  try {
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      c.weights.correct = w.value("correct", c.weights.correct);
      c.weights.format = w.value("format", c.weights.format);
      c.weights.tool = w.value("tool", c.weights.tool);
    }
    c.alpha = j.value("alpha", c.alpha);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.beta = j.value("beta", c.beta);
    c.numeric_tolerance = j.value("numeric_tolerance", c.numeric_tolerance);
    c.tags = j.value("tags", c.tags);
  } catch (const std::exception& e) {
    return fail(RewardError{RewardErrorKind::InvalidConfig, e.what()});
  }
  const bool finite = std::isfinite(c.weights.correct) && std::isfinite(c.weights.format) &&
                      std::isfinite(c.weights.tool) && std::isfinite(c.beta);
  if (!finite) return fail(RewardError{RewardErrorKind::InvalidConfig, "weights must be finite"});
  if (!(c.alpha > 0) || !std::isfinite(c.alpha)) return fail(RewardError{RewardErrorKind::InvalidConfig, "alpha must be > 0"});
  if (!(c.epsilon >= 0) || c.epsilon >= 1) {
    return fail(RewardError{RewardErrorKind::InvalidConfig, "epsilon must be in [0, 1)"});
  }
  if (c.tags.empty()) return fail(RewardError{RewardErrorKind::InvalidConfig, "tag set is empty"});
  return c;
}

json config_to_json(const RewardConfig& c) {
  return {{"weights", {{"correct", c.weights.correct}, {"format", c.weights.format}, {"tool", c.weights.tool}}},
          {"alpha", c.alpha},
          {"epsilon", c.epsilon},
          {"beta", c.beta},
          {"numeric_tolerance", c.numeric_tolerance},
          {"tags", c.tags}};
}

Result<RewardConfig, RewardError> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return fail(RewardError{RewardErrorKind::InvalidConfig, "cannot open " + path.string()});
  try {
    return config_from_json(json::parse(in));
  } catch (const std::exception& e) {
    return fail(RewardError{RewardErrorKind::InvalidConfig, e.what()});
  }
}

double format_reward(std::string_view text, std::span<const std::string> tags) {
  return grammar::check_tag_balance(text, tags).balanced ? 0.0 : -1.0;
}

double correctness_reward(const std::optional<grammar::NormalizedAnswer>& pred, const grammar::NormalizedAnswer& gt,
                          double alpha) {
  if (!pred || pred->kind != gt.kind) return 0.0;
  if (gt.kind == grammar::AnswerKind::MultipleChoice) return pred->choice == gt.choice ? 1.0 : 0.0;
  if (!std::isfinite(pred->value) || !std::isfinite(gt.value)) return 0.0;
  return std::exp(-alpha * std::abs(pred->value - gt.value));
}

double tool_reward(std::span<const bool> call_success, bool answer_correct) {
  const bool any = std::any_of(call_success.begin(), call_success.end(), [](bool b) { return b; });
  return any && answer_correct ? 1.0 : 0.0;
}

double combine(double r_format, double r_correct, double r_tool, const RewardWeights& w) {
  return w.format * r_format + w.correct * r_correct + w.tool * r_tool;
}

std::optional<grammar::NormalizedAnswer> answer_from_text(std::string_view text, grammar::AnswerKind kind,
                                                          const grammar::GrammarConfig& grammar) {
  if (auto traj = grammar::parse_trajectory(text, grammar)) {
    auto a = grammar::extract_answer(*traj, kind);
    return a ? std::optional(*a) : std::nullopt;
  }
  const auto tag = grammar.tag_for(grammar::TurnKind::Answer).value_or("ans");
  const auto open = "<" + tag + ">";
  const auto start = text.rfind(open);
  if (start == std::string_view::npos) return std::nullopt;
  auto body = text.substr(start + open.size());
  if (const auto end = body.find("</" + tag + ">"); end != std::string_view::npos) body = body.substr(0, end);
  auto a = grammar::extract_answer_text(body, kind);
  return a ? std::optional(*a) : std::nullopt;
}

std::optional<grammar::NormalizedAnswer> normalize_ground_truth(std::string_view gt, grammar::AnswerKind kind) {
  auto a = grammar::extract_answer_text(gt, kind);
  return a ? std::optional(*a) : std::nullopt;
}

RewardBreakdown score_rollout(std::string_view text, const grammar::NormalizedAnswer& gt,
                              std::span<const bool> call_success, const RewardConfig& cfg,
                              std::optional<bool> answer_correct) {
  grammar::GrammarConfig grammar;
  const auto pred = answer_from_text(text, gt.kind, grammar);
  RewardBreakdown b;
  b.r_format = format_reward(text, cfg.tags);
  b.r_correct = correctness_reward(pred, gt, cfg.alpha);
  bool correct = false;
  if (answer_correct) {
    correct = *answer_correct;
  } else if (pred && gt.kind == grammar::AnswerKind::MultipleChoice) {
    correct = pred->choice == gt.choice;
  } else if (pred && gt.value > 0) {
    const double ratio = pred->value / gt.value;
    correct = ratio >= 1 - cfg.numeric_tolerance && ratio <= 1 + cfg.numeric_tolerance;
  } else if (pred) {
    correct = pred->value == gt.value;
  }
  b.r_tool = tool_reward(call_success, correct);
  b.r_all = combine(b.r_format, b.r_correct, b.r_tool, cfg.weights);
  return b;
}

Result<std::vector<double>, RewardError> group_advantages(std::span<const double> rewards) {
  const auto g = rewards.size();
  if (g < 2) return fail(RewardError{RewardErrorKind::GroupTooSmall, "group needs at least 2 rewards"});
  double sum = 0;
  for (double r : rewards) sum += r;
  const double mu = sum / static_cast<double>(g);
  double sq = 0;
  for (double r : rewards) sq += (r - mu) * (r - mu);
  const double sigma = std::sqrt(sq / static_cast<double>(g));
  std::vector<double> out(g, 0.0);
  if (!(sigma >= 1e-8)) return out;
  for (std::size_t i = 0; i < g; ++i) out[i] = (rewards[i] - mu) / sigma;
  return out;
}

Result<GrpoResult, RewardError> grpo_surrogate(const GrpoBatch& b) {
  const auto mismatch = [](std::string m) { return fail(RewardError{RewardErrorKind::ShapeMismatch, std::move(m)}); };
  GrpoResult res;
  if (!b.advantages.empty()) {
    res.advantages = b.advantages;
  } else {
    auto adv = group_advantages(b.rewards);
    if (!adv) return fail(adv.error());
    res.advantages = std::move(adv).value();
  }
  const auto g = res.advantages.size();
  if (g == 0) return fail(RewardError{RewardErrorKind::EmptyInput, "empty group"});
  if (b.logp_theta.size() != g || b.logp_old.size() != g || b.logp_ref.size() != g) {
    return mismatch("expected " + std::to_string(g) + " sequences per log-prob array");
  }
  if (!b.rewards.empty() && !b.advantages.empty() && b.rewards.size() != g) {
    return mismatch("rewards and advantages differ in length");
  }
  double objective = 0, kl_total = 0, ratio_sum = 0;
  std::size_t tokens = 0, clipped = 0;
  const double lo = 1 - b.epsilon, hi = 1 + b.epsilon;
  for (std::size_t i = 0; i < g; ++i) {
    const auto& th = b.logp_theta[i];
    const auto& old = b.logp_old[i];
    const auto& ref = b.logp_ref[i];
    if (old.size() != th.size() || ref.size() != th.size()) {
      return mismatch("sequence " + std::to_string(i) + " has unequal log-prob lengths");
    }
    if (th.empty()) return mismatch("sequence " + std::to_string(i) + " is empty");
    const double a = res.advantages[i];
    double surr = 0, kl = 0;
    for (std::size_t t = 0; t < th.size(); ++t) {
      const double ratio = std::exp(th[t] - old[t]);
      const double clipped_ratio = std::clamp(ratio, lo, hi);
      surr += std::min(ratio * a, clipped_ratio * a);
      const double d = ref[t] - th[t];
      kl += std::exp(d) - d - 1;
      ratio_sum += ratio;
      if (ratio < lo || ratio > hi) ++clipped;
      ++tokens;
    }
    const double n = static_cast<double>(th.size());
    objective += surr / n - b.beta * (kl / n);
    kl_total += kl / n;
  }
  res.loss = -(objective / static_cast<double>(g));
  res.kl = kl_total / static_cast<double>(g);
  res.mean_ratio = ratio_sum / static_cast<double>(tokens);
  res.clip_fraction = static_cast<double>(clipped) / static_cast<double>(tokens);
  return res;
}

Result<double, RewardError> token_nll(std::span<const double> logprobs) {
  if (logprobs.empty()) return fail(RewardError{RewardErrorKind::EmptyInput, "no tokens"});
  double sum = 0;
  for (double l : logprobs) sum += l;
  return -(sum / static_cast<double>(logprobs.size()));
}

Result<GrpoBatch, RewardError> batch_from_json(const json& j, const RewardConfig& cfg) {
  try {
    GrpoBatch b;
    b.rewards = j.value("rewards", std::vector<double>{});
    b.advantages = j.value("advantages", std::vector<double>{});
    b.logp_theta = j.at("logp_theta").get<std::vector<std::vector<double>>>();
    b.logp_old = j.at("logp_old").get<std::vector<std::vector<double>>>();
    b.logp_ref = j.at("logp_ref").get<std::vector<std::vector<double>>>();
    b.epsilon = j.value("epsilon", cfg.epsilon);
    b.beta = j.value("beta", cfg.beta);
    return b;
  } catch (const std::exception& e) {
    return fail(RewardError{RewardErrorKind::ShapeMismatch, e.what()});
  }
}

json result_to_json(const GrpoResult& r) {
  return {{"loss", r.loss},
          {"advantages", r.advantages},
          {"diagnostics", {{"mean_ratio", r.mean_ratio}, {"clip_fraction", r.clip_fraction}, {"kl", r.kl}}}};
}

json breakdown_to_json(const RewardBreakdown& b) {
  return {{"r_format", b.r_format}, {"r_correct", b.r_correct}, {"r_tool", b.r_tool}, {"r_all", b.r_all}};
}

}  // namespace hintbox::reward
