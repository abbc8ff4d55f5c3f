// SPDX-License-Identifier: Apache-2.0
#include "hintbox/reward/reward.hpp"

#include "../support/generators.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hintbox;
using namespace hintbox::reward;
using grammar::AnswerKind;
using grammar::NormalizedAnswer;

namespace {

const std::vector<std::string> kTags = {"analy", "action", "obs", "ans"};

NormalizedAnswer mc(std::string c) { return {AnswerKind::MultipleChoice, std::move(c), 0.0}; }
NormalizedAnswer num(double v) { return {AnswerKind::Numeric, "", v}; }

}  // namespace

TEST_CASE("format reward examples") {
  CHECK(format_reward("<analy>a</analy><action>b</action><ans>c</ans>", kTags) == 0.0);
  CHECK(format_reward("<analy>a</analy><action>b<ans>c</ans>", kTags) == -1.0);
  CHECK(format_reward("", kTags) == 0.0);
}

TEST_CASE("format reward tracks tag balance") {
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const auto soup = testgen::random_tag_soup(rng, kTags);
    CHECK((format_reward(soup, kTags) == 0.0) == grammar::check_tag_balance(soup, kTags).balanced);
  }
}

TEST_CASE("correctness reward examples") {
  CHECK(correctness_reward(mc("B"), mc("B"), 1.0) == 1.0);
  CHECK(correctness_reward(mc("A"), mc("B"), 1.0) == 0.0);
  CHECK(correctness_reward(num(3.0 + std::numbers::ln2), num(3.0), 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(correctness_reward(num(2.0), num(3.0), 0.5) - 0.60653065971263342) < 1e-12);
  CHECK(correctness_reward(std::nullopt, mc("B"), 1.0) == 0.0);
  CHECK(correctness_reward(num(4.0), num(4.0), 1.0) == 1.0);
}

TEST_CASE("numeric correctness decreases with error") {
  double prev = 1.0;
  for (int k = 1; k < 100; ++k) {
    const double r = correctness_reward(num(5.0 + 0.1 * k), num(5.0), 1.0);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("tool reward examples") {
  const bool one[] = {true};
  const bool mixed[] = {false, true};
  const bool bad[] = {false};
  CHECK(tool_reward(one, true) == 1.0);
  CHECK(tool_reward(one, false) == 0.0);
  CHECK(tool_reward({}, true) == 0.0);
  CHECK(tool_reward(mixed, true) == 1.0);
  CHECK(tool_reward(bad, true) == 0.0);
}

TEST_CASE("combine examples and linearity") {
  const RewardWeights w;
  CHECK(combine(0, 1, 1, w) == 1.3);
  CHECK(combine(-1, 0, 0, w) == -0.3);
  CHECK(combine(0, 0, 0, w) == 0.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double a[3] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double b[3] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double lhs = combine(a[0] + b[0], a[1] + b[1], a[2] + b[2], w);
    const double rhs = combine(a[0], a[1], a[2], w) + combine(b[0], b[1], b[2], w);
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("score rollout") {
  RewardConfig cfg;
  const bool ok[] = {true};
  auto b = score_rollout("<analy>x</analy><action>A()</action><obs>o</obs><ans>B</ans>", mc("B"), ok, cfg);
  CHECK(b == RewardBreakdown{0.0, 1.0, 1.0, 1.3});
  auto broken = score_rollout("<analy>x<ans>B</ans>", mc("B"), {}, cfg);
  CHECK(broken.r_format == -1.0);
  CHECK(broken.r_correct == 1.0);
  CHECK(broken.r_all == combine(-1, 1, 0, cfg.weights));
  auto numeric = score_rollout("<ans>5</ans>", num(4.0), ok, cfg);
  CHECK(numeric.r_tool == 1.0);
  CHECK(numeric.r_correct == std::exp(-1.0));
  auto outside = score_rollout("<ans>5.5</ans>", num(4.0), ok, cfg);
  CHECK(outside.r_tool == 0.0);
  CHECK(score_rollout("<ans>5.5</ans>", num(4.0), ok, cfg, true).r_tool == 1.0);
}

TEST_CASE("group advantages examples") {
  const double a[] = {1, 1, 0, 0};
  CHECK(*group_advantages(a) == std::vector<double>{1, 1, -1, -1});
  const double c[] = {0.7, 0.7, 0.7, 0.7};
  CHECK(*group_advantages(c) == std::vector<double>{0, 0, 0, 0});
  const double two[] = {2, 0};
  CHECK(*group_advantages(two) == std::vector<double>{1, -1});
  const double one[] = {1};
  CHECK(group_advantages(one).error().kind == RewardErrorKind::GroupTooSmall);
}

TEST_CASE("advantages are standardized") {
  Rng rng(31);
  for (int g = 0; g < 500; ++g) {
    std::vector<double> r(2 + rng.below(30));
    for (auto& x : r) x = rng.uniform(-2, 2);
    auto adv = group_advantages(r);
    REQUIRE(adv.ok());
    long double mu = 0, var = 0;
    for (double x : *adv) mu += x;
    mu /= adv->size();
    for (double x : *adv) var += (x - mu) * (x - mu);
    var /= adv->size();
    CHECK(std::abs(static_cast<double>(mu)) < 1e-9);
    CHECK(std::abs(std::sqrt(static_cast<double>(var)) - 1.0) < 1e-9);
  }
}

TEST_CASE("grpo surrogate examples") {
  GrpoBatch b;
  b.rewards = {1, 1, 0, 0};
  b.logp_theta = {{-1, -2}, {-0.5}, {-3, -1, -2}, {-0.1}};
  b.logp_old = b.logp_theta;
  b.logp_ref = b.logp_theta;
  b.beta = 0.0;
  auto r = grpo_surrogate(b);
  REQUIRE(r.ok());
  double mean_adv = 0;
  for (double a : r->advantages) mean_adv += a;
  mean_adv /= 4;
  CHECK(r->loss == -mean_adv);
  CHECK(r->clip_fraction == 0.0);
  CHECK(r->mean_ratio == 1.0);

  GrpoBatch zero;
  zero.rewards = {0.5, 0.5};
  zero.logp_theta = {{-1}, {-2}};
  zero.logp_old = {{-1.1}, {-2.2}};
  zero.logp_ref = zero.logp_theta;
  auto z = grpo_surrogate(zero);
  CHECK(z->loss == 0.0);
  CHECK(z->kl == 0.0);

  GrpoBatch clip;
  clip.advantages = {1.0};
  clip.rewards = {0.0};
  clip.logp_old = {{-2.0}};
  clip.logp_theta = {{-2.0 + std::log(1.5)}};
  clip.logp_ref = clip.logp_theta;
  clip.beta = 0.0;
  clip.epsilon = 0.2;
  auto c = grpo_surrogate(clip);
  REQUIRE(c.ok());
  CHECK(c->loss == -1.2);
  CHECK(c->clip_fraction == 1.0);
}

TEST_CASE("grpo surrogate against a direct evaluation") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    GrpoBatch b;
    const auto g = 2 + rng.below(6);
    b.beta = rng.uniform(0, 0.1);
    b.epsilon = rng.uniform(0.05, 0.4);
    for (std::size_t i = 0; i < g; ++i) {
      b.rewards.push_back(static_cast<double>(rng.below(3)));
      const auto t = 1 + rng.below(10);
      std::vector<double> th, old, ref;
      for (std::size_t k = 0; k < t; ++k) {
        th.push_back(rng.uniform(-5, 0));
        old.push_back(th.back() + rng.normal(0, 0.3));
        ref.push_back(th.back() + rng.normal(0, 0.3));
      }
      b.logp_theta.push_back(th);
      b.logp_old.push_back(old);
      b.logp_ref.push_back(ref);
    }
    auto r = grpo_surrogate(b);
    REQUIRE(r.ok());
    // Independent evaluation in long double.
    long double mu = 0, var = 0;
    for (double x : b.rewards) mu += x;
    mu /= g;
    for (double x : b.rewards) var += (x - mu) * (x - mu);
    const long double sd = std::sqrt(var / g);
    long double obj = 0;
    for (std::size_t i = 0; i < g; ++i) {
      const long double adv = sd < 1e-8L ? 0.0L : (b.rewards[i] - mu) / sd;
      long double surr = 0, kl = 0;
      const auto t = b.logp_theta[i].size();
      for (std::size_t k = 0; k < t; ++k) {
        const long double ratio = std::exp(static_cast<long double>(b.logp_theta[i][k]) - b.logp_old[i][k]);
        const long double clipped = std::clamp(ratio, 1.0L - b.epsilon, 1.0L + b.epsilon);
        surr += std::min(ratio * adv, clipped * adv);
        const long double d = static_cast<long double>(b.logp_ref[i][k]) - b.logp_theta[i][k];
        kl += std::exp(d) - d - 1.0L;
      }
      obj += surr / t - b.beta * kl / t;
    }
    obj /= g;
    CHECK(std::abs(r->loss - static_cast<double>(-obj)) < 1e-12);
    CHECK(r->kl >= 0.0);
  }
}

TEST_CASE("grpo shape checks") {
  GrpoBatch b;
  b.rewards = {1, 0};
  b.logp_theta = {{-1}, {-1}};
  b.logp_old = {{-1}};
  b.logp_ref = {{-1}, {-1}};
  CHECK(grpo_surrogate(b).error().kind == RewardErrorKind::ShapeMismatch);
  b.logp_old = {{-1}, {-1, -2}};
  CHECK(grpo_surrogate(b).error().kind == RewardErrorKind::ShapeMismatch);
  b.logp_old = {{-1}, {}};
  b.logp_theta = {{-1}, {}};
  b.logp_ref = {{-1}, {}};
  CHECK_FALSE(grpo_surrogate(b).ok());
}

TEST_CASE("token nll") {
  const double z[] = {0.0, 0.0};
  CHECK(*token_nll(z) == 0.0);
  const double l[] = {-std::numbers::ln2, -std::numbers::ln2};
  CHECK(*token_nll(l) == std::numbers::ln2);
  CHECK(token_nll({}).error().kind == RewardErrorKind::EmptyInput);
  Rng rng(5);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.uniform(-10, 0);
  long double ref = 0;
  for (auto it = v.rbegin(); it != v.rend(); ++it) ref += *it;
  CHECK(std::abs(*token_nll(v) + static_cast<double>(ref / 1000)) < 1e-12);
}

TEST_CASE("config json") {
  auto cfg = config_from_json(nlohmann::json{{"weights", {{"format", 0.5}}}, {"alpha", 2.0}});
  REQUIRE(cfg.ok());
  CHECK(cfg->weights.format == 0.5);
  CHECK(cfg->weights.correct == 1.0);
  CHECK(cfg->alpha == 2.0);
  auto back = config_from_json(config_to_json(*cfg));
  CHECK(back->weights.format == 0.5);
  CHECK(config_from_json(nlohmann::json{{"epsilon", -1.0}}).error().kind == RewardErrorKind::InvalidConfig);
  CHECK(config_from_json(nlohmann::json{{"tags", nlohmann::json::array()}}).error().kind ==
        RewardErrorKind::InvalidConfig);
}
