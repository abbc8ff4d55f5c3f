// SPDX-License-Identifier: Apache-2.0
#include "hintbox/data/pipeline.hpp"
#include "hintbox/eval/harness.hpp"
#include "hintbox/reward/reward.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace hintbox;
using namespace hintbox::data;

namespace {

std::vector<world::SceneSpec> scenes(int n, std::uint64_t seed = 0) {
  std::vector<world::SceneSpec> out;
  world::SceneParams p;
  p.n_objects = 5;
  for (int i = 0; i < n; ++i) out.push_back(*world::generate_scene(seed + static_cast<std::uint64_t>(i), p));
  return out;
}

skills::Toolbox toolbox() { return skills::make_toolbox(std::make_shared<world::OracleBackend>()); }

skills::SkillResult result(skills::SkillStatus status, std::vector<std::pair<std::string, bool>> q) {
  skills::SkillResult r;
  r.status = status;
  r.per_query = std::move(q);
  return r;
}

}  // namespace

TEST_CASE("consistency check examples") {
  using skills::SkillStatus;
  CHECK(consistency_check({"refrigerator", "sofa"},
                          result(SkillStatus::Partial, {{"refrigerator", false}, {"sofa", true}})) ==
        Consistency::Partial);
  CHECK(consistency_check({"refrigerator", "sofa"},
                          result(SkillStatus::Complete, {{"refrigerator", true}, {"sofa", true}})) ==
        Consistency::Complete);
  CHECK(consistency_check({"sofa"}, result(SkillStatus::Failed, {})) == Consistency::Empty);
  CHECK(consistency_check({"sofa"}, result(SkillStatus::Complete, {{"a sofa", true}})) == Consistency::Complete);
}

TEST_CASE("warm-up pairs") {
  const auto tb = toolbox();
  CHECK(build_warmup(scenes(2), 0, 1, tb).empty());
  const auto pairs = build_warmup(scenes(4), 6, 1, tb);
  REQUIRE(pairs.size() == 6);
  int depth = 0, mask = 0;
  for (const auto& p : pairs) {
    CHECK(p.base_image == "image-0");
    CHECK(p.augmented_view == "image-1");
    CHECK_FALSE(p.question.empty());
    if (p.view_kind == ViewKind::DepthMap) {
      ++depth;
      CHECK(p.answer == kDepthViewAnswer);
    } else {
      ++mask;
      CHECK(p.answer.starts_with("mask map"));
    }
  }
  CHECK(depth == 3);
  CHECK(mask == 3);
  const auto again = build_warmup(scenes(4), 6, 1, tb);
  CHECK(again[5].answer == pairs[5].answer);
}

TEST_CASE("mask view answer names the objects") {
  auto sc = scenes(1, 3);
  const auto pairs = build_warmup(sc, 2, 0, toolbox());
  for (const auto& p : pairs) {
    if (p.view_kind != ViewKind::MaskMap) continue;
    for (const auto& o : sc[0].objects) CHECK(p.answer.find(o.label) != std::string::npos);
  }
}

TEST_CASE("sft trajectories") {
  const auto items = sample_items(scenes(20), 64, 2);
  REQUIRE(items.size() == 64);
  const auto tb = toolbox();
  auto trajs = build_sft(items, tb, 0.25, 9);
  REQUIRE(trajs.ok());
  REQUIRE(trajs->size() == 64);
  int failures = 0;
  for (const auto& t : *trajs) {
    CAPTURE(t.text);
    const std::vector<std::string> tags = {"analy", "action", "obs", "ans"};
    CHECK(reward::format_reward(t.text, tags) == 0.0);
    auto parsed = grammar::parse_trajectory(t.text);
    REQUIRE(parsed.ok());
    CHECK(*parsed == t.turns);
    REQUIRE(t.turns.turns.size() >= 4);
    CHECK(t.turns.turns[0].kind == grammar::TurnKind::Analysis);
    CHECK(t.turns.turns[1].kind == grammar::TurnKind::Action);
    CHECK(t.turns.turns[2].kind == grammar::TurnKind::Observation);
    CHECK(t.turns.turns.back().kind == grammar::TurnKind::Answer);
    const auto gt = eval::ground_truth(t.qa);
    auto ans = grammar::extract_answer(t.turns, gt.kind);
    REQUIRE(ans.ok());
    if (t.failure_injected) {
      ++failures;
      CHECK(t.consistency == Consistency::Empty);
      CHECK(t.text.find(" failed: ") != std::string::npos);
      CHECK(t.turns.turns[t.turns.turns.size() - 2].content.find("image-0") != std::string::npos);
    } else {
      CHECK(*eval::score_answer(*ans, gt, 0.0));
    }
    if (t.consistency != Consistency::Complete) {
      CHECK(t.turns.turns[t.turns.turns.size() - 2].content.find("image-0") != std::string::npos);
    }
  }
  CHECK(failures == 16);
}

TEST_CASE("abs-dist trajectory carries the points") {
  auto sc = scenes(5);
  std::vector<world::QAItem> items;
  for (const auto& s : sc) {
    if (auto q = world::generate_qa(s, world::TaskType::AbsDist, 1); q.ok()) items.push_back(*q);
  }
  REQUIRE(items.size() >= 3);
  auto trajs = build_sft(items, toolbox(), 0.0, 1);
  REQUIRE(trajs.ok());
  for (const auto& t : *trajs) {
    const auto& obs = t.turns.turns[2];
    CHECK(obs.content.find(t.qa.entities[0] + ": [") != std::string::npos);
    CHECK(obs.content.find(t.qa.entities[1] + ": [") != std::string::npos);
    auto ans = grammar::extract_answer(t.turns, grammar::AnswerKind::Numeric);
    CHECK(ans->value == t.qa.answer_value);
  }
}

TEST_CASE("failure count and fraction bounds") {
  const auto items = sample_items(scenes(30), 160, 4);
  const auto tb = toolbox();
  for (double f : {0.0, 0.1875, 0.5, 1.0}) {
    auto trajs = build_sft(items, tb, f, 3);
    REQUIRE(trajs.ok());
    long n = 0;
    for (const auto& t : *trajs) n += t.failure_injected;
    CHECK(n == std::lround(f * 160));
  }
  CHECK(build_sft(items, tb, 1.5, 3).error().kind == DataErrorKind::InvalidFraction);
  CHECK(build_sft(items, tb, -0.1, 3).error().kind == DataErrorKind::InvalidFraction);
}

TEST_CASE("sft output is deterministic and writes images") {
  const auto items = sample_items(scenes(5), 10, 1);
  const auto dir = std::filesystem::temp_directory_path() / "hintbox_sft_test";
  std::filesystem::remove_all(dir);
  auto a = build_sft(items, toolbox(), 0.3, 5, dir);
  auto b = build_sft(items, toolbox(), 0.3, 5);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  for (std::size_t i = 0; i < a->size(); ++i) {
    CHECK((*a)[i].text == (*b)[i].text);
    for (const auto& [ref, path] : (*a)[i].images) CHECK(std::filesystem::exists(path));
    const auto j = sft_to_json((*a)[i]);
    CHECK(j["schema"] == "sft.v1");
  }
  CHECK_FALSE((*a)[0].images.empty());
}
