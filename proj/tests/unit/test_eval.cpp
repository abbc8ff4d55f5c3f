// SPDX-License-Identifier: Apache-2.0
#include "hintbox/common/rng.hpp"
#include "hintbox/eval/agent.hpp"
#include "hintbox/eval/harness.hpp"
#include "hintbox/eval/policy.hpp"
#include "hintbox/world/world.hpp"

#include <doctest.h>
#include <httplib.h>

#include <mutex>
#include <thread>

using namespace hintbox;
using namespace hintbox::eval;
using grammar::AnswerKind;
using grammar::NormalizedAnswer;
using nlohmann::json;

namespace {

NormalizedAnswer num(double v) { return {AnswerKind::Numeric, "", v}; }
NormalizedAnswer mc(std::string c) { return {AnswerKind::MultipleChoice, std::move(c), 0.0}; }

EpisodeRecord crafted(std::vector<CallOutcome> outcomes, bool correct, std::string skill = "CountObjects") {
  EpisodeRecord r;
  for (auto o : outcomes) {
    ToolCallRecord c;
    c.call.skill_name = skill;
    c.outcome = o;
    r.tool_calls.push_back(c);
  }
  r.n_calls = static_cast<int>(outcomes.size());
  r.answer_correct = correct;
  return r;
}

world::QAItem item_for(world::TaskType task, std::uint64_t seed) {
  for (std::uint64_t s = seed;; ++s) {
    auto scene = world::generate_scene(s);
    REQUIRE(scene.ok());
    auto qa = world::generate_qa(*scene, task, s);
    if (qa.ok()) return *qa;
  }
}

skills::Toolbox oracle_toolbox(double fault = 0.0) {
  skills::FaultConfig f;
  f.probability = fault;
  return skills::make_toolbox(std::make_shared<world::OracleBackend>(), f);
}

}  // namespace

TEST_CASE("score_answer examples") {
  CHECK(*score_answer(num(5.0), num(4.0), 0.25));
  CHECK(*score_answer(num(3.0), num(4.0), 0.25));
  CHECK_FALSE(*score_answer(num(5.01), num(4.0), 0.25));
  CHECK_FALSE(*score_answer(num(2.99), num(4.0), 0.25));
  CHECK(*score_answer(mc("B"), mc("B"), 0.25));
  CHECK_FALSE(*score_answer(mc("A"), mc("B"), 0.25));
  CHECK(score_answer(num(1.0), num(0.0), 0.25).error().kind == ScoreErrorKind::NonpositiveGroundTruth);
  CHECK(score_answer(num(1.0), num(-2.0), 0.25).error().kind == ScoreErrorKind::NonpositiveGroundTruth);
  CHECK(score_answer(mc("A"), num(2.0), 0.25).error().kind == ScoreErrorKind::KindMismatch);
}

TEST_CASE("metrics on crafted records") {
  std::vector<EpisodeRecord> recs;
  for (int i = 0; i < 9; ++i) recs.push_back(crafted({CallOutcome::Success}, i < 8));
  recs.push_back(crafted({CallOutcome::Failed}, false));
  auto m = compute_metrics(recs);
  REQUIRE(m.ok());
  CHECK(m->tool_sr == 0.9);
  CHECK(m->acc_w_suc == 8.0 / 9.0);
  CHECK(m->acc_w_uns == 0.0);
  CHECK(m->accuracy == 0.8);
  CHECK(m->n_episodes == 10);

  std::vector<EpisodeRecord> multi;
  for (int i = 0; i < 10; ++i) {
    multi.push_back(i < 2 ? crafted({CallOutcome::Success, CallOutcome::Success}, true) : crafted({CallOutcome::Success}, true));
  }
  CHECK(compute_metrics(multi)->multistep_rate == 0.2);

  CHECK(compute_metrics({}).error().kind == MetricsErrorKind::EmptyInput);
}

TEST_CASE("usage distribution reproduces fixture proportions") {
  std::vector<EpisodeRecord> recs;
  const std::vector<std::pair<std::string, int>> counts = {
      {"SegmentObjects", 370}, {"EstimateSize", 123}, {"CountObjects", 250}, {"Get3DPoint", 257}};
  for (const auto& [skill, n] : counts) {
    for (int i = 0; i < n; ++i) recs.push_back(crafted({CallOutcome::Success}, true, skill));
  }
  auto m = compute_metrics(recs);
  REQUIRE(m.ok());
  CHECK(m->usage_distribution.at("SegmentObjects") == 0.37);
  CHECK(m->usage_distribution.at("EstimateSize") == 0.123);
  double total = 0;
  for (const auto& [k, v] : m->usage_distribution) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("partition identity and bounds on random records") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EpisodeRecord> recs;
    for (int i = 0, n = 1 + static_cast<int>(rng.below(60)); i < n; ++i) {
      std::vector<CallOutcome> outs(rng.below(4));
      for (auto& o : outs) o = static_cast<CallOutcome>(rng.below(3));
      recs.push_back(crafted(outs, rng.bernoulli(0.5)));
    }
    auto m = compute_metrics(recs);
    REQUIRE(m.ok());
    CHECK(m->n_suc + m->n_uns + m->n_no_call == m->n_episodes);
    const double mix = (m->acc_w_suc * m->n_suc + m->acc_w_uns * m->n_uns + m->acc_no_call * m->n_no_call) / m->n_episodes;
    CHECK(std::abs(mix - m->accuracy) < 1e-12);
    for (double f : {m->accuracy, m->tool_sr, m->call_sr, m->acc_w_suc, m->acc_w_uns, m->multistep_rate}) {
      CHECK((f >= 0.0 && f <= 1.0));
    }
  }
}

TEST_CASE("oracle agent on a count item") {
  const auto qa = item_for(world::TaskType::Count, 3);
  OracleAgent agent;
  EpisodeOptions opts;
  const auto rec = run_episode(agent, qa, oracle_toolbox(), opts);
  CHECK(rec.n_calls == 1);
  REQUIRE(rec.tool_calls.size() == 1);
  CHECK(rec.tool_calls[0].outcome == CallOutcome::Success);
  CHECK(rec.answer_correct);
  CHECK(rec.reward.r_all == 1.3);
  auto reparsed = grammar::parse_trajectory(rec.transcript);
  REQUIRE(reparsed.ok());
  CHECK(*reparsed == rec.trajectory);
}

TEST_CASE("episode records are reproducible") {
  const auto qa = item_for(world::TaskType::SizeEst, 8);
  OracleAgent a, b;
  EpisodeOptions opts;
  opts.seed = 5;
  const auto tb = oracle_toolbox(0.3);
  const auto r1 = run_episode(a, qa, tb, opts);
  const auto r2 = run_episode(b, qa, tb, opts);
  CHECK(r1.transcript == r2.transcript);
}

TEST_CASE("no-tool agent") {
  const auto qa = item_for(world::TaskType::RelDir, 1);
  NoToolAgent agent;
  const auto rec = run_episode(agent, qa, oracle_toolbox(), {});
  CHECK(rec.n_calls == 0);
  REQUIRE(rec.answer.has_value());
  CHECK(rec.answer->choice == "A");
  CHECK(rec.answer_correct == (qa.answer == "A"));
}

TEST_CASE("call budget") {
  const auto qa = item_for(world::TaskType::Count, 2);
  OracleAgent agent;
  EpisodeOptions opts;
  opts.limits.max_calls = 0;
  const auto rec = run_episode(agent, qa, oracle_toolbox(), opts);
  CHECK(rec.n_calls == 0);
  CHECK(rec.transcript.find("call budget exhausted") != std::string::npos);
  CHECK(rec.answer.has_value());
}

namespace {

class ChattyAgent final : public Agent {
 public:
  [[nodiscard]] std::string_view name() const override { return "chatty"; }
  Result<std::string, AgentError> next_turn(const AgentView&) override { return std::string("<analy>hmm</analy>"); }
};

}  // namespace

TEST_CASE("turn limit ends the episode") {
  const auto qa = item_for(world::TaskType::Count, 2);
  ChattyAgent agent;
  EpisodeOptions opts;
  opts.limits.max_turns = 3;
  const auto rec = run_episode(agent, qa, oracle_toolbox(), opts);
  CHECK_FALSE(rec.answer_correct);
  CHECK(rec.trajectory.turns.size() == 3);
}

TEST_CASE("unreachable remote agent is an incorrect zero-call episode") {
  const auto qa = item_for(world::TaskType::Count, 2);
  RemoteAgentConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.timeout = std::chrono::milliseconds(200);
  RemoteChatAgent agent(cfg);
  const auto rec = run_episode(agent, qa, oracle_toolbox(), {});
  CHECK(rec.agent_error.has_value());
  CHECK(rec.n_calls == 0);
  CHECK_FALSE(rec.answer_correct);
}

TEST_CASE("remote chat agent against a fake completion server") {
  const auto qa = item_for(world::TaskType::Count, 6);
  const auto label = qa.entities.at(0);
  std::vector<json> bodies;
  std::mutex mu;
  httplib::Server fake;
  fake.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    bodies.push_back(json::parse(req.body));
    const std::string content =
        bodies.size() == 1 ? "<analy>count</analy><action>CountObjects(img_path=\"image-0\", text_labels=[\"" + label +
                                 "\"])</action><obs>made up</obs>"
                           : "<analy>done</analy><ans>" + qa.answer + "</ans>";
    res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                    "application/json");
  });
  const int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();

  RemoteAgentConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "test-model";
  RemoteChatAgent agent(cfg);
  const auto rec = run_episode(agent, qa, oracle_toolbox(), {});
  fake.stop();
  t.join();

  CHECK(rec.transcript.find("made up") == std::string::npos);
  CHECK(rec.n_calls == 1);
  CHECK(rec.answer_correct);
  REQUIRE(bodies.size() == 2);
  CHECK(bodies[0]["model"] == "test-model");
  CHECK(bodies[0]["messages"][0]["role"] == "system");
  const auto& user = bodies[0]["messages"][1]["content"];
  CHECK(user[1]["image_url"]["url"].get<std::string>().starts_with("data:image/png;base64,iVBOR"));
  const auto& obs = bodies[1]["messages"][3];
  CHECK(obs["role"] == "user");
  CHECK(obs["content"][0]["text"].get<std::string>().starts_with("<obs>"));
  CHECK(obs["content"].size() == 2);
}

TEST_CASE("truncate after action") {
  CHECK(truncate_after_action("<analy>a</analy><action>X()</action><obs>fake</obs>") ==
        "<analy>a</analy><action>X()</action>");
  CHECK(truncate_after_action("<ans>B</ans>") == "<ans>B</ans>");
}

TEST_CASE("system prompt lists every skill") {
  const auto p = system_prompt();
  for (const auto& s : skills::skill_descriptors()) CHECK(p.find(s.name + "(") != std::string::npos);
  CHECK(p.find("<ans>") != std::string::npos);
}

TEST_CASE("policy reads hints back") {
  const auto facts = parse_hints(
      "3D points in image-0 (visual: image-1; camera frame, meters):\ncup: [1.5, -2, 3.25]\n"
      "camera: focal 512, principal point (320, 240)\n"
      "Counts in image-0 (visual: image-2):\nlamp: 2, centroids (1, 2), (3, 4)");
  CHECK(facts.points.at("cup") == Vec3{1.5, -2, 3.25});
  CHECK(facts.focal == 512.0);
  CHECK(facts.counts.at("lamp") == 2);
}

TEST_CASE("report serialization") {
  std::vector<EpisodeRecord> recs = {crafted({CallOutcome::Success}, true), crafted({}, false)};
  auto m = compute_metrics(recs);
  const auto j = report_to_json(*m);
  CHECK(j["n_episodes"] == 2);
  CHECK(j["accuracy"] == 0.5);
  CHECK(report_table(*m).find("accuracy") != std::string::npos);
}
