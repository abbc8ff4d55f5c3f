// SPDX-License-Identifier: Apache-2.0
#include "hintbox/eval/harness.hpp"

#include "hintbox/common/rng.hpp"
#include "hintbox/common/text.hpp"
#include "hintbox/world/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <thread>

namespace hintbox::eval {

using nlohmann::json;
using grammar::Turn;
using grammar::TurnKind;

std::string_view outcome_name(CallOutcome o) noexcept {
  switch (o) {
    case CallOutcome::Success: return "Success";
    case CallOutcome::Partial: return "Partial";
    case CallOutcome::Failed: return "Failed";
  }
  return "Failed";
}

std::optional<CallOutcome> parse_outcome(std::string_view s) noexcept {
  for (auto o : {CallOutcome::Success, CallOutcome::Partial, CallOutcome::Failed}) {
    if (outcome_name(o) == s) return o;
  }
  return std::nullopt;
}

std::string episode_id(const world::QAItem& qa) {
  std::string id = qa.id;
  for (auto& c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  }
  return id;
}

grammar::NormalizedAnswer ground_truth(const world::QAItem& qa) {
  grammar::NormalizedAnswer gt;
  gt.kind = qa.kind;
  if (qa.kind == grammar::AnswerKind::MultipleChoice) {
    gt.choice = qa.answer;
  } else {
    gt.value = qa.answer_value;
  }
  return gt;
}

Result<bool, ScoreError> score_answer(const grammar::NormalizedAnswer& pred, const grammar::NormalizedAnswer& gt,
                                      double r) {
  if (pred.kind != gt.kind) return fail(ScoreError{ScoreErrorKind::KindMismatch, "answer kinds differ"});
  if (gt.kind == grammar::AnswerKind::MultipleChoice) return pred.choice == gt.choice;
  if (!(gt.value > 0)) return fail(ScoreError{ScoreErrorKind::NonpositiveGroundTruth, "ground truth must be > 0"});
  const double ratio = pred.value / gt.value;
  return ratio >= 1 - r && ratio <= 1 + r;
}

namespace {

CallOutcome outcome_of(skills::SkillStatus s) {
  switch (s) {
    case skills::SkillStatus::Complete: return CallOutcome::Success;
    case skills::SkillStatus::Partial: return CallOutcome::Partial;
    case skills::SkillStatus::Failed: return CallOutcome::Failed;
  }
  return CallOutcome::Failed;
}

}  // namespace

EpisodeRecord run_episode(Agent& agent, const world::QAItem& qa, const skills::Toolbox& toolbox,
                          const EpisodeOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  const auto deadline = start + options.limits.deadline;
  EpisodeRecord rec;
  rec.qa = qa;

  tools::ImageStore images;
  if (options.episode_dir) images = tools::ImageStore(*options.episode_dir / episode_id(qa));
  images.add(world::render_scene(qa.scene), tools::SceneBinding{qa.scene.id, {}, qa.scene});

  const grammar::GrammarConfig grammar;
  std::vector<Exchange> exchanges;
  std::vector<std::string> chunks;
  const auto episode_seed = derive_seed(options.seed, {hash_str(qa.id)});
  bool answered = false;

  for (int turn = 0; turn < options.limits.max_turns && !answered && clock::now() < deadline; ++turn) {
    auto out = agent.next_turn(AgentView{qa, exchanges, images});
    if (!out) {
      rec.agent_error = out.error().message;
      rec.tool_calls.clear();
      rec.n_calls = 0;
      chunks.clear();
      break;
    }
    chunks.push_back(*out);
    Exchange ex{*out, std::nullopt};
    auto parsed = grammar::parse_trajectory(*out, grammar);
    if (!parsed) {
      exchanges.push_back(std::move(ex));
      break;
    }
    std::vector<std::string> texts, attachments;
    for (const auto& t : parsed->turns) {
      if (t.kind == TurnKind::Answer) {
        answered = true;
        break;
      }
      if (t.kind != TurnKind::Action) continue;
      if (t.malformed) {
        texts.push_back("Invalid action: " + t.malformed->message + ".");
        continue;
      }
      for (const auto& call : t.calls) {
        if (rec.n_calls >= options.limits.max_calls) {
          texts.push_back("call budget exhausted");
          continue;
        }
        skills::SkillContext ctx{&images, episode_seed, static_cast<std::uint64_t>(rec.n_calls), deadline, {}};
        auto result = toolbox.execute(call, ctx);
        ++rec.n_calls;
        if (!result) {
          rec.tool_calls.push_back(
              {call, CallOutcome::Failed, std::string(skills::skill_error_name(result.error().kind)), result.error().message});
          texts.push_back("Tool " + call.skill_name + " failed: " +
                          std::string(skills::skill_error_name(result.error().kind)) + " (" + result.error().message +
                          ").");
          continue;
        }
        std::optional<std::string> err;
        std::string detail;
        if (result->error) {
          err = std::string(tools::tool_error_name(result->error->kind));
          detail = result->error->detail;
        }
        rec.tool_calls.push_back({call, outcome_of(result->status), err, detail});
        for (const auto& h : result->hints) {
          texts.push_back(h.text);
          if (!h.visual.empty()) attachments.push_back(h.visual);
        }
      }
    }
    if (!texts.empty()) {
      Turn obs;
      obs.kind = TurnKind::Observation;
      obs.content = join(texts, "\n");
      obs.attachments = attachments;
      chunks.push_back(grammar::render_trajectory(grammar::Trajectory{{obs}, {}}));
      ex.observation = std::move(obs);
    }
    exchanges.push_back(std::move(ex));
  }

  rec.transcript = join(chunks, "\n");
  if (auto traj = grammar::parse_trajectory(rec.transcript, grammar)) {
    rec.trajectory = std::move(traj).value();
  } else {
    rec.trajectory.raw_text = rec.transcript;
  }
  const auto gt = ground_truth(qa);
  rec.answer = reward::answer_from_text(rec.transcript, qa.kind, grammar);
  if (rec.answer) {
    auto ok = score_answer(*rec.answer, gt, options.r);
    rec.answer_correct = ok && *ok;
  }
  const auto n = rec.tool_calls.size();
  auto success = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) success[i] = rec.tool_calls[i].outcome == CallOutcome::Success;
  rec.reward = reward::score_rollout(rec.transcript, gt, std::span<const bool>(success.get(), n), options.reward,
                                     rec.answer_correct);
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count();
  return rec;
}

std::vector<EpisodeRecord> run_eval(const std::vector<world::QAItem>& items, const AgentFactory& make_agent,
                                    const skills::Toolbox& toolbox, const EpisodeOptions& options, int jobs) {
  std::vector<EpisodeRecord> out(items.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    auto agent = make_agent();
    for (auto i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
      out[i] = run_episode(*agent, items[i], toolbox, options);
    }
  };
  const auto n = static_cast<std::size_t>(std::clamp(jobs, 1, 256));
  if (n == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(n, items.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

Result<EvalReport, MetricsError> compute_metrics(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) return fail(MetricsError{MetricsErrorKind::EmptyInput, "no records"});
  EvalReport r;
  r.n_episodes = static_cast<int>(records.size());
  int correct = 0, suc_correct = 0, uns_correct = 0, none_correct = 0, multistep = 0;
  long calls = 0, ok_calls = 0;
  double reward_sum = 0;
  std::map<std::string, long> usage;
  std::map<std::string, std::pair<int, int>> tasks;
  for (const auto& rec : records) {
    const int c = rec.answer_correct ? 1 : 0;
    correct += c;
    reward_sum += rec.reward.r_all;
    auto& t = tasks[std::string(world::task_name(rec.qa.task))];
    t.first += c;
    t.second += 1;
    if (rec.tool_calls.size() >= 2) ++multistep;
    if (rec.tool_calls.empty()) {
      ++r.n_no_call;
      none_correct += c;
      continue;
    }
    const bool all_ok = std::all_of(rec.tool_calls.begin(), rec.tool_calls.end(),
                                    [](const ToolCallRecord& tc) { return tc.outcome == CallOutcome::Success; });
    if (all_ok) {
      ++r.n_suc;
      suc_correct += c;
    } else {
      ++r.n_uns;
      uns_correct += c;
    }
    for (const auto& tc : rec.tool_calls) {
      ++calls;
      if (tc.outcome == CallOutcome::Success) ++ok_calls;
      ++usage[tc.call.skill_name];
    }
  }
  const auto frac = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  const double n = r.n_episodes;
  r.accuracy = frac(correct, n);
  r.tool_sr = frac(r.n_suc, r.n_suc + r.n_uns);
  r.call_sr = frac(static_cast<double>(ok_calls), static_cast<double>(calls));
  r.acc_w_suc = frac(suc_correct, r.n_suc);
  r.acc_w_uns = frac(uns_correct, r.n_uns);
  r.acc_no_call = frac(none_correct, r.n_no_call);
  r.multistep_rate = frac(multistep, n);
  for (const auto& [name, k] : usage) r.usage_distribution[name] = frac(static_cast<double>(k), static_cast<double>(calls));
  for (const auto& [name, t] : tasks) r.task_accuracy[name] = frac(t.first, t.second);
  r.mean_reward = reward_sum / n;
  return r;
}

json report_to_json(const EvalReport& r) {
  return {{"n_episodes", r.n_episodes},
          {"accuracy", r.accuracy},
          {"tool_sr", r.tool_sr},
          {"call_sr", r.call_sr},
          {"acc_w_suc", r.acc_w_suc},
          {"acc_w_uns", r.acc_w_uns},
          {"acc_no_call", r.acc_no_call},
          {"strata", {{"success", r.n_suc}, {"unsuccessful", r.n_uns}, {"no_call", r.n_no_call}}},
          {"multistep_rate", r.multistep_rate},
          {"usage_distribution", r.usage_distribution},
          {"task_accuracy", r.task_accuracy},
          {"mean_reward", r.mean_reward}};
}

std::string report_table(const EvalReport& r) {
  const auto pct = [](double v) { return fmt::format("{:6.2f}%", 100 * v); };
  std::string out;
  out += fmt::format("{:<16} {:>8}\n", "episodes", r.n_episodes);
  out += fmt::format("{:<16} {:>8}\n", "accuracy", pct(r.accuracy));
  out += fmt::format("{:<16} {:>8}  ({} / {} tool episodes)\n", "tool SR", pct(r.tool_sr), r.n_suc, r.n_suc + r.n_uns);
  out += fmt::format("{:<16} {:>8}\n", "call SR", pct(r.call_sr));
  out += fmt::format("{:<16} {:>8}\n", "acc (w/suc)", pct(r.acc_w_suc));
  out += fmt::format("{:<16} {:>8}\n", "acc (w/uns)", pct(r.acc_w_uns));
  out += fmt::format("{:<16} {:>8}  ({} episodes)\n", "acc (no call)", pct(r.acc_no_call), r.n_no_call);
  out += fmt::format("{:<16} {:>8}\n", "multi-step", pct(r.multistep_rate));
  out += fmt::format("{:<16} {:>8.4f}\n", "mean reward", r.mean_reward);
  for (const auto& [task, acc] : r.task_accuracy) out += fmt::format("  task {:<11} {:>8}\n", task, pct(acc));
  for (const auto& [skill, share] : r.usage_distribution) out += fmt::format("  use {:<12} {:>8}\n", skill, pct(share));
  return out;
}

json record_to_json(const EpisodeRecord& rec) {
  json calls = json::array();
  for (const auto& c : rec.tool_calls) {
    calls.push_back({{"skill", c.call.skill_name},
                     {"call", grammar::render_call(c.call)},
                     {"outcome", outcome_name(c.outcome)},
                     {"error", c.error ? json(*c.error) : json(nullptr)},
                     {"detail", c.detail}});
  }
  json answer = nullptr;
  if (rec.answer) {
    answer = rec.qa.kind == grammar::AnswerKind::Numeric ? json(rec.answer->value) : json(rec.answer->choice);
  }
  return {{"qa_id", rec.qa.id},
          {"task", world::task_name(rec.qa.task)},
          {"answer_kind", rec.qa.kind == grammar::AnswerKind::Numeric ? "numeric" : "choice"},
          {"gt", rec.qa.answer},
          {"transcript", rec.transcript},
          {"tool_calls", calls},
          {"answer", answer},
          {"answer_correct", rec.answer_correct},
          {"n_calls", rec.n_calls},
          {"wall_ms", rec.wall_ms},
          {"agent_error", rec.agent_error ? json(*rec.agent_error) : json(nullptr)},
          {"reward", reward::breakdown_to_json(rec.reward)}};
}

}  // namespace hintbox::eval
