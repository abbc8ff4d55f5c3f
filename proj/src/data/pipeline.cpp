// SPDX-License-Identifier: Apache-2.0
#include "hintbox/data/pipeline.hpp"

#include "hintbox/common/rng.hpp"
#include "hintbox/common/text.hpp"
#include "hintbox/eval/harness.hpp"
#include "hintbox/eval/policy.hpp"
#include "hintbox/world/io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hintbox::data {

using grammar::Turn;
using grammar::TurnKind;
using nlohmann::json;

std::string_view view_kind_name(ViewKind k) noexcept { return k == ViewKind::MaskMap ? "MaskMap" : "DepthMap"; }

std::string_view consistency_name(Consistency c) noexcept {
  switch (c) {
    case Consistency::Complete: return "Complete";
    case Consistency::Partial: return "Partial";
    case Consistency::Empty: return "Empty";
  }
  return "Empty";
}

Consistency consistency_check(const std::vector<std::string>& entities, const skills::SkillResult& result) {
  if (result.status == skills::SkillStatus::Failed || entities.empty()) return Consistency::Empty;
  std::size_t found = 0;
  for (const auto& e : entities) {
    const bool hit = std::any_of(result.per_query.begin(), result.per_query.end(), [&](const auto& q) {
      return q.second && world::label_matches(e, q.first);
    });
    if (hit) ++found;
  }
  if (found == entities.size()) return Consistency::Complete;
  return found > 0 ? Consistency::Partial : Consistency::Empty;
}

namespace {

std::vector<std::string> distinct_labels(const world::SceneSpec& s) {
  std::vector<std::string> out;
  for (const auto& o : s.objects) {
    if (std::find(out.begin(), out.end(), o.label) == out.end()) out.push_back(o.label);
  }
  return out;
}

std::string file_or_ref(const tools::ImageStore& store, const std::string& ref) {
  const auto* e = store.find(ref);
  return e && !e->file.empty() ? e->file.string() : ref;
}

std::string id_for(std::string_view prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return std::string(prefix) + "-" + buf;
}

}  // namespace

std::vector<WarmupPair> build_warmup(const std::vector<world::SceneSpec>& scenes, int n, std::uint64_t seed,
                                     const skills::Toolbox& toolbox,
                                     const std::optional<std::filesystem::path>& out_dir) {
  std::vector<WarmupPair> out;
  if (n <= 0 || scenes.empty()) return out;
  Rng rng(derive_seed(seed, {hash_str("warmup")}));
  const int max_attempts = 4 * n + 16;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(out.size()) < n; ++attempt) {
    const auto idx = out.size();
    const auto& scene = scenes[rng.below(scenes.size())];
    const auto labels = distinct_labels(scene);
    const auto kind = idx % 2 == 0 || labels.empty() ? ViewKind::DepthMap : ViewKind::MaskMap;
    WarmupPair p;
    p.id = id_for("warmup", idx);
    p.scene_id = scene.id;
    tools::ImageStore store = out_dir ? tools::ImageStore(*out_dir / p.id) : tools::ImageStore();
    store.add(world::render_scene(scene), tools::SceneBinding{scene.id, {}, scene});
    grammar::ActionCall call{std::string(kind == ViewKind::DepthMap ? skills::skill_names::kDepth
                                                                    : skills::skill_names::kSegment),
                             {{"img_path", std::string("image-0")}, {"text_labels", labels}}};
    const skills::SkillContext ctx{&store, derive_seed(seed, {idx}), 0, std::chrono::steady_clock::time_point::max(),
                                   {}};
    auto result = toolbox.execute(call, ctx);
    if (!result || result->status == skills::SkillStatus::Failed || result->hints.empty()) continue;
    p.view_kind = kind;
    p.base_image = file_or_ref(store, "image-0");
    p.augmented_view = file_or_ref(store, result->hints.front().visual);
    p.question = "The first image is a photo and the second is a view derived from it. Which kind of view is the "
                 "second image, and what does it represent?";
    if (kind == ViewKind::DepthMap) {
      p.answer = std::string(kDepthViewAnswer);
    } else {
      std::vector<std::string> found;
      for (const auto& [q, hit] : result->per_query) {
        if (hit) found.push_back(q);
      }
      p.answer = "mask map: highlighted regions mark the " + join(found, ", ");
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

std::string fallback_reasoning(const world::QAItem& qa, std::string_view why) {
  std::string fact;
  if (qa.kind == grammar::AnswerKind::MultipleChoice) {
    const auto pos = static_cast<std::size_t>(qa.answer.front() - 'A');
    fact = "Looking at image-0 directly, the answer is " + qa.options.at(pos) + ".";
  } else {
    fact = "Looking at image-0 directly, I estimate " + qa.answer + " m.";
  }
  return std::string(why) + " " + fact;
}

Turn make_turn(TurnKind kind, std::string content, std::vector<std::string> attachments = {}) {
  Turn t;
  t.kind = kind;
  t.content = std::move(content);
  t.attachments = std::move(attachments);
  return t;
}

}  // namespace

std::vector<world::QAItem> sample_items(const std::vector<world::SceneSpec>& scenes, int n, std::uint64_t seed) {
  std::vector<world::QAItem> out;
  if (scenes.empty()) return out;
  std::size_t cursor = 0;
  for (int i = 0; i < n; ++i) {
    const auto task = world::kAllTasks[static_cast<std::size_t>(i) % std::size(world::kAllTasks)];
    for (std::size_t tries = 0; tries < scenes.size(); ++tries) {
      const auto& scene = scenes[cursor++ % scenes.size()];
      auto qa = world::generate_qa(scene, task, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
      if (qa) {
        out.push_back(std::move(qa).value());
        break;
      }
    }
  }
  return out;
}

Result<std::vector<SftTrajectory>, DataError> build_sft(const std::vector<world::QAItem>& items,
                                                        const skills::Toolbox& toolbox, double failure_fraction,
                                                        std::uint64_t seed,
                                                        const std::optional<std::filesystem::path>& out_dir) {
  if (!(failure_fraction >= 0.0 && failure_fraction <= 1.0)) {
    return fail(DataError{DataErrorKind::InvalidFraction, "failure fraction must be in [0, 1]"});
  }
  const auto n = items.size();
  const auto k = static_cast<std::size_t>(std::llround(failure_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng pick(derive_seed(seed, {hash_str("failures")}));
  pick.shuffle(order.begin(), order.end());
  std::vector<bool> inject(n, false);
  for (std::size_t i = 0; i < k; ++i) inject[order[i]] = true;

  std::vector<SftTrajectory> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& qa = items[i];
    SftTrajectory t;
    t.qa = qa;
    t.failure_injected = inject[i];
    tools::ImageStore store = out_dir ? tools::ImageStore(*out_dir / eval::episode_id(qa)) : tools::ImageStore();
    store.add(world::render_scene(qa.scene), tools::SceneBinding{qa.scene.id, {}, qa.scene});
    const auto item_seed = derive_seed(seed, {static_cast<std::uint64_t>(i)});

    std::vector<Turn> turns;
    turns.push_back(make_turn(TurnKind::Analysis, eval::analysis_text(qa)));
    auto calls = eval::plan_calls(qa);
    std::vector<std::string> texts, attachments;
    std::optional<skills::SkillResult> first;
    for (std::size_t c = 0; c < calls.size(); ++c) {
      skills::SkillContext ctx{&store, item_seed, c, std::chrono::steady_clock::time_point::max(), {}};
      if (c == 0 && t.failure_injected) {
        ctx.force_fault = Rng(derive_seed(item_seed, {hash_str("kind")})).bernoulli(0.5)
                              ? tools::ToolErrorKind::EmptyReturn
                              : tools::ToolErrorKind::ExecutionError;
      }
      auto res = toolbox.execute(calls[c], ctx);
      skills::SkillResult r;
      if (res) {
        r = std::move(res).value();
      } else {
        r.skill = calls[c].skill_name;
        r.hints = {skills::Hint{"", skills::failure_text(calls[c].skill_name, tools::ToolErrorKind::ExecutionError)}};
      }
      for (const auto& h : r.hints) {
        texts.push_back(h.text);
        if (!h.visual.empty()) attachments.push_back(h.visual);
      }
      const bool stop = r.status == skills::SkillStatus::Failed;
      if (c == 0) first = std::move(r);
      if (stop) {
        calls.resize(c + 1);
        break;
      }
    }
    turns.push_back(make_turn(TurnKind::Action, grammar::render_calls(calls)));
    turns.push_back(make_turn(TurnKind::Observation, join(texts, "\n"), attachments));
    t.consistency = consistency_check(qa.entities, *first);

    std::string reasoning, answer;
    std::optional<eval::DerivedAnswer> derived;
    if (t.consistency == Consistency::Complete) derived = eval::derive_answer(qa, eval::parse_hints(join(texts, "\n")));
    if (derived) {
      reasoning = derived->reasoning;
      answer = derived->answer;
    } else if (first->status == skills::SkillStatus::Failed && first->error) {
      reasoning = fallback_reasoning(qa, "The tool failed, so I abandon its output and return to the original image.");
      answer = qa.answer;
    } else {
      reasoning = fallback_reasoning(
          qa, t.consistency == Consistency::Partial
                  ? "The tool found only part of what the question asks about, so I combine it with the original image."
                  : "The tool found none of the objects, so I rely on the original image.");
      answer = qa.answer;
    }
    turns.push_back(make_turn(TurnKind::Analysis, reasoning));
    turns.push_back(make_turn(TurnKind::Answer, answer));
    t.turns = grammar::Trajectory{std::move(turns), {}};
    t.text = grammar::render_trajectory(t.turns);
    t.turns.raw_text = t.text;
    for (const auto& e : store.entries()) {
      if (!e.file.empty()) t.images[e.ref] = e.file.string();
    }
    out.push_back(std::move(t));
  }
  return out;
}

json warmup_to_json(const WarmupPair& p) {
  return {{"schema", kWarmupSchema},   {"id", p.id},
          {"scene_id", p.scene_id},    {"base_image", p.base_image},
          {"augmented_view", p.augmented_view}, {"view_kind", view_kind_name(p.view_kind)},
          {"question", p.question},    {"answer", p.answer}};
}

json sft_to_json(const SftTrajectory& t) {
  json turns = json::array();
  for (const auto& turn : t.turns.turns) {
    turns.push_back({{"kind", grammar::turn_kind_name(turn.kind)},
                     {"content", turn.content},
                     {"attachments", turn.attachments}});
  }
  return {{"schema", kSftSchema},
          {"id", eval::episode_id(t.qa)},
          {"qa", world::qa_to_json(t.qa)},
          {"text", t.text},
          {"turns", turns},
          {"consistency", consistency_name(t.consistency)},
          {"failure_injected", t.failure_injected},
          {"images", t.images}};
}

}  // namespace hintbox::data
