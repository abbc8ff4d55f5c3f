// SPDX-License-Identifier: Apache-2.0
#include "hintbox/world/world.hpp"

#include "hintbox/common/rng.hpp"
#include "hintbox/common/text.hpp"
#include "hintbox/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace hintbox::world {

namespace {

double round_to(double v, double step) { return std::round(v / step) * step; }

Unexpected<WorldError> infeasible(std::string msg) { return fail(WorldError{WorldErrorKind::Infeasible, std::move(msg)}); }

// Draws the injected failure, if any.
std::optional<WorldError> maybe_fail(const NoiseConfig& noise, Rng& rng) {
  if (!rng.bernoulli(noise.failure_prob)) return std::nullopt;
  double total = 0;
  for (const auto& [kind, w] : noise.failure_kinds) total += std::max(0.0, w);
  auto kind = tools::ToolErrorKind::ExecutionError;
  if (total > 0) {
    double u = rng.uniform() * total;
    for (const auto& [k, w] : noise.failure_kinds) {
      kind = k;
      u -= std::max(0.0, w);
      if (u < 0) break;
    }
  }
  return WorldError{WorldErrorKind::InjectedFailure, "injected failure", kind};
}

}  // namespace

bool NoiseConfig::valid() const {
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  return prob(miss_prob) && prob(false_positive_prob) && prob(failure_prob) && box_jitter_px >= 0.0;
}

bool label_matches(std::string_view query, std::string_view scene_label) {
  return normalize_label(query) == normalize_label(scene_label);
}

Result<SceneSpec, WorldError> generate_scene(std::uint64_t seed, const SceneParams& params) {
  if (params.n_objects < 0) return infeasible("negative object count");
  if (params.width <= 0 || params.height <= 0) return infeasible("image size must be positive");
  const int n = params.n_objects;
  int required = 0;
  for (const auto& [label, count] : params.min_instances) required += std::max(0, count);
  if (required > n) return infeasible("min_instances exceed n_objects");
  if (n > 0 && params.label_vocab.empty() && required < n) return infeasible("empty label vocabulary");
  if (n > 0 && params.min_box > std::min(params.width, params.height)) return infeasible("min_box exceeds image");
  const double min_area = static_cast<double>(params.min_box) * params.min_box;
  if (static_cast<double>(n) * min_area > static_cast<double>(params.width) * params.height) {
    return infeasible("cannot place " + std::to_string(n) + " boxes in " + std::to_string(params.width) + "x" +
                      std::to_string(params.height));
  }

  Rng rng(derive_seed(seed, {hash_str("scene")}));
  SceneSpec scene;
  scene.id = "scene-" + std::to_string(seed);
  scene.seed = seed;
  scene.width = params.width;
  scene.height = params.height;
  scene.camera = Camera{0.8 * params.width, params.width / 2.0, params.height / 2.0};
  scene.background_depth = round_to(rng.uniform(0.85, 1.0), 0.001);

  std::vector<std::string> labels;
  for (const auto& [label, count] : params.min_instances) {
    for (int i = 0; i < count; ++i) labels.push_back(label);
  }
  while (static_cast<int>(labels.size()) < n) labels.push_back(params.label_vocab[rng.below(params.label_vocab.size())]);
  rng.shuffle(labels.begin(), labels.end());

  const int max_w = std::max(params.min_box, std::min(params.max_box, params.width));
  const int max_h = std::max(params.min_box, std::min(params.max_box, params.height));
  constexpr int kAttempts = 400;
  for (int i = 0; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      const auto w = rng.range(params.min_box, max_w);
      const auto h = rng.range(params.min_box, max_h);
      const auto x = rng.range(0, params.width - w);
      const auto y = rng.range(0, params.height - h);
      const Box box{double(x), double(y), double(x + w), double(y + h)};
      const bool overlaps = std::any_of(scene.objects.begin(), scene.objects.end(),
                                        [&](const SceneObject& o) { return intersection_area(o.box, box) > 0; });
      if (overlaps) continue;
      SceneObject obj;
      obj.label = labels[static_cast<std::size_t>(i)];
      obj.box = box;
      const double z = round_to(rng.uniform(1.0, 8.0), 0.001);
      const double f = scene.camera.focal;
      obj.point3d = Vec3{(box.cx() - scene.camera.cx) * z / f, (box.cy() - scene.camera.cy) * z / f, z};
      obj.size_m = PhysicalSize{box.width() * z / f, box.height() * z / f};
      obj.mean_depth = round_to(z / 10.0, 0.001);
      obj.instance_id = i + 1;
      scene.objects.push_back(std::move(obj));
      placed = true;
    }
    if (!placed) return infeasible("could not place object " + std::to_string(i + 1) + " without overlap");
  }
  return scene;
}

Result<tools::Detections, WorldError> oracle_detect(const SceneSpec& scene, const std::vector<std::string>& labels,
                                                    const NoiseConfig& noise, std::uint64_t seed, double threshold) {
  Rng rng(derive_seed(seed, {hash_str("detect")}));
  if (auto err = maybe_fail(noise, rng)) return fail(std::move(*err));
  const double w = scene.width, h = scene.height;
  tools::Detections out;
  for (const auto& query : labels) {
    for (const auto& obj : scene.objects) {
      if (!label_matches(query, obj.label)) continue;
      if (rng.bernoulli(noise.miss_prob)) continue;
      tools::Detection det{query, obj.box, 1.0};
      if (noise.box_jitter_px > 0) {
        Box b{obj.box.x1 + rng.normal(0, noise.box_jitter_px), obj.box.y1 + rng.normal(0, noise.box_jitter_px),
              obj.box.x2 + rng.normal(0, noise.box_jitter_px), obj.box.y2 + rng.normal(0, noise.box_jitter_px)};
        b = Box{std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w), std::clamp(b.y2, 0.0, h)};
        if (b.valid()) {
          const double shift = (std::abs(b.x1 - obj.box.x1) + std::abs(b.y1 - obj.box.y1) +
                                std::abs(b.x2 - obj.box.x2) + std::abs(b.y2 - obj.box.y2)) / 4.0;
          det.box = b;
          det.score = std::clamp(1.0 - 0.01 * shift, 0.05, 1.0);
        }
      }
      out.items.push_back(std::move(det));
    }
    if (rng.bernoulli(noise.false_positive_prob)) {
      const double bw = rng.uniform(8.0, std::max(9.0, w / 4)), bh = rng.uniform(8.0, std::max(9.0, h / 4));
      const double x = rng.uniform(0, std::max(0.0, w - bw)), y = rng.uniform(0, std::max(0.0, h - bh));
      Box b{x, y, std::min(w, x + bw), std::min(h, y + bh)};
      if (b.valid()) out.items.push_back({query, b, std::clamp(rng.uniform(0.1, 0.5), 0.05, 1.0)});
    }
  }
  std::erase_if(out.items, [&](const tools::Detection& d) { return d.score < threshold; });
  return out;
}

Result<tools::DepthField, WorldError> oracle_depth(const SceneSpec& scene, const NoiseConfig& noise, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_str("depth")}));
  if (auto err = maybe_fail(noise, rng)) return fail(std::move(*err));
  tools::DepthField field;
  field.width = scene.width;
  field.height = scene.height;
  field.values.assign(static_cast<std::size_t>(scene.width) * static_cast<std::size_t>(scene.height),
                      static_cast<float>(scene.background_depth));
  for (const auto& obj : scene.objects) {
    const auto r = pixel_range(obj.box, scene.width, scene.height);
    const auto d = static_cast<float>(obj.mean_depth);
    for (int y = r.y0; y < r.y1; ++y) {
      auto* row = field.values.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(scene.width);
      std::fill(row + r.x0, row + r.x1, d);
    }
  }
  return field;
}

Result<tools::Masks, WorldError> oracle_segment(const SceneSpec& scene, const tools::Detections& detections,
                                                const NoiseConfig& noise, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_str("segment")}));
  if (auto err = maybe_fail(noise, rng)) return fail(std::move(*err));
  tools::Masks out;
  for (const auto& det : detections.items) {
    tools::ObjectMask m;
    m.label = det.label;
    m.width = scene.width;
    m.height = scene.height;
    m.bits.assign(static_cast<std::size_t>(scene.width) * static_cast<std::size_t>(scene.height), 0);
    const auto r = pixel_range(det.box, scene.width, scene.height);
    for (int y = r.y0; y < r.y1; ++y) {
      auto* row = m.bits.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(scene.width);
      std::fill(row + r.x0, row + r.x1, std::uint8_t{1});
    }
    out.items.push_back(std::move(m));
  }
  return out;
}

Result<tools::PointCloud3D, WorldError> oracle_3d(const SceneSpec& scene, const tools::Detections& detections,
                                                  const NoiseConfig& noise, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_str("reconstruct")}));
  if (auto err = maybe_fail(noise, rng)) return fail(std::move(*err));
  tools::PointCloud3D out;
  out.camera = tools::CameraIntrinsics{scene.camera.focal, scene.camera.cx, scene.camera.cy};
  for (const auto& det : detections.items) {
    const SceneObject* best = nullptr;
    double best_iou = 0.0;
    for (const auto& obj : scene.objects) {
      if (!label_matches(det.label, obj.label)) continue;
      const double v = iou(det.box, obj.box);
      if (v > best_iou) {
        best_iou = v;
        best = &obj;
      }
    }
    if (best != nullptr) out.points.push_back({det.label, best->point3d});
  }
  return out;
}

Result<tools::AtomicOutput, tools::ToolError> run_oracle_atomic(const SceneSpec& scene, std::string_view atomic,
                                                                const tools::ToolInput& input,
                                                                const NoiseConfig& noise, std::uint64_t seed) {
  using namespace tools;
  const auto op_seed = derive_seed(seed, {hash_str(atomic)});
  const auto lift = [](auto r) -> Result<AtomicOutput, ToolError> {
    if (!r) {
      const auto& e = r.error();
      if (e.kind == WorldErrorKind::InjectedFailure) return fail(ToolError{e.fault, e.message});
      return fail(ToolError{ToolErrorKind::ExecutionError, e.message});
    }
    return AtomicOutput{std::move(r).value()};
  };
  if (atomic == atomic_names::kDetect) {
    return lift(oracle_detect(scene, input.text_list("text_labels"), noise, op_seed, input.number("threshold").value_or(0.1)));
  }
  if (atomic == atomic_names::kDepth) return lift(oracle_depth(scene, noise, op_seed));
  if (atomic == atomic_names::kSegment || atomic == atomic_names::kReconstruct) {
    const auto* dets = input.upstream_of<Detections>();
    if (dets == nullptr) return fail(ToolError{ToolErrorKind::ExecutionError, std::string(atomic) + " needs detections"});
    if (atomic == atomic_names::kSegment) return lift(oracle_segment(scene, *dets, noise, op_seed));
    return lift(oracle_3d(scene, *dets, noise, op_seed));
  }
  return fail(ToolError{ToolErrorKind::ExecutionError, "unknown operation"});
}

SceneSpec crop_scene(const SceneSpec& scene, const tools::CropView& view) {
  const auto [w, h] = tools::crop_dims(view);
  SceneSpec out = scene;
  out.id = scene.id + "@crop";
  out.width = w;
  out.height = h;
  out.camera = Camera{scene.camera.focal * view.zoom, (scene.camera.cx - view.x1) * view.zoom,
                      (scene.camera.cy - view.y1) * view.zoom};
  out.objects.clear();
  const Box window{view.x1, view.y1, view.x2, view.y2};
  for (const auto& obj : scene.objects) {
    const Box inter{std::max(obj.box.x1, window.x1), std::max(obj.box.y1, window.y1), std::min(obj.box.x2, window.x2),
                    std::min(obj.box.y2, window.y2)};
    if (!inter.valid()) continue;
    SceneObject o = obj;
    o.box = Box{std::clamp((inter.x1 - view.x1) * view.zoom, 0.0, double(w)),
                std::clamp((inter.y1 - view.y1) * view.zoom, 0.0, double(h)),
                std::clamp((inter.x2 - view.x1) * view.zoom, 0.0, double(w)),
                std::clamp((inter.y2 - view.y1) * view.zoom, 0.0, double(h))};
    if (o.box.valid()) out.objects.push_back(std::move(o));
  }
  return out;
}

SceneSpec apply_views(SceneSpec scene, const std::vector<tools::CropView>& views) {
  for (const auto& v : views) scene = crop_scene(scene, v);
  return scene;
}

Rgb label_color(std::string_view label) {
  const auto h = mix64(hash_str(normalize_label(label)));
  const auto channel = [&](int shift) { return static_cast<std::uint8_t>(40 + ((h >> shift) & 0xff) * 170 / 255); };
  return {channel(0), channel(8), channel(16)};
}

Raster render_scene(const SceneSpec& scene) {
  Raster img(scene.width, scene.height, Rgb{190, 190, 190});
  const auto& k = kernels::active();
  for (const auto& obj : scene.objects) {
    const auto r = pixel_range(obj.box, scene.width, scene.height);
    const auto c = label_color(obj.label);
    for (int y = r.y0; y < r.y1; ++y) {
      k.fill_rgb(img.row(y).subspan(static_cast<std::size_t>(r.x0) * 3, static_cast<std::size_t>(r.x1 - r.x0) * 3),
                 c.r, c.g, c.b);
    }
  }
  return img;
}

Result<tools::AtomicOutput, tools::ToolError> OracleBackend::invoke(const tools::AtomicDescriptor& desc,
                                                                    std::string_view /*binding*/,
                                                                    const tools::ToolInput& input,
                                                                    const tools::ExecContext& ctx) {
  const auto* entry = ctx.images ? ctx.images->find(input.image) : nullptr;
  if (entry == nullptr || !entry->scene) {
    return fail(tools::ToolError{tools::ToolErrorKind::ExecutionError, input.image + " has no scene binding"});
  }
  return run_oracle_atomic(entry->scene->scene, desc.name, input, noise_, derive_seed(seed_, {ctx.seed}));
}

// ---------------------------------------------------------------------------
// QA generation

std::string_view task_name(TaskType t) noexcept {
  switch (t) {
    case TaskType::RelDir: return "RelDir";
    case TaskType::RelDist: return "RelDist";
    case TaskType::AbsDist: return "AbsDist";
    case TaskType::SizeEst: return "SizeEst";
    case TaskType::Count: return "Count";
  }
  return "unknown";
}

std::optional<TaskType> parse_task(std::string_view name) noexcept {
  for (auto t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

std::string relative_direction(const Box& a, const Box& b) {
  const double dx = a.cx() - b.cx();
  const double dy = a.cy() - b.cy();
  if (std::abs(dx) >= std::abs(dy)) return dx < 0 ? "left" : "right";
  return dy < 0 ? "above" : "below";
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

Unexpected<WorldError> underspecified(std::string msg) {
  return fail(WorldError{WorldErrorKind::Underspecified, std::move(msg)});
}

// Objects whose label occurs once in the scene; references to them are unambiguous.
std::vector<const SceneObject*> unique_objects(const SceneSpec& scene) {
  std::map<std::string, int> counts;
  for (const auto& o : scene.objects) ++counts[normalize_label(o.label)];
  std::vector<const SceneObject*> out;
  for (const auto& o : scene.objects) {
    if (counts[normalize_label(o.label)] == 1) out.push_back(&o);
  }
  return out;
}

void finish_choice(QAItem& item, std::string correct, std::vector<std::string> distractors, Rng& rng) {
  std::vector<std::string> options{correct};
  options.insert(options.end(), distractors.begin(), distractors.end());
  rng.shuffle(options.begin(), options.end());
  const auto pos = static_cast<std::size_t>(std::find(options.begin(), options.end(), correct) - options.begin());
  item.answer = std::string(1, kOptionLetters[pos]);
  for (std::size_t i = 0; i < options.size(); ++i) {
    item.question += "\n";
    item.question += kOptionLetters[i];
    item.question += ". " + options[i];
  }
  item.options = std::move(options);
}

// Three multiplicative distractors, deduplicated on their printed form.
std::vector<std::string> scaled_distractors(double value, const std::string& correct,
                                            const std::function<std::string(double)>& print) {
  std::vector<std::string> out;
  for (double m : {0.5, 1.5, 2.0, 3.0, 4.0, 5.0}) {
    const auto s = print(value * m);
    if (s != correct && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    if (out.size() == 3) break;
  }
  return out;
}

}  // namespace

Result<QAItem, WorldError> generate_qa(const SceneSpec& scene, TaskType task, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_str("qa"), static_cast<std::uint64_t>(task)}));
  QAItem item;
  item.task = task;
  item.scene = scene;
  item.id = scene.id + "/" + std::string(task_name(task)) + "/" + std::to_string(seed);
  const auto uniques = unique_objects(scene);

  const auto pick_pair = [&]() -> std::pair<const SceneObject*, const SceneObject*> {
    const auto i = rng.below(uniques.size());
    auto j = rng.below(uniques.size() - 1);
    if (j >= i) ++j;
    return {uniques[i], uniques[j]};
  };

  switch (task) {
    case TaskType::RelDir: {
      if (uniques.size() < 2) return underspecified("RelDir needs two uniquely labeled objects");
      const auto [a, b] = pick_pair();
      item.kind = grammar::AnswerKind::MultipleChoice;
      item.entities = {a->label, b->label};
      item.question = "Where is the " + a->label + " relative to the " + b->label + " in the image?";
      const auto dir = relative_direction(a->box, b->box);
      std::vector<std::string> distractors;
      for (std::string d : {"left", "right", "above", "below"}) {
        if (d != dir) distractors.push_back(d);
      }
      finish_choice(item, dir, distractors, rng);
      break;
    }
    case TaskType::RelDist: {
      if (uniques.size() < 2) return underspecified("RelDist needs two uniquely labeled objects");
      const auto [a, b] = pick_pair();
      item.kind = grammar::AnswerKind::MultipleChoice;
      item.entities = {a->label, b->label};
      item.answer_value = distance(a->point3d, b->point3d);
      item.question = "Which value is closest to the distance between the " + a->label + " and the " + b->label + "?";
      const auto print = [](double v) { return format_fixed(v, 2) + " m"; };
      const auto correct = print(item.answer_value);
      finish_choice(item, correct, scaled_distractors(item.answer_value, correct, print), rng);
      break;
    }
    case TaskType::AbsDist: {
      if (uniques.size() < 2) return underspecified("AbsDist needs two uniquely labeled objects");
      const auto [a, b] = pick_pair();
      item.kind = grammar::AnswerKind::Numeric;
      item.entities = {a->label, b->label};
      item.answer_value = distance(a->point3d, b->point3d);
      item.answer = format_number(item.answer_value);
      item.question = "What is the distance between the " + a->label + " and the " + b->label + " in meters?";
      break;
    }
    case TaskType::SizeEst: {
      if (uniques.empty()) return underspecified("SizeEst needs a uniquely labeled object");
      const auto* a = uniques[rng.below(uniques.size())];
      item.kind = grammar::AnswerKind::Numeric;
      item.entities = {a->label};
      item.answer_value = a->size_m.h;
      item.answer = format_number(item.answer_value);
      item.question = "What is the height of the " + a->label + " in meters?";
      break;
    }
    case TaskType::Count: {
      if (scene.objects.empty()) return underspecified("Count needs at least one object");
      std::vector<std::string> labels;
      for (const auto& o : scene.objects) {
        if (std::find(labels.begin(), labels.end(), o.label) == labels.end()) labels.push_back(o.label);
      }
      const auto& label = labels[rng.below(labels.size())];
      const auto count = std::count_if(scene.objects.begin(), scene.objects.end(),
                                       [&](const SceneObject& o) { return label_matches(label, o.label); });
      item.kind = grammar::AnswerKind::MultipleChoice;
      item.entities = {label};
      item.answer_value = static_cast<double>(count);
      item.question = "How many " + label + " instances are in the image?";
      const auto print = [](double v) { return std::to_string(std::max(1L, std::lround(v))); };
      const auto correct = std::to_string(count);
      auto distractors = scaled_distractors(static_cast<double>(count), correct, print);
      for (long extra = count + 1; distractors.size() < 3; ++extra) {
        const auto s = std::to_string(extra);
        if (std::find(distractors.begin(), distractors.end(), s) == distractors.end()) distractors.push_back(s);
      }
      finish_choice(item, correct, distractors, rng);
      break;
    }
  }
  return item;
}

}  // namespace hintbox::world
