// SPDX-License-Identifier: Apache-2.0
#include "hintbox/skills/skills.hpp"

#include "hintbox/common/rng.hpp"
#include "hintbox/common/text.hpp"
#include "hintbox/kernels/kernels.hpp"
#include "hintbox/skills/render.hpp"
#include "hintbox/world/world.hpp"

#include <algorithm>
#include <cmath>

namespace hintbox::skills {

using tools::ActionArg;
using tools::AtomicOutput;
using tools::ToolError;
using tools::ToolErrorKind;
namespace an = tools::atomic_names;

std::string_view skill_status_name(SkillStatus s) noexcept {
  switch (s) {
    case SkillStatus::Complete: return "Complete";
    case SkillStatus::Partial: return "Partial";
    case SkillStatus::Failed: return "Failed";
  }
  return "unknown";
}

std::string_view skill_error_name(SkillErrorKind k) noexcept {
  switch (k) {
    case SkillErrorKind::UnknownSkill: return "UnknownSkill";
    case SkillErrorKind::ArgValidation: return "ArgValidation";
    case SkillErrorKind::OverconstrainedROI: return "OverconstrainedROI";
  }
  return "unknown";
}

std::string failure_text(std::string_view skill, ToolErrorKind kind) {
  return "Tool " + std::string(skill) + " failed: " + std::string(tools::tool_error_name(kind)) + ".";
}

const std::vector<SkillDescriptor>& skill_descriptors() {
  using enum tools::SemanticType;
  using tools::ArgValue;
  static const std::vector<SkillDescriptor> table = [] {
    const tools::ParamSpec img{"img_path", ImageRef, true, std::nullopt};
    const tools::ParamSpec labels{"text_labels", TextList, true, std::nullopt};
    const tools::ParamSpec threshold{"threshold", Number, false, ArgValue{0.1}};
    const tools::ParamSpec opt_labels{"text_labels", TextList, false, ArgValue{std::vector<std::string>{}}};
    const std::string d(an::kDetect), s(an::kSegment), z(an::kDepth), r(an::kReconstruct), v(an::kRender),
        c(an::kCompute);
    return std::vector<SkillDescriptor>{
        {std::string(skill_names::kSegment), {d, s, c, v}, "detect-then-segment", {img, labels, threshold},
         "segment objects and report their centroids"},
        {std::string(skill_names::kDepth), {z, d, c, v}, "depth-then-box-mean", {img, opt_labels},
         "relative depth map; average depth per labeled object (0 = near, 1 = far)"},
        {std::string(skill_names::kSize), {d, s, c, v}, "detect-segment-measure", {img, labels, threshold},
         "centroid and pixel extent per object, with cropped patches"},
        {std::string(skill_names::kCount), {d, c, v}, "detect-then-count", {img, labels, threshold},
         "count and centroids for each object type"},
        {std::string(skill_names::kZoom), {c, v}, "window-then-resample",
         {img,
          {"box", NumberList, false, ArgValue{std::vector<double>{}}},
          {"center", NumberList, false, ArgValue{std::vector<double>{}}},
          {"zoom_factor", Number, false, ArgValue{1.0}}},
         "crop a region given by box=[x1, y1, x2, y2] or center=[x, y], optionally zoomed"},
        {std::string(skill_names::k3D), {d, r, c, v}, "detect-then-reconstruct", {img, labels},
         "camera-frame [X, Y, Z] coordinates in meters per object"},
    };
  }();
  return table;
}

const SkillDescriptor* find_skill(std::string_view name) {
  for (const auto& s : skill_descriptors()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Local render / compute atomics

namespace {

Unexpected<ToolError> exec_error(std::string detail) { return fail(ToolError{ToolErrorKind::ExecutionError, std::move(detail)}); }

double box_mean(const tools::DepthField& f, const Box& box) {
  const auto r = pixel_range(box, f.width, f.height);
  if (r.empty()) return 0.0;
  const auto& k = kernels::active();
  double total = 0.0;
  for (int y = r.y0; y < r.y1; ++y) {
    const auto row = std::span<const float>(f.values).subspan(
        static_cast<std::size_t>(y) * static_cast<std::size_t>(f.width) + static_cast<std::size_t>(r.x0),
        static_cast<std::size_t>(r.x1 - r.x0));
    total += k.sum_f32(row);
  }
  return total / static_cast<double>(r.count());
}

// [x1, y1, x2, y2, zoom] from either a box or a center.
Result<std::vector<double>, ToolError> resolve_roi(const std::vector<double>& v, int w, int h) {
  if (v.size() == 5) return v;
  if (v.size() != 3) return exec_error("roi needs [x1, y1, x2, y2, zoom] or [x, y, zoom]");
  const double zoom = v[2];
  if (!(zoom > 0) || !std::isfinite(zoom)) return exec_error("zoom_factor must be positive");
  const double ww = std::min<double>(w, w / std::max(zoom, 1.0)), hh = std::min<double>(h, h / std::max(zoom, 1.0));
  const double x1 = std::clamp(std::round(v[0] - ww / 2), 0.0, w - std::round(ww));
  const double y1 = std::clamp(std::round(v[1] - hh / 2), 0.0, h - std::round(hh));
  return std::vector<double>{x1, y1, x1 + std::round(ww), y1 + std::round(hh), zoom};
}

}  // namespace

Result<AtomicOutput, ToolError> LocalUtilities::invoke(const tools::AtomicDescriptor& desc, std::string_view,
                                                       const tools::ToolInput& input, const tools::ExecContext& ctx) {
  const auto* entry = ctx.images ? ctx.images->find(input.image) : nullptr;
  if (entry == nullptr) return exec_error("unknown image '" + input.image + "'");

  if (desc.name == an::kCompute) {
    const auto op = input.text("op").value_or("");
    tools::ComputeResult out;
    if (op == "depth_mean") {
      const auto* depth = input.upstream_of<tools::DepthField>();
      if (!depth) return exec_error("depth_mean needs a depth field");
      if (const auto* dets = input.upstream_of<tools::Detections>()) {
        for (const auto& d : dets->items) out.values.push_back(box_mean(*depth, d.box));
      } else {
        out.values.push_back(box_mean(*depth, Box{0, 0, double(depth->width), double(depth->height)}));
      }
    } else if (op == "count") {
      const auto* dets = input.upstream_of<tools::Detections>();
      if (!dets) return exec_error("count needs detections");
      for (const auto& label : input.text_list("text_labels")) {
        out.values.push_back(static_cast<double>(std::count_if(
            dets->items.begin(), dets->items.end(),
            [&](const tools::Detection& d) { return world::label_matches(label, d.label); })));
      }
    } else if (op == "centroids") {
      const auto* masks = input.upstream_of<tools::Masks>();
      if (!masks) return exec_error("centroids needs masks");
      for (const auto& m : masks->items) {
        const auto c = m.centroid();
        const auto e = m.extent();
        if (!c) return fail(ToolError{ToolErrorKind::EmptyReturn, "empty mask for " + m.label});
        out.values.insert(out.values.end(), {c->first, c->second, e.width(), e.height()});
      }
    } else if (op == "points") {
      const auto* cloud = input.upstream_of<tools::PointCloud3D>();
      if (!cloud) return exec_error("points needs a point cloud");
      for (const auto& p : cloud->points) out.values.insert(out.values.end(), {p.xyz.x, p.xyz.y, p.xyz.z});
    } else if (op == "roi") {
      auto roi = resolve_roi(input.number_list("values"), entry->raster.width(), entry->raster.height());
      if (!roi) return fail(roi.error());
      out.values = std::move(roi).value();
    } else {
      return exec_error("unknown compute op '" + op + "'");
    }
    out.text = op;
    return AtomicOutput{std::move(out)};
  }

  if (desc.name == an::kRender) {
    const auto kind = parse_visual_kind(input.text("kind").value_or(""));
    if (!kind) return exec_error("unknown render kind");
    VisualPayload payload{input.upstream_of<tools::Detections>(), input.upstream_of<tools::Masks>(),
                          input.upstream_of<tools::DepthField>(), std::nullopt};
    const auto box = input.number_list("box");
    if (*kind == VisualKind::Crop) {
      if (box.size() != 4) return exec_error("crop needs box=[x1, y1, x2, y2]");
      payload.crop = tools::CropView{box[0], box[1], box[2], box[3], input.number("zoom_factor").value_or(1.0)};
    }
    auto raster = render_hint_visual(*kind, payload, entry->raster);
    if (!raster) {
      const auto prefix = raster.error().kind == RenderErrorKind::RenderBounds ? "RenderBounds: " : "";
      return exec_error(prefix + raster.error().message);
    }
    std::optional<tools::SceneBinding> binding;
    if (entry->scene) {
      if (*kind == VisualKind::Crop) {
        binding = *entry->scene;
        binding->views.push_back(*payload.crop);
        binding->scene = world::crop_scene(entry->scene->scene, *payload.crop);
      } else if (*kind != VisualKind::Montage) {
        binding = entry->scene;
      }
    }
    tools::ComputeResult out;
    out.values = {double(raster->width()), double(raster->height())};
    out.image_ref = ctx.images->add(std::move(raster).value(), std::move(binding)).ref;
    return AtomicOutput{std::move(out)};
  }
  return exec_error("unknown operation");
}

// ---------------------------------------------------------------------------
// Skill execution

namespace {

std::string point_text(double x, double y) { return "(" + format_number(x) + ", " + format_number(y) + ")"; }

// One skill call in flight: threads upstream outputs through the sequence.
class Run {
 public:
  Run(const tools::Registry& reg, const SkillContext& ctx, std::optional<ToolErrorKind> inject, std::string image)
      : reg_(reg), ctx_(ctx), inject_(inject), image_(std::move(image)) {}

  Result<AtomicOutput, ToolError> call(std::string_view atomic, std::vector<ActionArg> args,
                                       std::vector<AtomicOutput> upstream = {}) {
    const auto* entry = reg_.find(atomic);
    if (!entry) return exec_error("unknown atomic '" + std::string(atomic) + "'");
    args.insert(args.begin(), ActionArg{"image", image_});
    auto input = tools::validate_and_bind(entry->descriptor, args);
    if (!input) return exec_error(input.error().message);
    input->upstream = std::move(upstream);
    tools::ExecContext ec;
    ec.images = ctx_.images;
    ec.deadline = ctx_.deadline;
    ec.seed = derive_seed(ctx_.seed, {ctx_.call_index, step_++});
    ec.inject = std::exchange(inject_, std::nullopt);
    return tools::invoke_atomic(reg_, atomic, *input, ec);
  }

 private:
  const tools::Registry& reg_;
  const SkillContext& ctx_;
  std::optional<ToolErrorKind> inject_;
  std::string image_;
  std::uint64_t step_ = 0;
};

template <typename T>
const T& as(const AtomicOutput& out) {
  return std::get<T>(out);
}

std::vector<std::pair<std::string, bool>> found_flags(const std::vector<std::string>& queries,
                                                      const tools::Detections& dets) {
  std::vector<std::pair<std::string, bool>> out;
  for (const auto& q : queries) {
    const bool found = std::any_of(dets.items.begin(), dets.items.end(),
                                   [&](const tools::Detection& d) { return world::label_matches(q, d.label); });
    out.emplace_back(q, found);
  }
  return out;
}

SkillStatus status_of(const std::vector<std::pair<std::string, bool>>& flags) {
  const auto n = std::count_if(flags.begin(), flags.end(), [](const auto& f) { return f.second; });
  if (n == static_cast<long>(flags.size())) return SkillStatus::Complete;
  return n > 0 ? SkillStatus::Partial : SkillStatus::Failed;
}

std::string missing_lines(const std::vector<std::pair<std::string, bool>>& flags) {
  std::string out;
  for (const auto& [q, found] : flags) {
    if (!found) out += "\n" + q + ": not found";
  }
  return out;
}

}  // namespace

Toolbox::Toolbox(tools::Registry registry, FaultConfig faults) : registry_(std::move(registry)), faults_(std::move(faults)) {}

Result<SkillResult, SkillError> Toolbox::execute(const grammar::ActionCall& call, const SkillContext& ctx) const {
  const auto* skill = find_skill(call.skill_name);
  if (!skill) return fail(SkillError{SkillErrorKind::UnknownSkill, "unknown skill '" + call.skill_name + "'"});
  auto bound = tools::validate_and_bind(skill->schema, call.args);
  if (!bound) return fail(SkillError{SkillErrorKind::ArgValidation, bound.error().message});
  const auto& in = *bound;

  std::vector<double> roi;
  if (skill->name == skill_names::kZoom) {
    const auto box = in.number_list("box"), center = in.number_list("center");
    if (box.empty() == center.empty()) {
      return fail(SkillError{SkillErrorKind::OverconstrainedROI, "ZoomCrop takes exactly one of box or center"});
    }
    if (!box.empty() && box.size() != 4) return fail(SkillError{SkillErrorKind::ArgValidation, "box needs 4 numbers"});
    if (!center.empty() && center.size() != 2) {
      return fail(SkillError{SkillErrorKind::ArgValidation, "center needs 2 numbers"});
    }
    roi = box.empty() ? center : box;
    roi.push_back(in.number("zoom_factor").value_or(1.0));
  }

  std::optional<ToolErrorKind> inject = ctx.force_fault;
  if (!inject && faults_.probability > 0) {
    Rng rng(derive_seed(ctx.seed, {hash_str("fault"), ctx.call_index}));
    if (rng.bernoulli(faults_.probability)) {
      double total = 0;
      for (const auto& [k, w] : faults_.kinds) total += std::max(0.0, w);
      auto kind = ToolErrorKind::ExecutionError;
      double u = rng.uniform() * total;
      for (const auto& [k, w] : faults_.kinds) {
        kind = k;
        u -= std::max(0.0, w);
        if (u < 0) break;
      }
      inject = kind;
    }
  }

  SkillResult result;
  result.skill = skill->name;
  const auto failed = [&](ToolError err) {
    result.status = SkillStatus::Failed;
    result.hints = {Hint{"", failure_text(skill->name, err.kind)}};
    result.error = std::move(err);
    return result;
  };
  Run run(registry_, ctx, inject, in.image);
  const auto labels = in.text_list("text_labels");
  const auto threshold = in.number("threshold").value_or(0.1);
  const std::string base = in.image;

  const auto detect = [&]() -> Result<AtomicOutput, ToolError> {
    return run.call(an::kDetect, {{"text_labels", labels}, {"threshold", threshold}});
  };
  const auto render = [&](std::string kind, std::vector<AtomicOutput> upstream,
                          std::vector<ActionArg> extra = {}) -> Result<std::string, ToolError> {
    extra.insert(extra.begin(), ActionArg{"kind", std::move(kind)});
    auto r = run.call(an::kRender, std::move(extra), std::move(upstream));
    if (!r) return fail(r.error());
    return *as<tools::ComputeResult>(*r).image_ref;
  };
  const auto empty = [&] { return failed(ToolError{ToolErrorKind::EmptyReturn, "no query found"}); };

#define HB_TRY(var, expr)                 \
  auto var = (expr);                      \
  if (!var) return failed(var.error());

  const auto& name = skill->name;
  if (name == skill_names::kSegment || name == skill_names::kSize) {
    HB_TRY(dets, detect());
    const auto& detections = as<tools::Detections>(*dets);
    result.per_query = found_flags(labels, detections);
    result.status = status_of(result.per_query);
    if (result.status == SkillStatus::Failed) return empty();
    HB_TRY(masks, run.call(an::kSegment, {}, {*dets}));
    HB_TRY(stats, run.call(an::kCompute, {{"op", std::string("centroids")}}, {*masks}));
    const bool size = name == skill_names::kSize;
    HB_TRY(visual, render(size ? "montage" : "masks", {*dets, *masks}));
    const auto& m = as<tools::Masks>(*masks).items;
    const auto& v = as<tools::ComputeResult>(*stats).values;
    std::string text = (size ? "Object sizes in " : "Segmentation of ") + base + " (visual: " + *visual + "):";
    for (std::size_t i = 0; i < m.size(); ++i) {
      text += "\n" + m[i].label + ": centroid " + point_text(v[4 * i], v[4 * i + 1]);
      if (size) text += ", extent " + format_number(v[4 * i + 2]) + " x " + format_number(v[4 * i + 3]) + " px";
    }
    text += missing_lines(result.per_query);
    result.hints.push_back({*visual, std::move(text)});
  } else if (name == skill_names::kDepth) {
    HB_TRY(depth, run.call(an::kDepth, {}));
    std::vector<AtomicOutput> upstream{*depth};
    if (!labels.empty()) {
      HB_TRY(dets, detect());
      result.per_query = found_flags(labels, as<tools::Detections>(*dets));
      result.status = status_of(result.per_query);
      if (result.status == SkillStatus::Failed) return empty();
      upstream.push_back(*dets);
    } else {
      result.status = SkillStatus::Complete;
    }
    HB_TRY(means, run.call(an::kCompute, {{"op", std::string("depth_mean")}}, upstream));
    HB_TRY(visual, render("depth", upstream));
    std::string text;
    if (labels.empty()) {
      text = "Depth map of " + base + " (visual: " + *visual + "; darker = nearer), mean depth " +
             format_fixed(as<tools::ComputeResult>(*means).values.at(0), 6) + ".";
    } else {
      text = "Average depth in " + base + " (visual: " + *visual + "; 0 = near, 1 = far):";
      const auto& d = as<tools::Detections>(upstream[1]).items;
      const auto& v = as<tools::ComputeResult>(*means).values;
      for (std::size_t i = 0; i < d.size(); ++i) text += "\n" + d[i].label + ": " + format_fixed(v[i], 6);
      text += missing_lines(result.per_query);
    }
    result.hints.push_back({*visual, std::move(text)});
  } else if (name == skill_names::kCount) {
    HB_TRY(dets, detect());
    const auto& d = as<tools::Detections>(*dets).items;
    result.per_query = found_flags(labels, as<tools::Detections>(*dets));
    result.status = status_of(result.per_query);
    if (result.status == SkillStatus::Failed) return empty();
    HB_TRY(counts, run.call(an::kCompute, {{"op", std::string("count")}, {"text_labels", labels}}, {*dets}));
    HB_TRY(visual, render("boxes", {*dets}));
    const auto& v = as<tools::ComputeResult>(*counts).values;
    std::string text = "Counts in " + base + " (visual: " + *visual + "):";
    for (std::size_t i = 0; i < labels.size(); ++i) {
      text += "\n" + labels[i] + ": " + format_number(v[i]);
      std::vector<std::string> centers;
      for (const auto& det : d) {
        if (world::label_matches(labels[i], det.label)) centers.push_back(point_text(det.box.cx(), det.box.cy()));
      }
      if (!centers.empty()) text += ", centroids " + join(centers, ", ");
    }
    result.hints.push_back({*visual, std::move(text)});
  } else if (name == skill_names::kZoom) {
    HB_TRY(window, run.call(an::kCompute, {{"op", std::string("roi")}, {"values", roi}}));
    const auto w = as<tools::ComputeResult>(*window).values;
    const std::vector<double> box(w.begin(), w.begin() + 4);
    HB_TRY(visual, render("crop", {}, {{"box", box}, {"zoom_factor", w[4]}}));
    const auto* img = ctx.images->find(*visual);
    result.status = SkillStatus::Complete;
    result.hints.push_back(
        {*visual, "Zoomed region [" + format_number(box[0]) + ", " + format_number(box[1]) + ", " +
                      format_number(box[2]) + ", " + format_number(box[3]) + "] of " + base + " at factor " +
                      format_number(w[4]) + " (visual: " + *visual + ", " + std::to_string(img->raster.width()) +
                      "x" + std::to_string(img->raster.height()) + " px)."});
  } else if (name == skill_names::k3D) {
    HB_TRY(dets, detect());
    result.per_query = found_flags(labels, as<tools::Detections>(*dets));
    result.status = status_of(result.per_query);
    if (result.status == SkillStatus::Failed) return empty();
    HB_TRY(cloud, run.call(an::kReconstruct, {}, {*dets}));
    HB_TRY(coords, run.call(an::kCompute, {{"op", std::string("points")}}, {*cloud}));
    HB_TRY(visual, render("boxes", {*dets}));
    const auto& pc = as<tools::PointCloud3D>(*cloud);
    const auto& v = as<tools::ComputeResult>(*coords).values;
    std::string text = "3D points in " + base + " (visual: " + *visual + "; camera frame, meters):";
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
      text += "\n" + pc.points[i].label + ": [" + format_number(v[3 * i]) + ", " + format_number(v[3 * i + 1]) + ", " +
              format_number(v[3 * i + 2]) + "]";
    }
    for (const auto& det : as<tools::Detections>(*dets).items) {
      const bool has = std::any_of(pc.points.begin(), pc.points.end(),
                                   [&](const tools::LabeledPoint& p) { return p.label == det.label; });
      if (!has) text += "\n" + det.label + ": no 3D point";
    }
    text += missing_lines(result.per_query);
    if (pc.camera) {
      text += "\ncamera: focal " + format_number(pc.camera->focal) + ", principal point " +
              point_text(pc.camera->cx, pc.camera->cy);
    }
    result.hints.push_back({*visual, std::move(text)});
  }
#undef HB_TRY
  return result;
}

tools::Registry make_registry(tools::BackendPtr perception, std::string detector_binding) {
  tools::Registry reg;
  auto local = std::make_shared<LocalUtilities>();
  for (auto& desc : tools::default_atomic_descriptors()) {
    const bool is_local = desc.name == an::kRender || desc.name == an::kCompute;
    const auto binding = desc.name == an::kDetect ? detector_binding : std::string();
    (void)reg.register_atomic(std::move(desc), is_local ? tools::BackendPtr(local) : perception, binding);
  }
  return reg;
}

Toolbox make_toolbox(tools::BackendPtr perception, FaultConfig faults, std::string detector_binding) {
  return Toolbox(make_registry(std::move(perception), std::move(detector_binding)), std::move(faults));
}

}  // namespace hintbox::skills
