// SPDX-License-Identifier: Apache-2.0
#include "hintbox/eval/policy.hpp"

#include "hintbox/common/text.hpp"
#include "hintbox/skills/skills.hpp"

#include <cmath>
#include <regex>

namespace hintbox::eval {

using grammar::ActionArg;
using grammar::ActionCall;
using world::TaskType;

std::vector<ActionCall> plan_calls(const world::QAItem& qa, std::string_view image) {
  const auto call = [&](std::string_view skill, std::vector<std::string> labels) {
    return ActionCall{std::string(skill), {{"img_path", std::string(image)}, {"text_labels", std::move(labels)}}};
  };
  namespace sn = skills::skill_names;
  switch (qa.task) {
    case TaskType::RelDir: return {call(sn::kSegment, qa.entities)};
    case TaskType::RelDist:
    case TaskType::AbsDist: return {call(sn::k3D, qa.entities)};
    case TaskType::SizeEst: return {call(sn::kSize, qa.entities), call(sn::k3D, qa.entities)};
    case TaskType::Count: return {call(sn::kCount, qa.entities)};
  }
  return {};
}

HintFacts parse_hints(std::string_view text) {
  static const std::regex centroid(R"(^(.+?): centroid \(([^,]+), ([^)]+)\)(?:, extent (\S+) x (\S+) px)?$)");
  static const std::regex point(R"(^(.+?): \[([^,]+), ([^,]+), ([^\]]+)\]$)");
  static const std::regex camera(R"(^camera: focal (\S+), principal point .*$)");
  static const std::regex count(R"(^(.+?): (\d+)(?:, centroids .*)?$)");
  static const std::regex depth(R"(^(.+?): (\d+\.\d{6})$)");
  HintFacts f;
  const auto num = [](const std::ssub_match& m) { return parse_number(m.str()).value_or(std::nan("")); };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    std::smatch m;
    if (std::regex_match(line, m, centroid)) {
      f.centroids.emplace(m[1].str(), std::pair{num(m[2]), num(m[3])});
      if (m[4].matched) f.extents.emplace(m[1].str(), std::pair{num(m[4]), num(m[5])});
    } else if (std::regex_match(line, m, camera)) {
      f.focal = num(m[1]);
    } else if (std::regex_match(line, m, point)) {
      f.points.emplace(m[1].str(), Vec3{num(m[2]), num(m[3]), num(m[4])});
    } else if (std::regex_match(line, m, depth)) {
      f.depths.emplace(m[1].str(), num(m[2]));
    } else if (std::regex_match(line, m, count)) {
      f.counts.emplace(m[1].str(), std::stoi(m[2].str()));
    }
  }
  return f;
}

std::optional<std::string> letter_of(const world::QAItem& qa, std::string_view option) {
  for (std::size_t i = 0; i < qa.options.size(); ++i) {
    if (qa.options[i] == option) return std::string(1, world::kOptionLetters[i]);
  }
  return std::nullopt;
}

std::optional<std::string> nearest_letter(const world::QAItem& qa, double value) {
  std::optional<std::string> best;
  double best_gap = INFINITY;
  for (std::size_t i = 0; i < qa.options.size(); ++i) {
    const auto v = parse_number(qa.options[i].substr(0, qa.options[i].find(' ')));
    if (!v) continue;
    const double gap = std::abs(*v - value);
    if (gap < best_gap) {
      best_gap = gap;
      best = std::string(1, world::kOptionLetters[i]);
    }
  }
  return best;
}

std::string analysis_text(const world::QAItem& qa) {
  const auto names = join(qa.entities, " and the ");
  switch (qa.task) {
    case TaskType::RelDir: return "I need where the " + names + " sit in the image; segmenting both gives their centroids.";
    case TaskType::RelDist:
    case TaskType::AbsDist: return "I need the 3D positions of the " + names + " to measure the distance between them.";
    case TaskType::SizeEst:
      return "The height of the " + names + " follows from its pixel extent and its depth, so I will measure both.";
    case TaskType::Count: return "I will count every " + names + " in the image.";
  }
  return "Let me look at the image.";
}

std::optional<DerivedAnswer> derive_answer(const world::QAItem& qa, const HintFacts& f) {
  const auto& e = qa.entities;
  switch (qa.task) {
    case TaskType::RelDir: {
      if (e.size() < 2 || !f.centroids.contains(e[0]) || !f.centroids.contains(e[1])) return std::nullopt;
      const auto [ax, ay] = f.centroids.at(e[0]);
      const auto [bx, by] = f.centroids.at(e[1]);
      const auto dir = world::relative_direction(Box{ax, ay, ax, ay}, Box{bx, by, bx, by});
      auto letter = letter_of(qa, dir);
      if (!letter) return std::nullopt;
      return DerivedAnswer{*letter, "The " + e[0] + " centroid is at (" + format_number(ax) + ", " + format_number(ay) +
                                        ") and the " + e[1] + " centroid at (" + format_number(bx) + ", " +
                                        format_number(by) + "), so the " + e[0] + " is " + dir + " of the " + e[1] +
                                        "."};
    }
    case TaskType::RelDist:
    case TaskType::AbsDist: {
      if (e.size() < 2 || !f.points.contains(e[0]) || !f.points.contains(e[1])) return std::nullopt;
      const double d = world::distance(f.points.at(e[0]), f.points.at(e[1]));
      const auto why = "The Euclidean distance between the two points is " + format_number(d) + " m.";
      if (qa.task == TaskType::AbsDist) return DerivedAnswer{format_number(d), why};
      auto letter = nearest_letter(qa, d);
      if (!letter) return std::nullopt;
      return DerivedAnswer{*letter, why + " The closest option is " + *letter + "."};
    }
    case TaskType::SizeEst: {
      if (e.empty() || !f.extents.contains(e[0]) || !f.points.contains(e[0]) || !f.focal) return std::nullopt;
      const double h_px = f.extents.at(e[0]).second;
      const double z = f.points.at(e[0]).z;
      const double h = h_px * z / *f.focal;
      return DerivedAnswer{format_number(h), "The " + e[0] + " spans " + format_number(h_px) + " px at depth " +
                                                 format_number(z) + " m with focal length " + format_number(*f.focal) +
                                                 " px, so its height is " + format_number(h) + " m."};
    }
    case TaskType::Count: {
      if (e.empty() || !f.counts.contains(e[0])) return std::nullopt;
      const int c = f.counts.at(e[0]);
      auto letter = letter_of(qa, std::to_string(c));
      if (!letter) return std::nullopt;
      return DerivedAnswer{*letter, "The tool found " + std::to_string(c) + " " + e[0] + " instances."};
    }
  }
  return std::nullopt;
}

}  // namespace hintbox::eval
