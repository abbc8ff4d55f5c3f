// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scripted policy that knows which skill answers each task type and how to
// read the answer back out of hint text. Drives the oracle agent and the SFT
// teacher.

#include "hintbox/common/geometry.hpp"
#include "hintbox/grammar/action.hpp"
#include "hintbox/world/world.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hintbox::eval {

std::vector<grammar::ActionCall> plan_calls(const world::QAItem& qa, std::string_view image = "image-0");

// Facts recovered from hint text, keyed by query label (first occurrence).
struct HintFacts {
  std::map<std::string, std::pair<double, double>> centroids;
  std::map<std::string, std::pair<double, double>> extents;  // w, h px
  std::map<std::string, Vec3> points;
  std::map<std::string, double> depths;
  std::map<std::string, int> counts;
  std::optional<double> focal;
};

HintFacts parse_hints(std::string_view text);

struct DerivedAnswer {
  std::string answer;     // letter or number text
  std::string reasoning;  // one or two sentences
};

// Answer derivable from the observations, or nullopt when they lack the facts.
std::optional<DerivedAnswer> derive_answer(const world::QAItem& qa, const HintFacts& facts);

// Option letter whose text equals `option`, or whose number is nearest to `value`.
std::optional<std::string> letter_of(const world::QAItem& qa, std::string_view option);
std::optional<std::string> nearest_letter(const world::QAItem& qa, double value);

std::string analysis_text(const world::QAItem& qa);

}  // namespace hintbox::eval
