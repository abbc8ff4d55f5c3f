// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/result.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hintbox::grammar {

// Literal set of the call DSL: strings, decimals, homogeneous lists.
using ArgValue = std::variant<std::string, double, std::vector<std::string>, std::vector<double>>;

struct ActionArg {
  std::string key;
  ArgValue value;
  friend bool operator==(const ActionArg&, const ActionArg&) = default;
};

// One function-style invocation, e.g. ZoomCrop(img_path="image-0", box=[1, 2, 3, 4]).
// Argument order is kept as written; keys are unique.
struct ActionCall {
  std::string skill_name;
  std::vector<ActionArg> args;

  [[nodiscard]] const ArgValue* find(std::string_view key) const;
  friend bool operator==(const ActionCall&, const ActionCall&) = default;
};

struct SyntaxError {
  std::size_t offset = 0;
  std::string message;
};

// Parses one or more calls separated by whitespace or ';'.
Result<std::vector<ActionCall>, SyntaxError> parse_action_call(std::string_view text);

std::string render_value(const ArgValue& v);
std::string render_call(const ActionCall& call);
std::string render_calls(const std::vector<ActionCall>& calls);

}  // namespace hintbox::grammar
