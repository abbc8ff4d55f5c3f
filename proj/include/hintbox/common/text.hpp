// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hintbox {

// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

// Fixed-point with the given number of decimals.
std::string format_fixed(double v, int decimals);

std::optional<double> parse_number(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Case-fold and strip one leading article ("a ", "an ", "the ").
std::string normalize_label(std::string_view label);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace hintbox
