// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/result.hpp"
#include "hintbox/grammar/action.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hintbox::grammar {

enum class TurnKind { Analysis, Action, Observation, Answer };

std::string_view turn_kind_name(TurnKind k) noexcept;

struct Turn {
  TurnKind kind = TurnKind::Analysis;
  std::string content;
  // Image references; only Observation turns carry them.
  std::vector<std::string> attachments;
  // Text found outside any tag, kept as an Analysis turn.
  bool untagged = false;

  // Filled for Action turns by the parser. Not part of equality.
  std::vector<ActionCall> calls;
  std::optional<SyntaxError> malformed;

  friend bool operator==(const Turn& a, const Turn& b) {
    return a.kind == b.kind && a.content == b.content && a.attachments == b.attachments && a.untagged == b.untagged;
  }
};

struct Trajectory {
  std::vector<Turn> turns;
  std::string raw_text;

  [[nodiscard]] const Turn* answer() const;

  // Structural equality; raw_text is ignored.
  friend bool operator==(const Trajectory& a, const Trajectory& b) { return a.turns == b.turns; }
};

// Tag name <-> turn kind mapping. Tag names are ASCII, no attributes.
struct GrammarConfig {
  std::vector<std::pair<std::string, TurnKind>> tags = {
      {"analy", TurnKind::Analysis},
      {"action", TurnKind::Action},
      {"obs", TurnKind::Observation},
      {"ans", TurnKind::Answer},
  };

  [[nodiscard]] std::vector<std::string> tag_names() const;
  [[nodiscard]] std::optional<std::string> tag_for(TurnKind k) const;
};

struct TagCount {
  int open_count = 0;
  int close_count = 0;
};

struct BalanceReport {
  std::map<std::string, TagCount> per_tag;
  bool balanced = true;
};

BalanceReport check_tag_balance(std::string_view text, std::span<const std::string> tags);

enum class ParseErrorKind { UnbalancedTags, NestedTags, MisplacedAnswer };

struct ParseError {
  ParseErrorKind kind;
  std::size_t offset = 0;
  std::string message;
};

std::string_view parse_error_name(ParseErrorKind k) noexcept;

Result<Trajectory, ParseError> parse_trajectory(std::string_view text, const GrammarConfig& config = {});

// Canonical serialization; turns are separated by '\n'.
std::string render_trajectory(const Trajectory& traj, const GrammarConfig& config = {});

// Attachment marker used inside observation content.
std::string attachment_marker(std::string_view image_ref);

enum class AnswerKind { MultipleChoice, Numeric };

struct NormalizedAnswer {
  AnswerKind kind = AnswerKind::MultipleChoice;
  std::string choice;  // "A".."F" for multiple choice
  double value = 0.0;  // numeric answers

  friend bool operator==(const NormalizedAnswer&, const NormalizedAnswer&) = default;
};

enum class AnswerErrorKind { NoAnswerTurn, NoParsableAnswer };

struct AnswerError {
  AnswerErrorKind kind;
  std::string message;
};

Result<NormalizedAnswer, AnswerError> extract_answer(const Trajectory& traj, AnswerKind kind);
Result<NormalizedAnswer, AnswerError> extract_answer_text(std::string_view content, AnswerKind kind);

}  // namespace hintbox::grammar
