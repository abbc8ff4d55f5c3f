// SPDX-License-Identifier: Apache-2.0
#include "hintbox/grammar/trajectory.hpp"

#include "hintbox/common/text.hpp"

#include <cctype>

namespace hintbox::grammar {

std::string_view turn_kind_name(TurnKind k) noexcept {
  switch (k) {
    case TurnKind::Analysis: return "analysis";
    case TurnKind::Action: return "action";
    case TurnKind::Observation: return "observation";
    case TurnKind::Answer: return "answer";
  }
  return "unknown";
}

std::string_view parse_error_name(ParseErrorKind k) noexcept {
  switch (k) {
    case ParseErrorKind::UnbalancedTags: return "UnbalancedTags";
    case ParseErrorKind::NestedTags: return "NestedTags";
    case ParseErrorKind::MisplacedAnswer: return "MisplacedAnswer";
  }
  return "unknown";
}

const Turn* Trajectory::answer() const {
  for (const auto& t : turns) {
    if (t.kind == TurnKind::Answer) return &t;
  }
  return nullptr;
}

std::vector<std::string> GrammarConfig::tag_names() const {
  std::vector<std::string> out;
  for (const auto& [name, kind] : tags) out.push_back(name);
  return out;
}

std::optional<std::string> GrammarConfig::tag_for(TurnKind k) const {
  for (const auto& [name, kind] : tags) {
    if (kind == k) return name;
  }
  return std::nullopt;
}

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) ++n;
  return n;
}

struct TagHit {
  std::size_t index;  // into config.tags
  bool closing;
  std::size_t length;
};

// Matches "<tag>" or "</tag>" for a configured tag at position pos.
std::optional<TagHit> match_tag(std::string_view text, std::size_t pos, const GrammarConfig& config) {
  if (text[pos] != '<') return std::nullopt;
  const bool closing = pos + 1 < text.size() && text[pos + 1] == '/';
  const std::size_t name_at = pos + (closing ? 2 : 1);
  for (std::size_t i = 0; i < config.tags.size(); ++i) {
    const auto& name = config.tags[i].first;
    if (text.substr(name_at, name.size()) == name && name_at + name.size() < text.size() &&
        text[name_at + name.size()] == '>') {
      return TagHit{i, closing, name.size() + (closing ? 3 : 2)};
    }
  }
  return std::nullopt;
}

constexpr std::string_view kMarkerOpen = "[[";
constexpr std::string_view kMarkerClose = "]]";

void split_attachments(Turn& turn) {
  std::string_view rest = turn.content;
  while (rest.starts_with(kMarkerOpen)) {
    const auto close = rest.find(kMarkerClose);
    if (close == std::string_view::npos) break;
    const auto ref = rest.substr(kMarkerOpen.size(), close - kMarkerOpen.size());
    if (ref.empty() || ref.find_first_of("[]\n") != std::string_view::npos) break;
    turn.attachments.emplace_back(ref);
    rest.remove_prefix(close + kMarkerClose.size());
  }
  turn.content = std::string(rest);
}

}  // namespace

std::string attachment_marker(std::string_view image_ref) {
  return std::string(kMarkerOpen) + std::string(image_ref) + std::string(kMarkerClose);
}

BalanceReport check_tag_balance(std::string_view text, std::span<const std::string> tags) {
  BalanceReport report;
  for (const auto& tag : tags) {
    TagCount c;
    c.open_count = static_cast<int>(count_occurrences(text, "<" + tag + ">"));
    c.close_count = static_cast<int>(count_occurrences(text, "</" + tag + ">"));
    if (c.open_count != c.close_count) report.balanced = false;
    report.per_tag[tag] = c;
  }
  return report;
}

Result<Trajectory, ParseError> parse_trajectory(std::string_view text, const GrammarConfig& config) {
  const auto names = config.tag_names();
  const auto balance = check_tag_balance(text, names);
  if (!balance.balanced) {
    std::string which;
    for (const auto& [tag, c] : balance.per_tag) {
      if (c.open_count != c.close_count) {
        which = tag + " " + std::to_string(c.open_count) + " open vs " + std::to_string(c.close_count) + " close";
        break;
      }
    }
    return fail(ParseError{ParseErrorKind::UnbalancedTags, 0, "unbalanced tags: " + which});
  }

  Trajectory traj;
  traj.raw_text = std::string(text);

  auto flush_untagged = [&](std::size_t from, std::size_t to) {
    const auto body = trim(text.substr(from, to - from));
    if (body.empty()) return;
    Turn t;
    t.kind = TurnKind::Analysis;
    t.content = std::string(body);
    t.untagged = true;
    traj.turns.push_back(std::move(t));
  };

  std::size_t pos = 0;
  std::size_t segment_start = 0;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t open_tag = kNone;
  std::size_t content_start = 0;

  while (pos < text.size()) {
    const auto hit = match_tag(text, pos, config);
    if (!hit) {
      ++pos;
      continue;
    }
    if (open_tag == kNone) {
      if (hit->closing) {
        return fail(ParseError{ParseErrorKind::NestedTags, pos,
                               "closing </" + config.tags[hit->index].first + "> without an open tag"});
      }
      flush_untagged(segment_start, pos);
      open_tag = hit->index;
      content_start = pos + hit->length;
    } else if (!hit->closing) {
      return fail(ParseError{ParseErrorKind::NestedTags, pos,
                             "<" + config.tags[hit->index].first + "> opened inside <" +
                                 config.tags[open_tag].first + ">"});
    } else if (hit->index != open_tag) {
      return fail(ParseError{ParseErrorKind::NestedTags, pos,
                             "</" + config.tags[hit->index].first + "> closes <" + config.tags[open_tag].first + ">"});
    } else {
      Turn t;
      t.kind = config.tags[open_tag].second;
      t.content = std::string(text.substr(content_start, pos - content_start));
      if (t.kind == TurnKind::Observation) split_attachments(t);
      if (t.kind == TurnKind::Action) {
        auto calls = parse_action_call(t.content);
        if (calls) {
          t.calls = std::move(calls).value();
        } else {
          auto err = calls.error();
          err.offset += content_start;
          t.malformed = std::move(err);
        }
      }
      traj.turns.push_back(std::move(t));
      open_tag = kNone;
      segment_start = pos + hit->length;
    }
    pos += hit->length;
  }
  flush_untagged(segment_start, text.size());

  for (std::size_t i = 0; i < traj.turns.size(); ++i) {
    if (traj.turns[i].kind == TurnKind::Answer && i + 1 != traj.turns.size()) {
      return fail(ParseError{ParseErrorKind::MisplacedAnswer, 0, "answer turn must be the last turn"});
    }
  }
  return traj;
}

std::string render_trajectory(const Trajectory& traj, const GrammarConfig& config) {
  std::string out;
  for (std::size_t i = 0; i < traj.turns.size(); ++i) {
    const auto& t = traj.turns[i];
    if (i) out.push_back('\n');
    if (t.untagged) {
      out += t.content;
      continue;
    }
    const auto tag = config.tag_for(t.kind).value_or("analy");
    out += "<" + tag + ">";
    for (const auto& a : t.attachments) out += attachment_marker(a);
    out += t.content;
    out += "</" + tag + ">";
  }
  return out;
}

Result<NormalizedAnswer, AnswerError> extract_answer_text(std::string_view content, AnswerKind kind) {
  NormalizedAnswer ans;
  ans.kind = kind;
  const auto body = trim(content);
  if (kind == AnswerKind::MultipleChoice) {
    // First standalone letter A-F, case-folded.
    for (std::size_t i = 0; i < body.size(); ++i) {
      const auto c = static_cast<unsigned char>(body[i]);
      if (!std::isalpha(c)) continue;
      const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(body[i - 1]));
      const bool right_ok = i + 1 == body.size() || !std::isalnum(static_cast<unsigned char>(body[i + 1]));
      const char up = static_cast<char>(std::toupper(c));
      if (left_ok && right_ok && up >= 'A' && up <= 'F') {
        ans.choice = std::string(1, up);
        return ans;
      }
    }
    return fail(AnswerError{AnswerErrorKind::NoParsableAnswer, "no option letter in answer"});
  }
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(body[i]))) continue;
    std::size_t start = i;
    if (i > 0 && body[i - 1] == '-') start = i - 1;
    std::size_t end = i;
    while (end < body.size() && std::isdigit(static_cast<unsigned char>(body[end]))) ++end;
    if (end + 1 < body.size() && body[end] == '.' && std::isdigit(static_cast<unsigned char>(body[end + 1]))) {
      ++end;
      while (end < body.size() && std::isdigit(static_cast<unsigned char>(body[end]))) ++end;
    }
    if (end < body.size() && (body[end] == 'e' || body[end] == 'E')) {
      std::size_t e = end + 1;
      if (e < body.size() && (body[e] == '+' || body[e] == '-')) ++e;
      if (e < body.size() && std::isdigit(static_cast<unsigned char>(body[e]))) {
        end = e;
        while (end < body.size() && std::isdigit(static_cast<unsigned char>(body[end]))) ++end;
      }
    }
    if (auto v = parse_number(body.substr(start, end - start))) {
      ans.value = *v;
      return ans;
    }
    break;
  }
  return fail(AnswerError{AnswerErrorKind::NoParsableAnswer, "no number in answer"});
}

Result<NormalizedAnswer, AnswerError> extract_answer(const Trajectory& traj, AnswerKind kind) {
  const Turn* ans = traj.answer();
  if (ans == nullptr) return fail(AnswerError{AnswerErrorKind::NoAnswerTurn, "trajectory has no answer turn"});
  return extract_answer_text(ans->content, kind);
}

}  // namespace hintbox::grammar
