// SPDX-License-Identifier: Apache-2.0
#include "hintbox/grammar/action.hpp"

#include "hintbox/common/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace hintbox::grammar {

const ArgValue* ActionCall::find(std::string_view key) const {
  for (const auto& a : args) {
    if (a.key == key) return &a.value;
  }
  return nullptr;
}

namespace {

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class CallParser {
 public:
  explicit CallParser(std::string_view text) : text_(text) {}

  Result<std::vector<ActionCall>, SyntaxError> run() {
    std::vector<ActionCall> calls;
    skip_separators();
    if (at_end()) return error("expected a call");
    while (!at_end()) {
      auto call = parse_call();
      if (!call) return fail(call.error());
      calls.push_back(std::move(call).value());
      const std::size_t before = pos_;
      skip_separators();
      if (!at_end() && pos_ == before) return error("expected ';' or whitespace between calls");
    }
    return calls;
  }

 private:
  using Err = Unexpected<SyntaxError>;

  Err error(std::string msg) const { return fail(SyntaxError{pos_, std::move(msg)}); }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_ws() {
    while (!at_end() && is_space(text_[pos_])) ++pos_;
  }
  void skip_separators() {
    while (!at_end() && (is_space(text_[pos_]) || text_[pos_] == ';')) ++pos_;
  }

  Result<ActionCall, SyntaxError> parse_call() {
    ActionCall call;
    if (!is_alpha(peek())) return error("expected skill name");
    while (!at_end() && (is_alpha(peek()) || is_digit(peek()))) call.skill_name.push_back(text_[pos_++]);
    skip_ws();
    if (peek() != '(') return error("expected '('");
    ++pos_;
    skip_ws();
    if (peek() == ')') {
      ++pos_;
      return call;
    }
    while (true) {
      skip_ws();
      const std::size_t key_at = pos_;
      if (!(is_alpha(peek()) || peek() == '_')) return error(at_end() ? "missing ')'" : "expected argument name");
      std::string key;
      while (!at_end() && (is_alpha(peek()) || is_digit(peek()) || peek() == '_')) key.push_back(text_[pos_++]);
      if (call.find(key) != nullptr) return fail(SyntaxError{key_at, "duplicate argument '" + key + "'"});
      skip_ws();
      if (peek() != '=') return error("expected '='");
      ++pos_;
      skip_ws();
      auto value = parse_value();
      if (!value) return fail(value.error());
      call.args.push_back({std::move(key), std::move(value).value()});
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
        if (peek() == ')') return error("trailing comma");
        continue;
      }
      if (peek() == ')') {
        ++pos_;
        return call;
      }
      return error(at_end() ? "missing ')'" : "expected ',' or ')'");
    }
  }

  Result<std::string, SyntaxError> parse_string() {
    const std::size_t start = pos_;
    ++pos_;  // opening quote
    std::string out;
    while (!at_end()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (at_end()) break;
        const char e = text_[pos_++];
        switch (e) {
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: return fail(SyntaxError{pos_ - 2, "unknown escape"});
        }
      } else {
        out.push_back(c);
      }
    }
    return fail(SyntaxError{start, "unterminated string"});
  }

  Result<double, SyntaxError> parse_number() {
    const std::size_t start = pos_;
    if (peek() == '-' || peek() == '+') ++pos_;
    if (!is_digit(peek())) return fail(SyntaxError{start, "expected a value"});
    while (is_digit(peek())) ++pos_;
    if (peek() == '.') {
      ++pos_;
      if (!is_digit(peek())) return error("expected digits after '.'");
      while (is_digit(peek())) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      ++pos_;
      if (peek() == '-' || peek() == '+') ++pos_;
      if (!is_digit(peek())) return error("malformed exponent");
      while (is_digit(peek())) ++pos_;
    }
    auto v = hintbox::parse_number(text_.substr(start, pos_ - start));
    if (!v) return fail(SyntaxError{start, "number out of range"});
    return *v;
  }

  Result<ArgValue, SyntaxError> parse_value() {
    if (peek() == '"') {
      auto s = parse_string();
      if (!s) return fail(s.error());
      return ArgValue{std::move(s).value()};
    }
    if (peek() == '[') return parse_list();
    auto n = parse_number();
    if (!n) return fail(n.error());
    return ArgValue{*n};
  }

  Result<ArgValue, SyntaxError> parse_list() {
    ++pos_;  // '['
    skip_ws();
    std::vector<std::string> texts;
    std::vector<double> numbers;
    std::optional<bool> is_text;
    if (peek() == ']') {
      ++pos_;
      return ArgValue{std::vector<std::string>{}};
    }
    while (true) {
      skip_ws();
      const std::size_t at = pos_;
      const bool text = peek() == '"';
      if (is_text && *is_text != text) return fail(SyntaxError{at, "heterogeneous list"});
      is_text = text;
      if (text) {
        auto s = parse_string();
        if (!s) return fail(s.error());
        texts.push_back(std::move(s).value());
      } else {
        if (peek() == '[') return error("nested lists are not supported");
        auto n = parse_number();
        if (!n) return fail(n.error());
        numbers.push_back(*n);
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
        if (peek() == ']') return error("trailing comma");
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        break;
      }
      return error(at_end() ? "missing ']'" : "expected ',' or ']'");
    }
    if (*is_text) return ArgValue{std::move(texts)};
    return ArgValue{std::move(numbers)};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

}  // namespace

Result<std::vector<ActionCall>, SyntaxError> parse_action_call(std::string_view text) {
  return CallParser(text).run();
}

std::string render_value(const ArgValue& v) {
  struct Visitor {
    std::string operator()(const std::string& s) const { return quote(s); }
    std::string operator()(double d) const { return format_number(d); }
    std::string operator()(const std::vector<std::string>& xs) const {
      std::vector<std::string> parts;
      for (const auto& x : xs) parts.push_back(quote(x));
      return "[" + join(parts, ", ") + "]";
    }
    std::string operator()(const std::vector<double>& xs) const {
      std::vector<std::string> parts;
      for (double x : xs) parts.push_back(format_number(x));
      return "[" + join(parts, ", ") + "]";
    }
  };
  return std::visit(Visitor{}, v);
}

std::string render_call(const ActionCall& call) {
  std::vector<std::string> parts;
  for (const auto& a : call.args) parts.push_back(a.key + "=" + render_value(a.value));
  return call.skill_name + "(" + join(parts, ", ") + ")";
}

std::string render_calls(const std::vector<ActionCall>& calls) {
  std::vector<std::string> parts;
  for (const auto& c : calls) parts.push_back(render_call(c));
  return join(parts, "\n");
}

}  // namespace hintbox::grammar
