// SPDX-License-Identifier: Apache-2.0
#include "hintbox/eval/agent.hpp"

#include "hintbox/common/raster.hpp"
#include "hintbox/common/text.hpp"
#include "hintbox/eval/policy.hpp"
#include "hintbox/skills/skills.hpp"

#include <httplib.h>
#include <json.hpp>

namespace hintbox::eval {

using nlohmann::json;

std::string system_prompt() {
  std::string out =
      "You solve spatial questions about an image by thinking, calling vision tools, and reading their results.\n"
      "Write your thinking inside <analy></analy>. To use a tool, write one or more calls inside <action></action>, "
      "for example <action>CountObjects(img_path=\"image-0\", text_labels=[\"chair\"])</action>, then stop. "
      "The sandbox replies inside <obs></obs> with text and a rendered image named image-1, image-2, and so on; "
      "later calls may use those names. If a tool fails or misses an object, reason from the original image "
      "instead. Give the final answer inside <ans></ans>: the option letter for multiple choice, a number in "
      "meters otherwise.\n\nTools:\n";
  for (const auto& s : skills::skill_descriptors()) {
    std::vector<std::string> params;
    for (const auto& p : s.schema) {
      auto text = p.name;
      if (!p.required && p.default_value) text += "=" + grammar::render_value(*p.default_value);
      params.push_back(text);
    }
    out += "- " + s.name + "(" + join(params, ", ") + "): " + s.summary + "\n";
  }
  return out;
}

std::string question_text(const world::QAItem& qa) {
  return qa.question;
}

std::string truncate_after_action(std::string text) {
  constexpr std::string_view close = "</action>";
  if (const auto at = text.find(close); at != std::string::npos) text.resize(at + close.size());
  return text;
}

namespace {

std::string wrap(std::string_view tag, std::string_view body) {
  return "<" + std::string(tag) + ">" + std::string(body) + "</" + std::string(tag) + ">";
}

std::string fallback_answer(const world::QAItem& qa) {
  return qa.kind == grammar::AnswerKind::Numeric ? "1" : "A";
}

}  // namespace

Result<std::string, AgentError> OracleAgent::next_turn(const AgentView& view) {
  const auto& qa = view.qa;
  if (view.exchanges.empty()) {
    return wrap("analy", analysis_text(qa)) + wrap("action", grammar::render_calls(plan_calls(qa)));
  }
  std::string text;
  for (const auto& ex : view.exchanges) {
    if (ex.observation) text += ex.observation->content + "\n";
  }
  if (auto derived = derive_answer(qa, parse_hints(text))) {
    return wrap("analy", derived->reasoning) + wrap("ans", derived->answer);
  }
  return wrap("analy", "The tool output does not cover every object, so I answer from the original image-0.") +
         wrap("ans", fallback_answer(qa));
}

Result<std::string, AgentError> NoToolAgent::next_turn(const AgentView& view) {
  return wrap("analy", "Answering from the image alone.") + wrap("ans", fallback_answer(view.qa));
}

std::string RemoteChatAgent::request_body(const AgentView& view) const {
  const auto image_part = [&](const std::string& ref) -> json {
    const auto* e = view.images.find(ref);
    if (!e) return nullptr;
    return {{"type", "image_url"},
            {"image_url", {{"url", "data:image/png;base64," + base64_encode(encode_png(e->raster))}}}};
  };
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", system_prompt()}});
  json first = json::array({{{"type", "text"}, {"text", question_text(view.qa) + "\nThe image is image-0."}}});
  if (auto img = image_part("image-0"); !img.is_null()) first.push_back(img);
  messages.push_back({{"role", "user"}, {"content", first}});
  for (const auto& ex : view.exchanges) {
    messages.push_back({{"role", "assistant"}, {"content", ex.agent_text}});
    if (!ex.observation) continue;
    json parts = json::array({{{"type", "text"}, {"text", wrap("obs", ex.observation->content)}}});
    for (const auto& ref : ex.observation->attachments) {
      if (auto img = image_part(ref); !img.is_null()) parts.push_back(img);
    }
    messages.push_back({{"role", "user"}, {"content", parts}});
  }
  return json{{"model", cfg_.model},
              {"messages", messages},
              {"temperature", cfg_.temperature},
              {"max_tokens", cfg_.max_tokens}}
      .dump();
}

Result<std::string, AgentError> RemoteChatAgent::next_turn(const AgentView& view) {
  httplib::Client cli(cfg_.endpoint);
  cli.set_connection_timeout(cfg_.timeout);
  cli.set_read_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  auto res = cli.Post("/v1/chat/completions", headers, request_body(view), "application/json");
  if (!res) return fail(AgentError{cfg_.endpoint + ": " + httplib::to_string(res.error())});
  if (res->status != 200) return fail(AgentError{"HTTP " + std::to_string(res->status) + " from " + cfg_.endpoint});
  try {
    const auto j = json::parse(res->body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) return fail(AgentError{"completion content is not text"});
    return truncate_after_action(content.get<std::string>());
  } catch (const std::exception& e) {
    return fail(AgentError{std::string("bad completion: ") + e.what()});
  }
}

}  // namespace hintbox::eval
