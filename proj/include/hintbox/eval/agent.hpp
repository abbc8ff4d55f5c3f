// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/result.hpp"
#include "hintbox/grammar/trajectory.hpp"
#include "hintbox/tools/image_store.hpp"
#include "hintbox/world/world.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hintbox::eval {

// One agent output and the sandbox observation that answered it.
struct Exchange {
  std::string agent_text;
  std::optional<grammar::Turn> observation;
};

struct AgentView {
  const world::QAItem& qa;
  const std::vector<Exchange>& exchanges;
  const tools::ImageStore& images;
};

struct AgentError {
  std::string message;
};

class Agent {
 public:
  virtual ~Agent() = default;
  [[nodiscard]] virtual std::string_view name() const = 0;
  // Next chunk of the trajectory (one or more tagged segments).
  virtual Result<std::string, AgentError> next_turn(const AgentView& view) = 0;
};

// System prompt describing the tags and skills.
std::string system_prompt();

// First user message: the question with its options.
std::string question_text(const world::QAItem& qa);

// Plans the task's skill calls, then answers from the hints. After a failed
// or partial observation it falls back to `fallback` (a fixed guess).
class OracleAgent final : public Agent {
 public:
  [[nodiscard]] std::string_view name() const override { return "oracle"; }
  Result<std::string, AgentError> next_turn(const AgentView& view) override;
};

// Never calls tools; answers option A (or 1 for numeric items).
class NoToolAgent final : public Agent {
 public:
  [[nodiscard]] std::string_view name() const override { return "notool"; }
  Result<std::string, AgentError> next_turn(const AgentView& view) override;
};

struct RemoteAgentConfig {
  std::string endpoint;  // base URL; requests go to <endpoint>/v1/chat/completions
  std::string model = "default";
  std::string api_key;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::chrono::milliseconds timeout{60000};
};

// Chat-completion client. Observations go back as user messages with the
// hint text and the rendered rasters attached as PNG data URLs.
class RemoteChatAgent final : public Agent {
 public:
  explicit RemoteChatAgent(RemoteAgentConfig cfg) : cfg_(std::move(cfg)) {}
  [[nodiscard]] std::string_view name() const override { return "remote"; }
  Result<std::string, AgentError> next_turn(const AgentView& view) override;

  // Request body for the current view (exposed for tests).
  [[nodiscard]] std::string request_body(const AgentView& view) const;

 private:
  RemoteAgentConfig cfg_;
};

// Cuts a completion after its first </action> so the sandbox answers before
// the model continues.
std::string truncate_after_action(std::string text);

}  // namespace hintbox::eval
