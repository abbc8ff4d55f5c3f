// SPDX-License-Identifier: Apache-2.0
#pragma once

// tool.v1: one atomic call per HTTP POST to /v1/atomic. Bodies are
// "<byte length>\n<json>".

#include "hintbox/common/result.hpp"
#include "hintbox/tools/registry.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hintbox::backend {

inline constexpr std::string_view kSchema = "tool.v1";
inline constexpr std::string_view kAtomicPath = "/v1/atomic";
inline constexpr std::string_view kHealthPath = "/v1/health";
inline constexpr std::string_view kInjectHeader = "x-inject";
inline constexpr std::string_view kEndpointEnv = "HINTBOX_BACKEND_URL";

struct ImagePayload {
  std::string ref;  // server-side scene key
  std::vector<tools::CropView> views;
  std::optional<std::string> data;  // base64 PPM when no scene key is known
};

struct ToolRequest {
  std::string request_id;
  std::string atomic_name;
  ImagePayload image;
  std::vector<tools::ActionArg> args;
  std::vector<tools::AtomicOutput> upstream;
  std::int64_t deadline_ms = 30000;
  std::uint64_t seed = 0;
  std::string model;  // binding, e.g. "groundingdino"
};

enum class ResponseStatus { Ok, Empty, Error };

std::string_view status_name(ResponseStatus s) noexcept;

struct ToolResponse {
  std::string request_id;
  ResponseStatus status = ResponseStatus::Error;
  std::optional<tools::AtomicOutput> payload;
  std::string error_detail;
};

struct DecodeError {
  std::string message;
};

nlohmann::json output_to_json(const tools::AtomicOutput& out);
Result<tools::AtomicOutput, DecodeError> output_from_json(const nlohmann::json& j);

nlohmann::json request_to_json(const ToolRequest& req);
Result<ToolRequest, DecodeError> request_from_json(const nlohmann::json& j);

nlohmann::json response_to_json(const ToolResponse& resp);
// Also enforces the status/payload invariants.
Result<ToolResponse, DecodeError> response_from_json(const nlohmann::json& j);

std::string frame_body(const nlohmann::json& j);
Result<nlohmann::json, DecodeError> unframe_body(std::string_view body);

// Run-length encoding of a 0/1 mask: alternating run lengths, zeros first.
std::vector<std::uint32_t> rle_encode(const std::vector<std::uint8_t>& bits);
std::optional<std::vector<std::uint8_t>> rle_decode(const std::vector<std::uint32_t>& runs, std::size_t n);

std::string_view inject_value(tools::ToolErrorKind kind) noexcept;

// ---------------------------------------------------------------------------
// Client

enum class TransportErrorKind { ConnectFailed, DeadlineExceeded, MalformedResponse };

std::string_view transport_error_name(TransportErrorKind k) noexcept;

struct TransportError {
  TransportErrorKind kind;
  std::string message;
};

tools::ToolError to_tool_error(const TransportError& e);

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{20};
};

// Sends `req` to `endpoint` (e.g. "http://127.0.0.1:8080"). Retries transport
// faults only, never beyond req.deadline_ms.
Result<ToolResponse, TransportError> call_remote(std::string_view endpoint, const ToolRequest& req,
                                                 const RetryPolicy& policy = {},
                                                 std::optional<std::string> inject = std::nullopt);

std::string new_request_id();

// Perception atomics forwarded to a tool.v1 server. Images bound to a
// synthetic scene travel by reference, others as base64 PPM.
class RemoteBackend final : public tools::AtomicBackend {
 public:
  explicit RemoteBackend(std::string endpoint, RetryPolicy policy = {})
      : endpoint_(std::move(endpoint)), policy_(policy) {}
  [[nodiscard]] std::string_view name() const override { return "remote"; }
  [[nodiscard]] bool realizes_faults() const override { return true; }
  [[nodiscard]] const std::string& endpoint() const noexcept { return endpoint_; }
  Result<tools::AtomicOutput, tools::ToolError> invoke(const tools::AtomicDescriptor& desc, std::string_view binding,
                                                       const tools::ToolInput& input,
                                                       const tools::ExecContext& ctx) override;

 private:
  std::string endpoint_;
  RetryPolicy policy_;
};

}  // namespace hintbox::backend
