// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/result.hpp"
#include "hintbox/tools/atomic.hpp"
#include "hintbox/tools/image_store.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hintbox::tools {

// Validated inputs of one atomic call: the image it reads plus every
// declared argument (defaults filled). `upstream` carries outputs of earlier
// atomics in the same skill, e.g. detections consumed by segment.
struct ToolInput {
  std::string image;
  std::vector<ActionArg> args;
  std::vector<AtomicOutput> upstream;

  [[nodiscard]] const ArgValue* arg(std::string_view key) const;
  [[nodiscard]] std::optional<double> number(std::string_view key) const;
  [[nodiscard]] std::optional<std::string> text(std::string_view key) const;
  [[nodiscard]] std::vector<std::string> text_list(std::string_view key) const;
  [[nodiscard]] std::vector<double> number_list(std::string_view key) const;
  template <typename T>
  [[nodiscard]] const T* upstream_of() const {
    for (auto it = upstream.rbegin(); it != upstream.rend(); ++it) {
      if (const auto* p = std::get_if<T>(&*it)) return p;
    }
    return nullptr;
  }
};

struct ExecContext {
  ImageStore* images = nullptr;
  // Fault to realize on the next atomic call instead of running it.
  std::optional<ToolErrorKind> inject;
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
  std::uint64_t seed = 0;

  void set_budget(std::chrono::milliseconds budget) { deadline = std::chrono::steady_clock::now() + budget; }
  [[nodiscard]] std::chrono::milliseconds remaining() const;
};

class AtomicBackend {
 public:
  virtual ~AtomicBackend() = default;
  [[nodiscard]] virtual std::string_view name() const = 0;
  // Backends that can reproduce injected faults themselves (remote servers)
  // receive ExecContext::inject; for the rest the registry short-circuits.
  [[nodiscard]] virtual bool realizes_faults() const { return false; }
  virtual Result<AtomicOutput, ToolError> invoke(const AtomicDescriptor& desc, std::string_view binding,
                                                 const ToolInput& input, const ExecContext& ctx) = 0;
};

using BackendPtr = std::shared_ptr<AtomicBackend>;

enum class RegistryErrorKind { DuplicateName, InvalidDescriptor };

struct RegistryError {
  RegistryErrorKind kind;
  std::string message;
};

enum class BindErrorKind { MissingArg, TypeMismatch, UnknownArg };

std::string_view bind_error_name(BindErrorKind k) noexcept;

struct BindError {
  BindErrorKind kind;
  std::string arg;
  std::string message;
};

// Name -> (descriptor, backend) table. Built once, then shared read-only.
class Registry {
 public:
  struct Entry {
    AtomicDescriptor descriptor;
    BackendPtr backend;
    std::string binding;  // which model implements it, e.g. "groundingdino" or "owlv2"
  };

  Result<void, RegistryError> register_atomic(AtomicDescriptor descriptor, BackendPtr backend,
                                              std::string binding = {});

  [[nodiscard]] const Entry* find(std::string_view name) const;
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

// Checks call arguments against a schema: required present, types match,
// no extras; fills defaults. The ImageRef-typed parameter becomes input.image.
Result<ToolInput, BindError> validate_and_bind(std::span<const ParamSpec> schema, std::span<const ActionArg> args);
Result<ToolInput, BindError> validate_and_bind(const AtomicDescriptor& desc, std::span<const ActionArg> args);

Result<AtomicOutput, ToolError> invoke_atomic(const Registry& registry, std::string_view name,
                                              const ToolInput& input, const ExecContext& ctx);

}  // namespace hintbox::tools
