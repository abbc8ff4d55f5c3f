// SPDX-License-Identifier: Apache-2.0
#include "hintbox/tools/registry.hpp"

#include <algorithm>
#include <set>

namespace hintbox::tools {

const ArgValue* ToolInput::arg(std::string_view key) const {
  for (const auto& a : args) {
    if (a.key == key) return &a.value;
  }
  return nullptr;
}

std::optional<double> ToolInput::number(std::string_view key) const {
  if (const auto* v = arg(key); v && std::holds_alternative<double>(*v)) return std::get<double>(*v);
  return std::nullopt;
}

std::optional<std::string> ToolInput::text(std::string_view key) const {
  if (const auto* v = arg(key); v && std::holds_alternative<std::string>(*v)) return std::get<std::string>(*v);
  return std::nullopt;
}

std::vector<std::string> ToolInput::text_list(std::string_view key) const {
  if (const auto* v = arg(key); v && std::holds_alternative<std::vector<std::string>>(*v)) {
    return std::get<std::vector<std::string>>(*v);
  }
  return {};
}

std::vector<double> ToolInput::number_list(std::string_view key) const {
  if (const auto* v = arg(key); v && std::holds_alternative<std::vector<double>>(*v)) {
    return std::get<std::vector<double>>(*v);
  }
  return {};
}

std::chrono::milliseconds ExecContext::remaining() const {
  if (deadline == std::chrono::steady_clock::time_point::max()) return std::chrono::milliseconds::max();
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  return std::max(left, std::chrono::milliseconds{0});
}

std::string_view bind_error_name(BindErrorKind k) noexcept {
  switch (k) {
    case BindErrorKind::MissingArg: return "MissingArg";
    case BindErrorKind::TypeMismatch: return "TypeMismatch";
    case BindErrorKind::UnknownArg: return "UnknownArg";
  }
  return "unknown";
}

Result<void, RegistryError> Registry::register_atomic(AtomicDescriptor descriptor, BackendPtr backend,
                                                      std::string binding) {
  if (descriptor.name.empty()) return fail(RegistryError{RegistryErrorKind::InvalidDescriptor, "empty name"});
  if (!backend) return fail(RegistryError{RegistryErrorKind::InvalidDescriptor, "no backend for " + descriptor.name});
  std::set<std::string> seen;
  for (const auto& p : descriptor.input_schema) {
    if (!seen.insert(p.name).second) {
      return fail(RegistryError{RegistryErrorKind::InvalidDescriptor, "duplicate parameter " + p.name});
    }
    if (p.required == p.default_value.has_value()) {
      return fail(RegistryError{RegistryErrorKind::InvalidDescriptor,
                                "parameter " + p.name + ": required params take no default, optional ones need one"});
    }
  }
  if (entries_.contains(descriptor.name)) {
    return fail(RegistryError{RegistryErrorKind::DuplicateName, "atomic '" + descriptor.name + "' already registered"});
  }
  auto name = descriptor.name;
  entries_.emplace(std::move(name), Entry{std::move(descriptor), std::move(backend), std::move(binding)});
  return {};
}

const Registry::Entry* Registry::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Registry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

namespace {

bool matches(SemanticType type, const ArgValue& v) {
  const bool empty_list = (std::holds_alternative<std::vector<std::string>>(v) &&
                           std::get<std::vector<std::string>>(v).empty()) ||
                          (std::holds_alternative<std::vector<double>>(v) && std::get<std::vector<double>>(v).empty());
  switch (type) {
    case SemanticType::ImageRef:
      return std::holds_alternative<std::string>(v) && is_image_ref(std::get<std::string>(v));
    case SemanticType::Text:
      return std::holds_alternative<std::string>(v);
    case SemanticType::TextList:
      return std::holds_alternative<std::vector<std::string>>(v) || empty_list;
    case SemanticType::Number:
      return std::holds_alternative<double>(v);
    case SemanticType::NumberList:
      return std::holds_alternative<std::vector<double>>(v) || empty_list;
  }
  return false;
}

// Empty lists parse as text lists; coerce to the declared list type.
ArgValue coerce(SemanticType type, ArgValue v) {
  if (type == SemanticType::NumberList && std::holds_alternative<std::vector<std::string>>(v)) {
    return std::vector<double>{};
  }
  if (type == SemanticType::TextList && std::holds_alternative<std::vector<double>>(v)) {
    return std::vector<std::string>{};
  }
  return v;
}

}  // namespace

Result<ToolInput, BindError> validate_and_bind(std::span<const ParamSpec> schema, std::span<const ActionArg> args) {
  for (const auto& a : args) {
    const bool known = std::any_of(schema.begin(), schema.end(), [&](const ParamSpec& p) { return p.name == a.key; });
    if (!known) return fail(BindError{BindErrorKind::UnknownArg, a.key, "unknown argument '" + a.key + "'"});
  }
  ToolInput input;
  for (const auto& p : schema) {
    const auto it = std::find_if(args.begin(), args.end(), [&](const ActionArg& a) { return a.key == p.name; });
    if (it == args.end()) {
      if (p.required) return fail(BindError{BindErrorKind::MissingArg, p.name, "missing argument '" + p.name + "'"});
      if (p.default_value) input.args.push_back({p.name, *p.default_value});
      continue;
    }
    if (!matches(p.type, it->value)) {
      return fail(BindError{BindErrorKind::TypeMismatch, p.name,
                            "argument '" + p.name + "' must be " + std::string(semantic_type_name(p.type))});
    }
    auto value = coerce(p.type, it->value);
    if (p.type == SemanticType::ImageRef) input.image = std::get<std::string>(value);
    input.args.push_back({p.name, std::move(value)});
  }
  return input;
}

Result<ToolInput, BindError> validate_and_bind(const AtomicDescriptor& desc, std::span<const ActionArg> args) {
  return validate_and_bind(std::span<const ParamSpec>(desc.input_schema), args);
}

Result<AtomicOutput, ToolError> invoke_atomic(const Registry& registry, std::string_view name, const ToolInput& input,
                                              const ExecContext& ctx) {
  const auto* entry = registry.find(name);
  if (entry == nullptr) return fail(ToolError{ToolErrorKind::ExecutionError, "unknown atomic '" + std::string(name) + "'"});
  if (ctx.images == nullptr) return fail(ToolError{ToolErrorKind::ExecutionError, "no image store"});
  const auto* image = ctx.images->find(input.image);
  if (image == nullptr) return fail(ToolError{ToolErrorKind::ExecutionError, "unknown image '" + input.image + "'"});
  if (std::chrono::steady_clock::now() >= ctx.deadline) {
    return fail(ToolError{ToolErrorKind::Timeout, "budget exhausted before " + std::string(name)});
  }
  if (ctx.inject && !entry->backend->realizes_faults()) {
    return fail(ToolError{*ctx.inject, "injected fault"});
  }

  auto out = entry->backend->invoke(entry->descriptor, entry->binding, input, ctx);
  if (!out) return out;
  if (std::chrono::steady_clock::now() > ctx.deadline) {
    return fail(ToolError{ToolErrorKind::Timeout, std::string(name) + " exceeded its budget"});
  }
  if (kind_of(*out) != entry->descriptor.output_kind) {
    return fail(ToolError{ToolErrorKind::ExecutionError, std::string(name) + " returned " +
                                                             std::string(output_kind_name(kind_of(*out))) + ", expected " +
                                                             std::string(output_kind_name(entry->descriptor.output_kind))});
  }
  if (auto bad = check_output(*out, image->raster.width(), image->raster.height())) {
    return fail(ToolError{ToolErrorKind::ExecutionError, std::string(name) + ": " + *bad});
  }
  return out;
}

}  // namespace hintbox::tools
