// SPDX-License-Identifier: Apache-2.0
#include "hintbox/backend/protocol.hpp"

#include "hintbox/common/raster.hpp"
#include "hintbox/common/rng.hpp"

#include <httplib.h>

#include <atomic>
#include <bit>
#include <charconv>
#include <cstring>
#include <random>
#include <thread>

namespace hintbox::backend {

using nlohmann::json;
using namespace tools;

std::string_view status_name(ResponseStatus s) noexcept {
  switch (s) {
    case ResponseStatus::Ok: return "ok";
    case ResponseStatus::Empty: return "empty";
    case ResponseStatus::Error: return "error";
  }
  return "error";
}

std::string_view transport_error_name(TransportErrorKind k) noexcept {
  switch (k) {
    case TransportErrorKind::ConnectFailed: return "ConnectFailed";
    case TransportErrorKind::DeadlineExceeded: return "DeadlineExceeded";
    case TransportErrorKind::MalformedResponse: return "MalformedResponse";
  }
  return "unknown";
}

ToolError to_tool_error(const TransportError& e) {
  switch (e.kind) {
    case TransportErrorKind::ConnectFailed: return {ToolErrorKind::BackendUnavailable, e.message};
    case TransportErrorKind::DeadlineExceeded: return {ToolErrorKind::Timeout, e.message};
    case TransportErrorKind::MalformedResponse: return {ToolErrorKind::ExecutionError, e.message};
  }
  return {ToolErrorKind::ExecutionError, e.message};
}

std::string_view inject_value(ToolErrorKind kind) noexcept {
  switch (kind) {
    case ToolErrorKind::EmptyReturn: return "empty";
    case ToolErrorKind::ExecutionError: return "error";
    case ToolErrorKind::Timeout: return "timeout";
    case ToolErrorKind::BackendUnavailable: return "unavailable";
  }
  return "error";
}

std::vector<std::uint32_t> rle_encode(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t n = 0;
  for (auto b : bits) {
    const std::uint8_t v = b ? 1 : 0;
    if (v != current) {
      runs.push_back(n);
      current = v;
      n = 0;
    }
    ++n;
  }
  runs.push_back(n);
  return runs;
}

std::optional<std::vector<std::uint8_t>> rle_decode(const std::vector<std::uint32_t>& runs, std::size_t n) {
  std::vector<std::uint8_t> bits;
  bits.reserve(n);
  std::uint8_t v = 0;
  for (auto r : runs) {
    if (bits.size() + r > n) return std::nullopt;
    bits.insert(bits.end(), r, v);
    v ^= 1;
  }
  if (bits.size() != n) return std::nullopt;
  return bits;
}

namespace {

std::string floats_to_base64(const std::vector<float>& values) {
  std::string raw(values.size() * 4, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto u = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) raw[4 * i + static_cast<std::size_t>(b)] = static_cast<char>((u >> (8 * b)) & 0xff);
  }
  return base64_encode(raw);
}

std::optional<std::vector<float>> floats_from_base64(std::string_view text) {
  const auto raw = base64_decode(text);
  if (!raw || raw->size() % 4 != 0) return std::nullopt;
  std::vector<float> out(raw->size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) {
      u |= static_cast<std::uint32_t>(static_cast<unsigned char>((*raw)[4 * i + static_cast<std::size_t>(b)])) << (8 * b);
    }
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

json box_json(const Box& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must have 4 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

json arg_json(const ArgValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

ArgValue arg_from(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return j.get<double>();
  if (j.is_array()) {
    if (j.empty() || j[0].is_string()) return j.get<std::vector<std::string>>();
    return j.get<std::vector<double>>();
  }
  throw std::invalid_argument("unsupported argument value");
}

AtomicOutput output_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "detections") {
    Detections d;
    for (const auto& it : j.at("items")) {
      d.items.push_back({it.at("label").get<std::string>(), box_from(it.at("box")), it.at("score").get<double>()});
    }
    return d;
  }
  if (kind == "mask") {
    Masks m;
    for (const auto& it : j.at("items")) {
      ObjectMask om;
      om.label = it.at("label").get<std::string>();
      om.width = it.at("width").get<int>();
      om.height = it.at("height").get<int>();
      if (om.width < 0 || om.height < 0) throw std::invalid_argument("negative mask size");
      auto bits = rle_decode(it.at("rle").get<std::vector<std::uint32_t>>(),
                             static_cast<std::size_t>(om.width) * static_cast<std::size_t>(om.height));
      if (!bits) throw std::invalid_argument("mask rle does not match its size");
      om.bits = std::move(*bits);
      m.items.push_back(std::move(om));
    }
    return m;
  }
  if (kind == "depth") {
    DepthField f;
    f.width = j.at("width").get<int>();
    f.height = j.at("height").get<int>();
    auto values = floats_from_base64(j.at("data").get<std::string>());
    if (!values || f.width < 0 || f.height < 0 ||
        values->size() != static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height)) {
      throw std::invalid_argument("depth data does not match its size");
    }
    f.values = std::move(*values);
    return f;
  }
  if (kind == "points") {
    PointCloud3D pc;
    for (const auto& it : j.at("points")) {
      const auto& p = it.at("xyz");
      pc.points.push_back({it.at("label").get<std::string>(), Vec3{p.at(0).get<double>(), p.at(1).get<double>(),
                                                                  p.at(2).get<double>()}});
    }
    if (j.contains("camera") && !j["camera"].is_null()) {
      const auto& c = j["camera"];
      pc.camera = CameraIntrinsics{c.at("focal").get<double>(), c.at("cx").get<double>(), c.at("cy").get<double>()};
    }
    return pc;
  }
  if (kind == "compute") {
    ComputeResult r;
    r.text = j.value("text", std::string());
    r.values = j.value("values", std::vector<double>{});
    if (j.contains("image_ref") && !j["image_ref"].is_null()) r.image_ref = j["image_ref"].get<std::string>();
    return r;
  }
  throw std::invalid_argument("unknown payload kind '" + kind + "'");
}

template <typename F>
auto guarded(F&& f) -> Result<decltype(f()), DecodeError> {
  try {
    return f();
  } catch (const std::exception& e) {
    return fail(DecodeError{e.what()});
  }
}

}  // namespace

json output_to_json(const AtomicOutput& out) {
  return std::visit(
      [](const auto& o) -> json {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Detections>) {
          json items = json::array();
          for (const auto& d : o.items) items.push_back({{"label", d.label}, {"box", box_json(d.box)}, {"score", d.score}});
          return {{"kind", "detections"}, {"items", items}};
        } else if constexpr (std::is_same_v<T, Masks>) {
          json items = json::array();
          for (const auto& m : o.items) {
            items.push_back({{"label", m.label}, {"width", m.width}, {"height", m.height}, {"rle", rle_encode(m.bits)}});
          }
          return {{"kind", "mask"}, {"items", items}};
        } else if constexpr (std::is_same_v<T, DepthField>) {
          return {{"kind", "depth"}, {"width", o.width}, {"height", o.height}, {"data", floats_to_base64(o.values)}};
        } else if constexpr (std::is_same_v<T, PointCloud3D>) {
          json pts = json::array();
          for (const auto& p : o.points) pts.push_back({{"label", p.label}, {"xyz", {p.xyz.x, p.xyz.y, p.xyz.z}}});
          json cam = nullptr;
          if (o.camera) cam = {{"focal", o.camera->focal}, {"cx", o.camera->cx}, {"cy", o.camera->cy}};
          return {{"kind", "points"}, {"points", pts}, {"camera", cam}};
        } else {
          json j = {{"kind", "compute"}, {"text", o.text}, {"values", o.values}};
          if (o.image_ref) j["image_ref"] = *o.image_ref;
          return j;
        }
      },
      out);
}

Result<AtomicOutput, DecodeError> output_from_json(const json& j) {
  return guarded([&] { return output_from(j); });
}

json request_to_json(const ToolRequest& req) {
  json image = json::object();
  if (req.image.data) {
    image["data"] = *req.image.data;
  } else {
    json views = json::array();
    for (const auto& v : req.image.views) views.push_back({v.x1, v.y1, v.x2, v.y2, v.zoom});
    image["ref"] = req.image.ref;
    image["views"] = views;
  }
  json args = json::object();
  for (const auto& a : req.args) args[a.key] = arg_json(a.value);
  json upstream = json::array();
  for (const auto& u : req.upstream) upstream.push_back(output_to_json(u));
  return {{"schema", kSchema},         {"request_id", req.request_id}, {"atomic_name", req.atomic_name},
          {"image", image},            {"args", args},                 {"upstream", upstream},
          {"deadline_ms", req.deadline_ms}, {"seed", req.seed},        {"model", req.model}};
}

Result<ToolRequest, DecodeError> request_from_json(const json& j) {
  return guarded([&] {
    if (j.value("schema", std::string()) != kSchema) throw std::invalid_argument("expected schema tool.v1");
    ToolRequest req;
    req.request_id = j.at("request_id").get<std::string>();
    if (req.request_id.empty()) throw std::invalid_argument("empty request_id");
    req.atomic_name = j.at("atomic_name").get<std::string>();
    const auto& image = j.at("image");
    if (image.contains("data")) {
      req.image.data = image["data"].get<std::string>();
    } else {
      req.image.ref = image.at("ref").get<std::string>();
      for (const auto& v : image.value("views", json::array())) {
        if (!v.is_array() || v.size() != 5) throw std::invalid_argument("view must be [x1, y1, x2, y2, zoom]");
        req.image.views.push_back(
            {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>(), v[4].get<double>()});
      }
    }
    const json args = j.value("args", json::object());
    for (const auto& [key, value] : args.items()) req.args.push_back({key, arg_from(value)});
    for (const auto& u : j.value("upstream", json::array())) req.upstream.push_back(output_from(u));
    req.deadline_ms = j.at("deadline_ms").get<std::int64_t>();
    if (req.deadline_ms <= 0) throw std::invalid_argument("deadline_ms must be positive");
    req.seed = j.value("seed", std::uint64_t{0});
    req.model = j.value("model", std::string());
    return req;
  });
}

json response_to_json(const ToolResponse& resp) {
  json j = {{"schema", kSchema},
            {"request_id", resp.request_id},
            {"status", status_name(resp.status)},
            {"payload", resp.payload ? output_to_json(*resp.payload) : json(nullptr)},
            {"error_detail", resp.error_detail}};
  return j;
}

Result<ToolResponse, DecodeError> response_from_json(const json& j) {
  return guarded([&] {
    if (j.value("schema", std::string()) != kSchema) throw std::invalid_argument("expected schema tool.v1");
    ToolResponse r;
    r.request_id = j.at("request_id").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    if (status == "ok") {
      r.status = ResponseStatus::Ok;
    } else if (status == "empty") {
      r.status = ResponseStatus::Empty;
    } else if (status == "error") {
      r.status = ResponseStatus::Error;
    } else {
      throw std::invalid_argument("unknown status '" + status + "'");
    }
    if (j.contains("payload") && !j["payload"].is_null()) r.payload = output_from(j["payload"]);
    r.error_detail = j.value("error_detail", std::string());
    if (r.status == ResponseStatus::Ok && !r.payload) throw std::invalid_argument("status ok without payload");
    if (r.status != ResponseStatus::Ok && r.payload) throw std::invalid_argument("payload on a non-ok response");
    if (r.status == ResponseStatus::Error && r.error_detail.empty()) {
      throw std::invalid_argument("status error without error_detail");
    }
    return r;
  });
}

std::string frame_body(const json& j) {
  auto text = j.dump();
  return std::to_string(text.size()) + "\n" + text;
}

Result<json, DecodeError> unframe_body(std::string_view body) {
  const auto nl = body.find('\n');
  if (nl == std::string_view::npos || nl == 0 || nl > 20) return fail(DecodeError{"missing length prefix"});
  std::size_t len = 0;
  const auto [p, ec] = std::from_chars(body.data(), body.data() + nl, len);
  if (ec != std::errc() || p != body.data() + nl) return fail(DecodeError{"bad length prefix"});
  const auto rest = body.substr(nl + 1);
  if (rest.size() != len) {
    return fail(DecodeError{"length prefix " + std::to_string(len) + " does not match body of " +
                            std::to_string(rest.size()) + " bytes"});
  }
  try {
    return json::parse(rest);
  } catch (const std::exception& e) {
    return fail(DecodeError{e.what()});
  }
}

std::string new_request_id() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = std::random_device{}() ^ (std::uint64_t{std::random_device{}()} << 32);
  const auto n = counter.fetch_add(1);
  char buf[40];
  const auto len = std::snprintf(buf, sizeof buf, "req-%016llx-%llu", static_cast<unsigned long long>(mix64(salt)),
                                 static_cast<unsigned long long>(n));
  return std::string(buf, static_cast<std::size_t>(len));
}

Result<ToolResponse, TransportError> call_remote(std::string_view endpoint, const ToolRequest& req,
                                                 const RetryPolicy& policy, std::optional<std::string> inject) {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::milliseconds(std::max<std::int64_t>(req.deadline_ms, 1));
  const auto body = frame_body(request_to_json(req));
  httplib::Headers headers;
  if (inject) headers.emplace(std::string(kInjectHeader), *inject);

  std::string last = "no attempt made";
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const auto left = std::chrono::duration_cast<std::chrono::microseconds>(deadline - clock::now());
    if (left.count() <= 0) {
      return fail(TransportError{TransportErrorKind::DeadlineExceeded, "deadline of " +
                                                                           std::to_string(req.deadline_ms) +
                                                                           " ms exceeded (" + last + ")"});
    }
    httplib::Client cli{std::string(endpoint)};
    cli.set_connection_timeout(left);
    cli.set_read_timeout(left);
    cli.set_write_timeout(left);
    auto res = cli.Post(std::string(kAtomicPath), headers, body, "application/json");
    if (!res) {
      last = httplib::to_string(res.error());
      if (clock::now() >= deadline) {
        return fail(TransportError{TransportErrorKind::DeadlineExceeded,
                                   "deadline of " + std::to_string(req.deadline_ms) + " ms exceeded"});
      }
    } else if (res->status >= 500) {
      last = "HTTP " + std::to_string(res->status);
    } else {
      auto j = unframe_body(res->body);
      if (!j) return fail(TransportError{TransportErrorKind::MalformedResponse, j.error().message});
      auto resp = response_from_json(*j);
      if (!resp) return fail(TransportError{TransportErrorKind::MalformedResponse, resp.error().message});
      if (resp->request_id != req.request_id) {
        return fail(TransportError{TransportErrorKind::MalformedResponse, "response for another request"});
      }
      return std::move(resp).value();
    }
    if (attempt + 1 < attempts) {
      const auto pause = std::min<clock::duration>(policy.backoff * (1 << attempt), deadline - clock::now());
      if (pause.count() > 0) std::this_thread::sleep_for(pause);
    }
  }
  return fail(TransportError{TransportErrorKind::ConnectFailed, std::string(endpoint) + ": " + last});
}

Result<AtomicOutput, ToolError> RemoteBackend::invoke(const AtomicDescriptor& desc, std::string_view binding,
                                                      const ToolInput& input, const ExecContext& ctx) {
  const auto* entry = ctx.images ? ctx.images->find(input.image) : nullptr;
  if (entry == nullptr) return fail(ToolError{ToolErrorKind::ExecutionError, "unknown image '" + input.image + "'"});
  ToolRequest req;
  req.request_id = new_request_id();
  req.atomic_name = desc.name;
  if (entry->scene) {
    req.image.ref = entry->scene->key;
    req.image.views = entry->scene->views;
  } else {
    req.image.data = base64_encode(encode_ppm(entry->raster));
  }
  for (const auto& a : input.args) {
    if (a.key != "image") req.args.push_back(a);
  }
  req.upstream = input.upstream;
  const auto left = ctx.remaining();
  req.deadline_ms = left == std::chrono::milliseconds::max() ? 30000 : std::max<std::int64_t>(1, left.count());
  req.seed = ctx.seed;
  req.model = std::string(binding);
  std::optional<std::string> inject;
  if (ctx.inject) inject = std::string(inject_value(*ctx.inject));

  auto resp = call_remote(endpoint_, req, policy_, inject);
  if (!resp) return fail(to_tool_error(resp.error()));
  switch (resp->status) {
    case ResponseStatus::Ok: return std::move(*resp->payload);
    case ResponseStatus::Empty: return fail(ToolError{ToolErrorKind::EmptyReturn, "empty return"});
    case ResponseStatus::Error: return fail(ToolError{ToolErrorKind::ExecutionError, resp->error_detail});
  }
  return fail(ToolError{ToolErrorKind::ExecutionError, "unreachable"});
}

}  // namespace hintbox::backend
