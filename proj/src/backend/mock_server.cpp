// SPDX-License-Identifier: Apache-2.0
#include "hintbox/backend/mock_server.hpp"

#include "hintbox/backend/protocol.hpp"
#include "hintbox/common/rng.hpp"

#include <httplib.h>

#include <deque>
#include <mutex>

namespace hintbox::backend {

using nlohmann::json;

struct MockServer::State {
  SceneStore scenes;
  MockOptions options;
  std::vector<tools::AtomicDescriptor> descriptors = tools::default_atomic_descriptors();
  std::mutex mu;
  std::map<std::string, std::string> replies;  // request_id -> framed body
  std::deque<std::string> order;

  static constexpr std::size_t kReplayLimit = 4096;

  ToolResponse handle(const ToolRequest& req) const;
};

namespace {

ToolResponse error_response(const std::string& id, std::string detail) {
  return ToolResponse{id, ResponseStatus::Error, std::nullopt, std::move(detail)};
}

bool is_perception(std::string_view name) {
  namespace an = tools::atomic_names;
  return name == an::kDetect || name == an::kSegment || name == an::kDepth || name == an::kReconstruct;
}

}  // namespace

ToolResponse MockServer::State::handle(const ToolRequest& req) const {
  const auto* desc = [&]() -> const tools::AtomicDescriptor* {
    for (const auto& d : descriptors) {
      if (d.name == req.atomic_name) return &d;
    }
    return nullptr;
  }();
  if (desc == nullptr || !is_perception(req.atomic_name)) return error_response(req.request_id, "unknown operation");
  if (req.image.data) return error_response(req.request_id, "image is not bound to a scene");
  const auto it = scenes.find(req.image.ref);
  if (it == scenes.end()) return error_response(req.request_id, "unknown scene '" + req.image.ref + "'");
  const auto scene = world::apply_views(it->second, req.image.views);

  auto args = req.args;
  args.push_back({"image", std::string("image-0")});
  auto input = tools::validate_and_bind(*desc, args);
  if (!input) return error_response(req.request_id, input.error().message);
  input->upstream = req.upstream;
  auto out = world::run_oracle_atomic(scene, req.atomic_name, *input, options.noise, derive_seed(options.seed, {req.seed}));
  if (!out) {
    if (out.error().kind == tools::ToolErrorKind::EmptyReturn) {
      return ToolResponse{req.request_id, ResponseStatus::Empty, std::nullopt, out.error().detail};
    }
    return error_response(req.request_id, std::string(tools::tool_error_name(out.error().kind)) + ": " +
                                              out.error().detail);
  }
  return ToolResponse{req.request_id, ResponseStatus::Ok, std::move(out).value(), ""};
}

Result<std::unique_ptr<MockServer>, ServeError> MockServer::start(SceneStore scenes, MockOptions options) {
  if (!options.noise.valid()) return fail(ServeError{"noise probabilities must be in [0, 1]"});
  std::unique_ptr<MockServer> srv(new MockServer());
  srv->state_ = std::make_shared<State>();
  srv->state_->scenes = std::move(scenes);
  srv->state_->options = options;
  srv->server_ = std::make_unique<httplib::Server>();
  srv->host_ = options.host;
  auto state = srv->state_;
  auto* handled = &srv->handled_;

  srv->server_->Get(std::string(kHealthPath), [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });
  srv->server_->Post(std::string(kAtomicPath), [state, handled](const httplib::Request& http, httplib::Response& res) {
    handled->fetch_add(1);
    const auto reply = [&](const ToolResponse& r) { res.set_content(frame_body(response_to_json(r)), "application/json"); };
    auto body = unframe_body(http.body);
    if (!body) {
      res.status = 400;
      return reply(error_response("", "malformed request: " + body.error().message));
    }
    auto req = request_from_json(*body);
    if (!req) {
      res.status = 400;
      return reply(error_response(body->value("request_id", std::string()), "malformed request: " + req.error().message));
    }
    {
      std::lock_guard lock(state->mu);
      if (auto it = state->replies.find(req->request_id); it != state->replies.end()) {
        res.set_content(it->second, "application/json");
        return;
      }
    }
    const auto inject = http.get_header_value(std::string(kInjectHeader));
    ToolResponse resp;
    if (inject == "unavailable") {
      res.status = 503;
      return reply(error_response(req->request_id, "injected unavailability"));
    } else if (inject == "timeout") {
      std::this_thread::sleep_for(std::chrono::milliseconds(req->deadline_ms + 20));
      resp = error_response(req->request_id, "injected timeout");
    } else if (inject == "empty") {
      resp = ToolResponse{req->request_id, ResponseStatus::Empty, std::nullopt, "injected empty return"};
    } else if (inject == "error") {
      resp = error_response(req->request_id, "injected error");
    } else {
      resp = state->handle(*req);
    }
    auto framed = frame_body(response_to_json(resp));
    {
      std::lock_guard lock(state->mu);
      state->replies.emplace(req->request_id, framed);
      state->order.push_back(req->request_id);
      if (state->order.size() > State::kReplayLimit) {
        state->replies.erase(state->order.front());
        state->order.pop_front();
      }
    }
    res.set_content(std::move(framed), "application/json");
  });

  if (options.port == 0) {
    srv->port_ = srv->server_->bind_to_any_port(options.host);
  } else if (srv->server_->bind_to_port(options.host, options.port)) {
    srv->port_ = options.port;
  } else {
    srv->port_ = -1;
  }
  if (srv->port_ <= 0) {
    return fail(ServeError{"cannot bind " + options.host + ":" + std::to_string(options.port)});
  }
  auto* server = srv->server_.get();
  srv->thread_ = std::thread([server] { server->listen_after_bind(); });
  server->wait_until_ready();
  return srv;
}

MockServer::~MockServer() { stop(); }

std::string MockServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void MockServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hintbox::backend
