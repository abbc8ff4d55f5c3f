// SPDX-License-Identifier: Apache-2.0
#include "hintbox/backend/mock_server.hpp"
#include "hintbox/backend/protocol.hpp"
#include "hintbox/common/rng.hpp"
#include "hintbox/world/world.hpp"

#include <doctest.h>
#include <httplib.h>

#include <set>
#include <thread>

using namespace hintbox;
using namespace hintbox::backend;
using nlohmann::json;

namespace {

world::SceneSpec lamp_scene() {
  world::SceneSpec s;
  s.id = "scene-lamp";
  s.background_depth = 0.9;
  s.camera = {512, 320, 240};
  world::SceneObject o;
  o.label = "lamp";
  o.box = {10, 20, 50, 80};
  o.mean_depth = 0.3;
  o.point3d = {1, 0.5, 2};
  o.instance_id = 1;
  s.objects.push_back(o);
  return s;
}

ToolRequest detect_request(const std::string& scene_id) {
  ToolRequest req;
  req.request_id = new_request_id();
  req.atomic_name = "detect_objects";
  req.image.ref = scene_id;
  req.args = {{"image", std::string("image-0")},
              {"text_labels", std::vector<std::string>{"lamp"}},
              {"threshold", 0.1}};
  req.deadline_ms = 5000;
  req.model = "groundingdino";
  return req;
}

std::unique_ptr<MockServer> start_mock(world::NoiseConfig noise = {}) {
  SceneStore store;
  const auto s = lamp_scene();
  store.emplace(s.id, s);
  MockOptions opts;
  opts.noise = noise;
  auto srv = MockServer::start(std::move(store), opts);
  REQUIRE(srv.ok());
  return std::move(srv).value();
}

}  // namespace

TEST_CASE("rle round trip") {
  CHECK(rle_encode({}) == std::vector<std::uint32_t>{0});
  CHECK(rle_encode({1, 1, 0}) == std::vector<std::uint32_t>{0, 2, 1});
  CHECK(rle_encode({0, 0, 1}) == std::vector<std::uint32_t>{2, 1});
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::uint8_t> bits(rng.below(300));
    for (auto& b : bits) b = rng.bernoulli(0.3) ? 1 : 0;
    auto back = rle_decode(rle_encode(bits), bits.size());
    REQUIRE(back.has_value());
    CHECK(*back == bits);
  }
  CHECK_FALSE(rle_decode({5}, 3).has_value());
  CHECK_FALSE(rle_decode({1}, 3).has_value());
}

TEST_CASE("framing") {
  const json j = {{"a", 1}};
  const auto body = frame_body(j);
  CHECK(body == std::to_string(j.dump().size()) + "\n" + j.dump());
  CHECK(*unframe_body(body) == j);
  CHECK_FALSE(unframe_body("5\n{}").ok());
  CHECK_FALSE(unframe_body("{}").ok());
  CHECK_FALSE(unframe_body("2\n{x").ok());
}

TEST_CASE("output codecs round trip") {
  tools::ObjectMask m{"cup", 5, 4, std::vector<std::uint8_t>(20, 0)};
  m.bits[6] = m.bits[7] = 1;
  const std::vector<tools::AtomicOutput> outs = {
      tools::Detections{{{"lamp", {1.5, 2, 3, 4}, 0.25}}},
      tools::Masks{{m}},
      tools::DepthField{3, 1, {0.1f, 0.123456789f, 1.0f}},
      tools::PointCloud3D{{{"cup", {-1.0 / 3.0, 0.5, 2.0}}}, tools::CameraIntrinsics{512, 320, 240}},
      tools::ComputeResult{"done", {1.0, 0.1}, std::string("image-3")},
  };
  for (const auto& o : outs) {
    auto back = output_from_json(json::parse(output_to_json(o).dump()));
    REQUIRE(back.ok());
    CHECK(*back == o);
  }
}

TEST_CASE("request and response codecs") {
  auto req = detect_request("scene-x");
  req.image.views = {{10, 20, 110, 220, 2.0}};
  req.upstream = {tools::Detections{{{"lamp", {1, 2, 3, 4}, 1.0}}}};
  req.seed = 0xfedcba9876543210ULL;
  auto back = request_from_json(json::parse(request_to_json(req).dump()));
  REQUIRE(back.ok());
  CHECK(back->request_id == req.request_id);
  CHECK(back->args == req.args);
  CHECK(back->image.views == req.image.views);
  CHECK(back->seed == req.seed);
  REQUIRE(back->upstream.size() == 1);

  CHECK_FALSE(request_from_json(json{{"schema", "tool.v0"}}).ok());
  auto bad_deadline = request_to_json(req);
  bad_deadline["deadline_ms"] = 0;
  CHECK_FALSE(request_from_json(bad_deadline).ok());

  ToolResponse ok{"r1", ResponseStatus::Ok, tools::AtomicOutput{tools::Detections{}}, ""};
  CHECK(response_from_json(response_to_json(ok)).ok());
  ToolResponse missing{"r1", ResponseStatus::Ok, std::nullopt, ""};
  CHECK_FALSE(response_from_json(response_to_json(missing)).ok());
  ToolResponse stray{"r1", ResponseStatus::Error, tools::AtomicOutput{tools::Detections{}}, "x"};
  CHECK_FALSE(response_from_json(response_to_json(stray)).ok());
}

TEST_CASE("error mapping is total and injective") {
  std::set<tools::ToolErrorKind> kinds;
  for (auto k : {TransportErrorKind::ConnectFailed, TransportErrorKind::DeadlineExceeded,
                 TransportErrorKind::MalformedResponse}) {
    kinds.insert(to_tool_error({k, ""}).kind);
  }
  CHECK(kinds.size() == 3);
  CHECK(to_tool_error({TransportErrorKind::ConnectFailed, ""}).kind == tools::ToolErrorKind::BackendUnavailable);
  CHECK(to_tool_error({TransportErrorKind::DeadlineExceeded, ""}).kind == tools::ToolErrorKind::Timeout);
  CHECK(to_tool_error({TransportErrorKind::MalformedResponse, ""}).kind == tools::ToolErrorKind::ExecutionError);
}

TEST_CASE("loopback detect equals the in-process oracle") {
  auto srv = start_mock();
  const auto req = detect_request("scene-lamp");
  auto resp = call_remote(srv->url(), req);
  REQUIRE(resp.ok());
  CHECK(resp->status == ResponseStatus::Ok);
  CHECK(resp->request_id == req.request_id);
  auto local = world::oracle_detect(lamp_scene(), {"lamp"}, {}, 0);
  CHECK(std::get<tools::Detections>(*resp->payload) == *local);
}

TEST_CASE("injected headers") {
  auto srv = start_mock();
  auto empty = call_remote(srv->url(), detect_request("scene-lamp"), {}, std::string("empty"));
  REQUIRE(empty.ok());
  CHECK(empty->status == ResponseStatus::Empty);
  auto err = call_remote(srv->url(), detect_request("scene-lamp"), {}, std::string("error"));
  REQUIRE(err.ok());
  CHECK(err->status == ResponseStatus::Error);

  RetryPolicy two{2, std::chrono::milliseconds(1)};
  const auto before = srv->handled();
  auto down = call_remote(srv->url(), detect_request("scene-lamp"), two, std::string("unavailable"));
  REQUIRE_FALSE(down.ok());
  CHECK(down.error().kind == TransportErrorKind::ConnectFailed);
  CHECK(srv->handled() - before == 2);
}

TEST_CASE("deadline exceeded maps to timeout") {
  auto srv = start_mock();
  auto req = detect_request("scene-lamp");
  req.deadline_ms = 50;
  const auto t0 = std::chrono::steady_clock::now();
  auto r = call_remote(srv->url(), req, {}, std::string("timeout"));
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().kind == TransportErrorKind::DeadlineExceeded);
  CHECK(to_tool_error(r.error()).kind == tools::ToolErrorKind::Timeout);
  CHECK(elapsed < std::chrono::milliseconds(1000));
}

TEST_CASE("unknown operation and unknown scene") {
  auto srv = start_mock();
  auto req = detect_request("scene-lamp");
  req.atomic_name = "teleport";
  auto r = call_remote(srv->url(), req);
  REQUIRE(r.ok());
  CHECK(r->status == ResponseStatus::Error);
  CHECK(r->error_detail == "unknown operation");

  auto missing = call_remote(srv->url(), detect_request("scene-missing"));
  REQUIRE(missing.ok());
  CHECK(missing->status == ResponseStatus::Error);
}

TEST_CASE("replayed request ids get the cached reply") {
  world::NoiseConfig noisy;
  noisy.box_jitter_px = 5;
  auto srv = start_mock(noisy);
  auto req = detect_request("scene-lamp");
  auto a = call_remote(srv->url(), req);
  auto b = call_remote(srv->url(), req);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(response_to_json(*a) == response_to_json(*b));
}

TEST_CASE("connect failure") {
  RetryPolicy quick{2, std::chrono::milliseconds(1)};
  auto r = call_remote("http://127.0.0.1:1", detect_request("x"), quick);
  REQUIRE_FALSE(r.ok());
  CHECK(r.error().kind == TransportErrorKind::ConnectFailed);
}

TEST_CASE("malformed responses are rejected") {
  httplib::Server bad;
  std::string mode;
  bad.Post("/v1/atomic", [&](const httplib::Request& http, httplib::Response& res) {
    auto req = request_from_json(*unframe_body(http.body));
    if (mode == "garbage") {
      res.set_content("not a frame", "application/json");
    } else if (mode == "no-payload") {
      res.set_content(frame_body({{"schema", "tool.v1"}, {"request_id", req->request_id}, {"status", "ok"},
                                  {"payload", nullptr}, {"error_detail", ""}}),
                      "application/json");
    } else {
      ToolResponse r{"someone-else", ResponseStatus::Empty, std::nullopt, ""};
      res.set_content(frame_body(response_to_json(r)), "application/json");
    }
  });
  const int port = bad.bind_to_any_port("127.0.0.1");
  std::thread t([&] { bad.listen_after_bind(); });
  bad.wait_until_ready();
  const auto url = "http://127.0.0.1:" + std::to_string(port);
  for (const char* m : {"garbage", "no-payload", "wrong-id"}) {
    CAPTURE(m);
    mode = m;
    auto r = call_remote(url, detect_request("x"), {1, std::chrono::milliseconds(1)});
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().kind == TransportErrorKind::MalformedResponse);
  }
  bad.stop();
  t.join();
}

TEST_CASE("remote backend through the registry") {
  auto srv = start_mock();
  auto backend = std::make_shared<RemoteBackend>(srv->url());
  tools::ImageStore store;
  const auto s = lamp_scene();
  store.add(world::render_scene(s), tools::SceneBinding{s.id, {}, s});
  tools::Registry reg;
  for (auto& d : tools::default_atomic_descriptors()) {
    if (d.name == "detect_objects") REQUIRE(reg.register_atomic(d, backend, "groundingdino").ok());
  }
  tools::ToolInput in;
  in.image = "image-0";
  in.args = {{"image", std::string("image-0")}, {"text_labels", std::vector<std::string>{"lamp"}}, {"threshold", 0.1}};
  tools::ExecContext ctx;
  ctx.images = &store;
  auto out = tools::invoke_atomic(reg, "detect_objects", in, ctx);
  REQUIRE(out.ok());
  CHECK(std::get<tools::Detections>(*out).items.size() == 1);

  ctx.inject = tools::ToolErrorKind::EmptyReturn;
  auto e = tools::invoke_atomic(reg, "detect_objects", in, ctx);
  REQUIRE_FALSE(e.ok());
  CHECK(e.error().kind == tools::ToolErrorKind::EmptyReturn);
  ctx.inject = tools::ToolErrorKind::BackendUnavailable;
  CHECK(tools::invoke_atomic(reg, "detect_objects", in, ctx).error().kind == tools::ToolErrorKind::BackendUnavailable);
}
