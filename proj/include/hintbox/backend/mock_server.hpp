// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hintbox/common/result.hpp"
#include "hintbox/world/world.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace hintbox::backend {

using SceneStore = std::map<std::string, world::SceneSpec, std::less<>>;

struct ServeError {
  std::string message;
};

struct MockOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  world::NoiseConfig noise;
  std::uint64_t seed = 0;
};

// tool.v1 server answering perception atomics from synthetic-world oracles.
// Stops when destroyed.
class MockServer {
 public:
  static Result<std::unique_ptr<MockServer>, ServeError> start(SceneStore scenes, MockOptions options = {});
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] std::string url() const;
  [[nodiscard]] std::uint64_t handled() const noexcept { return handled_.load(); }
  void stop();

  struct State;

 private:
  MockServer() = default;
  std::unique_ptr<httplib::Server> server_;
  std::shared_ptr<State> state_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
  std::atomic<std::uint64_t> handled_{0};
};

}  // namespace hintbox::backend
