#pragma once

// WebSocket gateway: one SessionHandler per connection on `ws_path`, plus
// GET /healthz returning the session registry with queue depths.

#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "ol/gateway/session.hpp"

namespace ol::gateway {

class GatewayServer {
 public:
  // `session` is the template every connection's handler starts from. The
  // listen address and path come from session.config.gateway.
  explicit GatewayServer(SessionOptions session);
  ~GatewayServer();

  GatewayServer(const GatewayServer&) = delete;
  GatewayServer& operator=(const GatewayServer&) = delete;

  // Binds and listens. Returns the bound port (useful with port 0).
  std::uint16_t listen();
  // Serves on the calling thread until stop() or SIGINT/SIGTERM.
  void run();
  // Serves on a background thread.
  void start();
  void stop();

  SessionRegistry& registry() { return registry_; }

  struct Impl;

 private:
  SessionRegistry registry_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace ol::gateway
