#pragma once

// Per-connection protocol state machine, independent of the socket layer.
//
// The server feeds inbound text/binary frames in and pulls outbound frames
// with next_outbound(); tests drive the same object over an in-process
// ordered transport.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ol/backends/config.hpp"
#include "ol/backends/factory.hpp"
#include "ol/common/clock.hpp"
#include "ol/gateway/wire.hpp"
#include "ol/pipeline/pipeline.hpp"
#include "ol/pipeline/runner.hpp"

namespace ol::gateway {

// Handshaking -> Live -> Draining -> Closed. A rejected handshake goes
// straight to Draining (its bye still has to be written) and is never Live.
enum class SessionState { Handshaking, Live, Draining, Closed };
const char* to_string(SessionState s);
bool legal_transition(SessionState from, SessionState to);

class SessionHandler;

// Live session ids. Safe for concurrent register/deregister.
class SessionRegistry {
 public:
  // False if `id` is already held by another handler.
  bool try_register(const std::string& id, SessionHandler* handler);
  void deregister(const std::string& id, const SessionHandler* handler);
  std::size_t size() const;
  // {"sessions": {id: {"state": ..., "queues": {...}}}}
  nlohmann::json health() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, SessionHandler*> sessions_;
};

struct WireOut {
  bool binary = false;
  std::string text;
  std::vector<std::uint8_t> bytes;
};

using BackendFactory = std::function<backends::BackendSet(const backends::RuntimeConfig&)>;

struct SessionOptions {
  backends::RuntimeConfig config;
  BackendFactory make_backends;
  // Null: the handler keeps its own steady clock started at handshake.
  const Clock* clock = nullptr;
  // True: the pipeline runs on its own threads once Live. False: the caller
  // drives pipeline()->stages() (deterministic tests).
  bool threaded = true;
};

class SessionHandler {
 public:
  SessionHandler(SessionRegistry& registry, SessionOptions options);
  ~SessionHandler();

  SessionHandler(const SessionHandler&) = delete;
  SessionHandler& operator=(const SessionHandler&) = delete;

  void on_text(std::string_view text);
  void on_binary(std::span<const std::uint8_t> bytes);
  // The peer disconnected or the socket failed.
  void on_closed();

  // Next frame to write, in wire order: handshake replies and protocol
  // errors, then the pipeline's outbound mux, then a final bye.
  std::optional<WireOut> next_outbound();
  // True once a bye has been queued; the socket closes after it is written.
  bool close_requested() const;
  // Called whenever next_outbound() may have something new. May be invoked
  // from pipeline worker threads.
  void set_ready_callback(std::function<void()> cb);

  SessionState state() const;
  std::vector<SessionState> history() const;
  std::string session_id() const;
  pipeline::SessionPipeline* pipeline() { return pipeline_.get(); }
  nlohmann::json health() const;

 private:
  void handle_hello(const JsonMessage& msg);
  void reject(const std::string& reason, const std::string& detail);
  void send_now(const JsonMessage& msg);
  void send_status(const std::string& code, const std::string& detail);
  void transition(SessionState to);
  void notify();
  void shutdown_pipeline();

  SessionRegistry& registry_;
  SessionOptions options_;

  mutable std::mutex mu_;
  SessionState state_ = SessionState::Handshaking;
  std::vector<SessionState> history_{SessionState::Handshaking};
  std::string session_;
  bool registered_ = false;
  std::vector<WireOut> direct_;
  std::size_t direct_head_ = 0;
  std::optional<WireOut> final_;
  bool final_sent_ = false;
  std::function<void()> ready_;

  std::optional<std::uint32_t> last_audio_seq_;
  std::optional<std::uint32_t> last_frame_seq_;

  std::unique_ptr<SteadyClock> own_clock_;
  std::unique_ptr<pipeline::SessionPipeline> pipeline_;
  std::unique_ptr<pipeline::ThreadedRunner> runner_;
};

}  // namespace ol::gateway
