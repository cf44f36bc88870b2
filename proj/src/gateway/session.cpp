#include "ol/gateway/session.hpp"

#include <spdlog/spdlog.h>

#include "ol/ingest/frames.hpp"

namespace ol::gateway {

using nlohmann::json;

bool legal_transition(SessionState from, SessionState to) {
  using S = SessionState;
  return (from == S::Handshaking && (to == S::Live || to == S::Draining)) || (from == S::Live && to == S::Draining) ||
         (from == S::Draining && to == S::Closed);
}

const char* to_string(SessionState s) {
  switch (s) {
    case SessionState::Handshaking: return "handshaking";
    case SessionState::Live: return "live";
    case SessionState::Draining: return "draining";
    case SessionState::Closed: return "closed";
  }
  return "?";
}

bool SessionRegistry::try_register(const std::string& id, SessionHandler* handler) {
  std::lock_guard lock(mu_);
  return sessions_.emplace(id, handler).second;
}

void SessionRegistry::deregister(const std::string& id, const SessionHandler* handler) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it != sessions_.end() && it->second == handler) sessions_.erase(it);
}

std::size_t SessionRegistry::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

json SessionRegistry::health() const {
  std::lock_guard lock(mu_);
  json sessions = json::object();
  for (const auto& [id, h] : sessions_) sessions[id] = h->health();
  return {{"status", "ok"}, {"sessions", std::move(sessions)}};
}

namespace {

WireOut text_out(const JsonMessage& msg) { return {false, encode_message(msg), {}}; }

json profile_json(const perception::FeatureProfile& p) {
  return {{"T", p.frames_per_clip},
          {"N", p.tokens_per_frame},
          {"P", p.memory_tokens_per_frame},
          {"C", p.channels},
          {"sample_rate", ingest::kSampleRate}};
}

}  // namespace

SessionHandler::SessionHandler(SessionRegistry& registry, SessionOptions options)
    : registry_(registry), options_(std::move(options)) {}

SessionHandler::~SessionHandler() {
  shutdown_pipeline();
  std::string id;
  {
    std::lock_guard lock(mu_);
    if (registered_) id = session_;
    registered_ = false;
  }
  if (!id.empty()) registry_.deregister(id, this);
}

void SessionHandler::set_ready_callback(std::function<void()> cb) {
  std::lock_guard lock(mu_);
  ready_ = std::move(cb);
}

void SessionHandler::notify() {
  std::function<void()> cb;
  {
    std::lock_guard lock(mu_);
    cb = ready_;
  }
  if (cb) cb();
}

SessionState SessionHandler::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::vector<SessionState> SessionHandler::history() const {
  std::lock_guard lock(mu_);
  return history_;
}

std::string SessionHandler::session_id() const {
  std::lock_guard lock(mu_);
  return session_;
}

bool SessionHandler::close_requested() const {
  std::lock_guard lock(mu_);
  return final_.has_value() || final_sent_;
}

json SessionHandler::health() const {
  json out = {{"state", to_string(state())}};
  if (pipeline_) {
    out["queues"] = pipeline_->depths().to_json();
    out["generation"] = pipeline_->generation();
  }
  return out;
}

void SessionHandler::transition(SessionState to) {
  std::lock_guard lock(mu_);
  if (!legal_transition(state_, to)) {
    throw Error(std::string("illegal session transition ") + to_string(state_) + " -> " + to_string(to));
  }
  state_ = to;
  history_.push_back(to);
}

void SessionHandler::send_now(const JsonMessage& msg) {
  {
    std::lock_guard lock(mu_);
    direct_.push_back(text_out(msg));
  }
  notify();
}

void SessionHandler::send_status(const std::string& code, const std::string& detail) {
  send_now(status_message(session_id(), "error", code, detail));
}

void SessionHandler::reject(const std::string& reason, const std::string& detail) {
  const auto s = state();
  if (s == SessionState::Draining || s == SessionState::Closed) return;
  shutdown_pipeline();
  {
    std::lock_guard lock(mu_);
    final_ = text_out(make_message("bye", session_, {{"reason", reason}, {"detail", detail}}));
  }
  transition(SessionState::Draining);
  notify();
}

void SessionHandler::on_text(std::string_view text) {
  const auto s = state();
  if (s == SessionState::Draining || s == SessionState::Closed) return;
  JsonMessage msg;
  try {
    msg = decode_message(text);
  } catch (const WireError& e) {
    if (s == SessionState::Handshaking) {
      reject("protocol", e.what());
    } else {
      send_status("bad_message", e.what());
    }
    return;
  }
  if (s == SessionState::Handshaking) {
    if (msg.type != "hello") {
      reject("protocol", "first message must be hello, got " + msg.type);
      return;
    }
    handle_hello(msg);
    return;
  }
  if (msg.type == "bye") {
    if (pipeline_) pipeline_->end_of_stream();
    std::lock_guard lock(mu_);
    final_ = text_out(make_message("bye", session_, {{"reason", "client"}}));
  } else {
    send_status("unexpected_type", "clients may not send '" + msg.type + "' after the handshake");
    return;
  }
  transition(SessionState::Draining);
  notify();
}

void SessionHandler::handle_hello(const JsonMessage& msg) {
  const auto v = msg.payload.value("v", std::string());
  if (v != kProtocolVersion) {
    reject("version", "server speaks " + std::string(kProtocolVersion) + ", client asked for '" + v + "'");
    return;
  }
  if (msg.session.empty()) {
    reject("session", "hello carries no session id");
    return;
  }
  auto cfg = options_.config;
  try {
    if (msg.payload.contains("profile")) {
      const auto& p = msg.payload.at("profile");
      if (!p.is_object()) throw ConfigError({"profile"}, "profile must be an object");
      auto field = [&](const char* key, std::size_t& dst) {
        if (!p.contains(key)) return;
        if (!p[key].is_number_unsigned()) throw ConfigError({key}, std::string(key) + " must be a positive integer");
        dst = p[key].get<std::size_t>();
      };
      field("T", cfg.profile.frames_per_clip);
      field("N", cfg.profile.tokens_per_frame);
      field("P", cfg.profile.memory_tokens_per_frame);
      field("C", cfg.profile.channels);
      if (p.contains("sample_rate") && p["sample_rate"] != ingest::kSampleRate) {
        throw ConfigError({"sample_rate"}, "only 16000 Hz is supported");
      }
    }
    cfg.validate();
  } catch (const ConfigError& e) {
    reject("profile", e.what());
    return;
  }

  if (!registry_.try_register(msg.session, this)) {
    reject("duplicate", "session '" + msg.session + "' is already live");
    return;
  }
  {
    std::lock_guard lock(mu_);
    session_ = msg.session;
    registered_ = true;
  }

  const Clock* clock = options_.clock;
  if (!clock) {
    own_clock_ = std::make_unique<SteadyClock>();
    clock = own_clock_.get();
  }
  try {
    auto backends = options_.make_backends(cfg);
    pipeline_ = std::make_unique<pipeline::SessionPipeline>(msg.session, cfg, std::move(backends), *clock);
  } catch (const std::exception& e) {
    registry_.deregister(msg.session, this);
    {
      std::lock_guard lock(mu_);
      registered_ = false;
    }
    reject("backend", e.what());
    return;
  }
  // ready goes out before anything the pipeline can produce.
  send_now(make_message("ready", msg.session,
                        {{"v", kProtocolVersion},
                         {"profile", profile_json(cfg.profile)},
                         {"outbound_cap", cfg.gateway.outbound_cap}}));
  transition(SessionState::Live);
  pipeline_->outbound().set_ready_callback([this] { notify(); });
  if (options_.threaded) {
    runner_ = std::make_unique<pipeline::ThreadedRunner>(pipeline_->stages(), pipeline_->wakeup(), *clock);
    runner_->start();
  }
}

void SessionHandler::on_binary(std::span<const std::uint8_t> bytes) {
  const auto s = state();
  if (s == SessionState::Draining || s == SessionState::Closed) return;
  if (s == SessionState::Handshaking) {
    send_status("protocol", "binary frame before ready");
    reject("protocol", "binary frame before ready");
    return;
  }
  BinaryFrame frame;
  try {
    frame = decode_binary(bytes);
  } catch (const WireError& e) {
    send_status("bad_frame", e.what());
    return;
  }
  auto check_seq = [&](std::optional<std::uint32_t>& last, const char* kind) {
    if (last && frame.seq <= *last) {
      send_status("sequence", std::string(kind) + " seq " + std::to_string(frame.seq) + " after " +
                                  std::to_string(*last));
      return false;
    }
    last = frame.seq;
    return true;
  };
  switch (frame.kind) {
    case BinaryKind::AudioIn:
      if (check_seq(last_audio_seq_, "audio")) pipeline_->push_audio(frame.body);
      break;
    case BinaryKind::FrameIn:
      if (check_seq(last_frame_seq_, "frame")) {
        pipeline_->push_frame(ingest::RawFrame{session_id(), frame.seq, frame.t_ms,
                                               ingest::JpegImage{std::move(frame.body)}});
      }
      break;
    case BinaryKind::AudioOut:
      send_status("bad_frame", "0x11 is server-to-client only");
      break;
  }
}

void SessionHandler::on_closed() {
  auto s = state();
  if (s == SessionState::Closed) return;
  if (s != SessionState::Draining) {
    spdlog::info("session '{}': peer closed", session_id());
    transition(SessionState::Draining);
  }
  shutdown_pipeline();
  std::string id;
  {
    std::lock_guard lock(mu_);
    if (registered_) id = session_;
    registered_ = false;
  }
  if (!id.empty()) registry_.deregister(id, this);
  transition(SessionState::Closed);
}

void SessionHandler::shutdown_pipeline() {
  if (runner_) {
    runner_->stop();
    runner_.reset();
  }
}

std::optional<WireOut> SessionHandler::next_outbound() {
  {
    std::lock_guard lock(mu_);
    if (direct_head_ < direct_.size()) {
      auto out = std::move(direct_[direct_head_++]);
      if (direct_head_ == direct_.size()) {
        direct_.clear();
        direct_head_ = 0;
      }
      return out;
    }
  }
  if (pipeline_) {
    if (auto item = pipeline_->outbound().next()) {
      if (const auto* msg = std::get_if<JsonMessage>(&*item)) return text_out(*msg);
      const auto& chunk = std::get<reasoning::OutAudioChunk>(*item);
      return WireOut{true, {}, encode_binary(encode_audio_out(chunk))};
    }
  }
  std::lock_guard lock(mu_);
  if (final_) {
    auto out = std::move(*final_);
    final_.reset();
    final_sent_ = true;
    return out;
  }
  return std::nullopt;
}

}  // namespace ol::gateway
