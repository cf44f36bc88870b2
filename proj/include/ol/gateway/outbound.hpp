#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <variant>

#include "ol/common/control.hpp"
#include "ol/gateway/wire.hpp"
#include "ol/reasoning/reasoning.hpp"

namespace ol::gateway {

using OutboundItem = std::variant<JsonMessage, reasoning::OutAudioChunk>;

class OutboundTransport {
 public:
  virtual ~OutboundTransport() = default;
  // Returns false if the peer is gone.
  virtual bool send(const OutboundItem& item) = 0;
};

// Per-session writer queue. Two lanes: control (interrupts, JSON events) is
// always written before audio. Interrupts arrive on a control channel; taking
// one raises the generation floor and drops queued audio below it, so no
// stale chunk can be written after its interrupt.
class OutboundMux {
 public:
  OutboundMux(std::string session, std::size_t audio_cap, ControlChannel<Interrupt>& interrupts);

  void post_event(JsonMessage msg);
  // Drops the oldest queued chunk when the audio lane is full; the drop is
  // reported once per burst as a status notice.
  void post_audio(reasoning::OutAudioChunk chunk);

  // Next item in write order, or nullopt when idle.
  std::optional<OutboundItem> next();

  // Writes everything pending. Returns the number of items written.
  std::size_t flush(OutboundTransport& transport);

  // Invoked (outside the lock) whenever something becomes writable.
  void set_ready_callback(std::function<void()> cb);
  void notify();

  bool idle() const;
  std::size_t audio_pending() const;
  std::size_t audio_dropped() const;
  std::size_t stale_dropped() const;
  std::size_t audio_high_water() const;
  std::uint64_t floor() const;

 private:
  void drain_interrupts_locked();

  std::string session_;
  std::size_t audio_cap_;
  ControlChannel<Interrupt>& interrupts_;

  mutable std::mutex mu_;
  std::deque<JsonMessage> control_;
  std::deque<reasoning::OutAudioChunk> audio_;
  std::uint64_t floor_ = 0;
  std::size_t unreported_drops_ = 0;
  std::size_t dropped_ = 0;
  std::size_t stale_ = 0;
  std::size_t high_water_ = 0;
  std::function<void()> ready_;
};

}  // namespace ol::gateway
