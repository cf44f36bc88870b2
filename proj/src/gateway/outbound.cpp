#include "ol/gateway/outbound.hpp"

#include <algorithm>

namespace ol::gateway {

OutboundMux::OutboundMux(std::string session, std::size_t audio_cap, ControlChannel<Interrupt>& interrupts)
    : session_(std::move(session)), audio_cap_(audio_cap), interrupts_(interrupts) {
  if (audio_cap_ == 0) throw ArgumentError("outbound audio cap must be positive");
}

void OutboundMux::set_ready_callback(std::function<void()> cb) {
  std::lock_guard lock(mu_);
  ready_ = std::move(cb);
}

void OutboundMux::notify() {
  std::function<void()> cb;
  {
    std::lock_guard lock(mu_);
    cb = ready_;
  }
  if (cb) cb();
}

void OutboundMux::post_event(JsonMessage msg) {
  {
    std::lock_guard lock(mu_);
    control_.push_back(std::move(msg));
  }
  notify();
}

void OutboundMux::post_audio(reasoning::OutAudioChunk chunk) {
  {
    std::lock_guard lock(mu_);
    drain_interrupts_locked();
    if (chunk.generation < floor_) {
      ++stale_;
    } else {
      if (audio_.size() == audio_cap_) {
        audio_.pop_front();
        ++dropped_;
        ++unreported_drops_;
      }
      audio_.push_back(std::move(chunk));
      high_water_ = std::max(high_water_, audio_.size());
    }
  }
  notify();
}

void OutboundMux::drain_interrupts_locked() {
  while (auto i = interrupts_.try_receive()) {
    if (i->generation > floor_) {
      floor_ = i->generation;
      const auto before = audio_.size();
      std::erase_if(audio_, [&](const reasoning::OutAudioChunk& c) { return c.generation < floor_; });
      stale_ += before - audio_.size();
    }
    control_.push_back(interrupt_message(session_, i->generation, i->t_ms));
  }
}

std::optional<OutboundItem> OutboundMux::next() {
  std::lock_guard lock(mu_);
  drain_interrupts_locked();
  if (unreported_drops_ > 0) {
    control_.push_back(status_message(session_, "warn", "audio_dropped",
                                      "client is not keeping up; oldest answer audio dropped",
                                      {{"dropped", unreported_drops_}}));
    unreported_drops_ = 0;
  }
  if (!control_.empty()) {
    OutboundItem out = std::move(control_.front());
    control_.pop_front();
    return out;
  }
  while (!audio_.empty()) {
    auto chunk = std::move(audio_.front());
    audio_.pop_front();
    if (chunk.generation < floor_) {
      ++stale_;
      continue;
    }
    return OutboundItem(std::move(chunk));
  }
  return std::nullopt;
}

std::size_t OutboundMux::flush(OutboundTransport& transport) {
  std::size_t n = 0;
  while (auto item = next()) {
    ++n;
    if (!transport.send(*item)) break;
  }
  return n;
}

bool OutboundMux::idle() const {
  std::lock_guard lock(mu_);
  return control_.empty() && audio_.empty() && unreported_drops_ == 0 && interrupts_.empty();
}

std::size_t OutboundMux::audio_pending() const {
  std::lock_guard lock(mu_);
  return audio_.size();
}

std::size_t OutboundMux::audio_dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

std::size_t OutboundMux::stale_dropped() const {
  std::lock_guard lock(mu_);
  return stale_;
}

std::size_t OutboundMux::audio_high_water() const {
  std::lock_guard lock(mu_);
  return high_water_;
}

std::uint64_t OutboundMux::floor() const {
  std::lock_guard lock(mu_);
  return floor_;
}

}  // namespace ol::gateway
