#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <variant>

#include "ol/common/error.hpp"
#include "ol/common/wakeup.hpp"

namespace ol {

// Tells the client to stop playback; audio tagged with a generation below
// `generation` is stale from here on.
struct Interrupt {
  std::int64_t t_ms = 0;
  std::uint64_t generation = 0;
  bool operator==(const Interrupt&) const = default;
};

// Tells the memory worker to snapshot the bank as of `t_ms`.
struct Backup {
  std::int64_t t_ms = 0;
  bool operator==(const Backup&) const = default;
};

using ControlMessage = std::variant<Interrupt, Backup>;

// Out-of-band channel. Sends never block, so control traffic cannot stall
// behind data-queue backpressure.
template <typename T>
class ControlChannel {
 public:
  explicit ControlChannel(Wakeup* wake = nullptr) : wake_(wake) {}

  void send(T msg) {
    {
      std::lock_guard lock(mu_);
      if (closed_) throw ChannelClosed();
      items_.push_back(std::move(msg));
    }
    if (wake_) wake_->notify();
  }

  std::optional<T> try_receive() {
    std::lock_guard lock(mu_);
    if (items_.empty()) return std::nullopt;
    T out = std::move(items_.front());
    items_.pop_front();
    return out;
  }

  bool empty() const {
    std::lock_guard lock(mu_);
    return items_.empty();
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    if (wake_) wake_->notify();
  }

 private:
  mutable std::mutex mu_;
  std::deque<T> items_;
  bool closed_ = false;
  Wakeup* wake_;
};

// Per-session outbound generation id. Bumped once per voice onset.
class GenerationCounter {
 public:
  std::uint64_t current() const { return gen_.load(std::memory_order_acquire); }
  std::uint64_t bump() { return gen_.fetch_add(1, std::memory_order_acq_rel) + 1; }

 private:
  std::atomic<std::uint64_t> gen_{0};
};

}  // namespace ol
