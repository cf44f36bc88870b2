#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace ol {

// Milliseconds since session start. Every timestamp consumer takes a Clock so
// the replay harness can substitute virtual time.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
};

class VirtualClock final : public Clock {
 public:
  std::int64_t now_ms() const override { return now_.load(std::memory_order_acquire); }
  void set(std::int64_t t) { now_.store(t, std::memory_order_release); }
  void advance(std::int64_t dt) { now_.fetch_add(dt, std::memory_order_acq_rel); }

 private:
  std::atomic<std::int64_t> now_{0};
};

class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}
  std::int64_t now_ms() const override {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - origin_)
        .count();
  }
  double now_ms_fine() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - origin_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

}  // namespace ol
