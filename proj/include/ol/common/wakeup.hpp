#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>

namespace ol {

// Edge counter shared by the queues of one pipeline. Idle workers wait on it
// instead of polling; any queue mutation bumps the epoch.
class Wakeup {
 public:
  void notify() {
    {
      std::lock_guard lock(mu_);
      ++epoch_;
    }
    cv_.notify_all();
  }

  std::uint64_t epoch() const {
    std::lock_guard lock(mu_);
    return epoch_;
  }

  // Returns once the epoch differs from `seen` or the timeout expires.
  template <class Rep, class Period>
  void wait_past(std::uint64_t seen, std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return epoch_ != seen; });
  }

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t epoch_ = 0;
};

}  // namespace ol
