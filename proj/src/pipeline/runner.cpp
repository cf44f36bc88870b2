#include "ol/pipeline/runner.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace ol::pipeline {

VirtualRunner::VirtualRunner(std::vector<Stage*> stages, VirtualClock& clock)
    : stages_(std::move(stages)), clock_(clock) {}

void VirtualRunner::settle() {
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (auto* s : stages_) {
      while (s->step()) {
        progressed = true;
        ++steps_;
      }
    }
  }
}

std::optional<std::int64_t> VirtualRunner::next_wake_ms() const {
  std::optional<std::int64_t> best;
  for (auto* s : stages_) {
    if (auto w = s->next_wake_ms()) best = best ? std::min(*best, *w) : *w;
  }
  return best;
}

void VirtualRunner::advance_to(std::int64_t t_ms) {
  settle();
  while (auto w = next_wake_ms()) {
    if (*w > t_ms) break;
    clock_.set(std::max(clock_.now_ms(), *w));
    settle();
    if (auto again = next_wake_ms(); again && *again <= clock_.now_ms()) {
      // A stage reported a wake it did not act on; move past it.
      clock_.set(clock_.now_ms() + 1);
      settle();
    }
  }
  clock_.set(std::max(clock_.now_ms(), t_ms));
  settle();
}

void VirtualRunner::drain() {
  settle();
  while (auto w = next_wake_ms()) advance_to(std::max(*w, clock_.now_ms()));
}

ThreadedRunner::ThreadedRunner(std::vector<Stage*> stages, Wakeup& wake, const Clock& clock)
    : stages_(std::move(stages)), wake_(wake), clock_(clock) {}

ThreadedRunner::~ThreadedRunner() { stop(); }

void ThreadedRunner::start() {
  if (!threads_.empty()) return;
  stop_ = false;
  for (auto* s : stages_) threads_.emplace_back([this, s] { loop(s); });
}

void ThreadedRunner::stop() {
  stop_ = true;
  wake_.notify();
  for (auto& t : threads_) t.join();
  threads_.clear();
}

void ThreadedRunner::loop(Stage* stage) {
  constexpr std::int64_t kIdleMs = 50;
  while (!stop_) {
    const auto seen = wake_.epoch();
    bool did = false;
    try {
      did = stage->step();
    } catch (const std::exception& e) {
      spdlog::error("stage {} failed: {}", stage->name(), e.what());
    }
    if (did) continue;
    std::int64_t wait = kIdleMs;
    if (auto w = stage->next_wake_ms()) wait = std::clamp<std::int64_t>(*w - clock_.now_ms(), 1, kIdleMs);
    wake_.wait_past(seen, std::chrono::milliseconds(wait));
  }
}

}  // namespace ol::pipeline
