#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "ol/common/clock.hpp"
#include "ol/common/wakeup.hpp"
#include "ol/gateway/outbound.hpp"
#include "ol/pipeline/pipeline.hpp"

namespace ol::pipeline {

// Writes whatever the outbound mux has ready to a transport.
class OutboundPump final : public Stage {
 public:
  OutboundPump(gateway::OutboundMux& mux, gateway::OutboundTransport& transport) : mux_(mux), transport_(transport) {}
  const char* name() const override { return "outbound"; }
  bool step() override { return mux_.flush(transport_) > 0; }

 private:
  gateway::OutboundMux& mux_;
  gateway::OutboundTransport& transport_;
};

// Single-threaded driver. Time only moves when the caller asks, and only
// after every stage has run out of work, so a run is fully reproducible.
class VirtualRunner {
 public:
  VirtualRunner(std::vector<Stage*> stages, VirtualClock& clock);

  // Steps all stages round-robin until none makes progress.
  void settle();

  // Moves the clock to `t_ms`, stopping at every scheduled wake on the way.
  void advance_to(std::int64_t t_ms);

  // Runs scheduled work until nothing remains.
  void drain();

  std::optional<std::int64_t> next_wake_ms() const;
  std::uint64_t steps() const noexcept { return steps_; }

 private:
  std::vector<Stage*> stages_;
  VirtualClock& clock_;
  std::uint64_t steps_ = 0;
};

// One thread per stage. Idle threads sleep on the shared wakeup until a
// queue changes or their next scheduled wake.
class ThreadedRunner {
 public:
  ThreadedRunner(std::vector<Stage*> stages, Wakeup& wake, const Clock& clock);
  ~ThreadedRunner();

  void start();
  void stop();
  bool running() const noexcept { return !threads_.empty(); }

 private:
  void loop(Stage* stage);

  std::vector<Stage*> stages_;
  Wakeup& wake_;
  const Clock& clock_;
  std::atomic<bool> stop_{false};
  std::vector<std::thread> threads_;
};

}  // namespace ol::pipeline
