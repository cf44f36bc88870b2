#include "ol/ingest/frames.hpp"

#include <cmath>

#include "ol/common/error.hpp"

namespace ol::ingest {

FrameSampler::FrameSampler(SamplerConfig cfg) : cfg_(cfg) {
  if (!(cfg_.rate_fps > 0.0)) throw ArgumentError("frame rate must be positive");
  if (cfg_.stall_ms <= 0) throw ArgumentError("stall threshold must be positive");
}

void FrameSampler::emit(RawFrame frame, std::vector<SamplerOutput>& out) {
  frame.seq = next_seq_++;
  out.emplace_back(std::move(frame));
}

std::vector<SamplerOutput> FrameSampler::offer(RawFrame frame) {
  std::vector<SamplerOutput> out;
  if (!latest_) {
    origin_ms_ = frame.t_ms;
    next_tick_ = 1;
    latest_ = frame;
    latest_emitted_ = true;
    emit(std::move(frame), out);
    return out;
  }
  if (frame.t_ms < latest_->t_ms) throw SequencingError("frame timestamps must not decrease");
  if (frame.t_ms - latest_->t_ms > cfg_.stall_ms) {
    out.emplace_back(StreamStalled{latest_->t_ms, frame.t_ms});
  }

  // Ticks strictly before the new frame resolve to the previous latest frame.
  auto tick_time = [&](std::uint64_t k) {
    return static_cast<double>(origin_ms_) + static_cast<double>(k) * period_ms();
  };
  bool passed_tick = false;
  while (tick_time(next_tick_) < static_cast<double>(frame.t_ms)) {
    passed_tick = true;
    ++next_tick_;
  }
  if (passed_tick && !latest_emitted_) emit(*latest_, out);

  latest_ = frame;
  latest_emitted_ = false;
  if (tick_time(next_tick_) == static_cast<double>(frame.t_ms)) {
    ++next_tick_;
    latest_emitted_ = true;
    emit(std::move(frame), out);
  }
  return out;
}

std::vector<SamplerOutput> sample_frames(std::span<const RawFrame> source, SamplerConfig cfg) {
  FrameSampler sampler(cfg);
  std::vector<SamplerOutput> out;
  for (const auto& f : source) {
    auto step = sampler.offer(f);
    for (auto& o : step) out.push_back(std::move(o));
  }
  return out;
}

}  // namespace ol::ingest
