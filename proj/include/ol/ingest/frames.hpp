#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ol/common/matrix.hpp"

namespace ol::ingest {

struct JpegImage {
  std::vector<std::uint8_t> bytes;
  bool operator==(const JpegImage&) const = default;
};

// Live frames carry JPEG bytes; replayed frames may carry the feature
// matrix directly.
using FramePayload = std::variant<JpegImage, Matrix>;

struct RawFrame {
  std::string session_id;
  std::uint64_t seq = 0;
  std::int64_t t_ms = 0;
  FramePayload payload;

  bool is_replay_features() const noexcept { return std::holds_alternative<Matrix>(payload); }
  bool operator==(const RawFrame&) const = default;
};

struct StreamStalled {
  std::int64_t last_frame_ms = 0;
  std::int64_t resumed_ms = 0;
  bool operator==(const StreamStalled&) const = default;
};

using SamplerOutput = std::variant<RawFrame, StreamStalled>;

struct SamplerConfig {
  double rate_fps = 1.0;
  std::int64_t stall_ms = 3000;
};

// Emits the most recent source frame at each 1/rate tick, starting at the
// first frame's timestamp. Each source frame is emitted at most once; a tick
// with no new frame emits nothing. Output frames keep their capture time and
// receive a fresh monotone seq.
class FrameSampler {
 public:
  explicit FrameSampler(SamplerConfig cfg = {});

  std::vector<SamplerOutput> offer(RawFrame frame);

  std::uint64_t emitted() const noexcept { return next_seq_; }

 private:
  double period_ms() const { return 1000.0 / cfg_.rate_fps; }
  void emit(RawFrame frame, std::vector<SamplerOutput>& out);

  SamplerConfig cfg_;
  std::optional<RawFrame> latest_;
  bool latest_emitted_ = false;
  std::int64_t origin_ms_ = 0;
  std::uint64_t next_tick_ = 0;
  std::uint64_t next_seq_ = 0;
};

std::vector<SamplerOutput> sample_frames(std::span<const RawFrame> source, SamplerConfig cfg = {});

}  // namespace ol::ingest
