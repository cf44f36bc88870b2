#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ol/common/matrix.hpp"

namespace ol::perception {

// Shape parameters of a session's features: T frames per clip, N tokens per
// frame, P memory tokens per frame after down-sampling, C channels.
struct FeatureProfile {
  std::size_t frames_per_clip = 16;
  std::size_t tokens_per_frame = 16;
  std::size_t memory_tokens_per_frame = 4;
  std::size_t channels = 64;

  // Throws ConfigError naming the offending fields.
  void validate() const;
  bool operator==(const FeatureProfile&) const = default;
};

inline const std::vector<std::string> kBaseSoundClasses = {"speech", "silence", "laughing", "clapping", "raining"};
inline constexpr const char* kSpeechClass = "speech";
inline constexpr const char* kErrorClass = "error";

struct AudioResult {
  std::uint64_t segment_id = 0;
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::string sound_class;
  std::string transcript;  // empty unless sound_class == "speech"
  double backend_latency_ms = 0.0;

  bool is_speech() const { return sound_class == kSpeechClass; }
  bool operator==(const AudioResult&) const = default;
};

struct FrameRef {
  std::uint64_t seq = 0;
  std::int64_t t_ms = 0;
  bool operator==(const FrameRef&) const = default;
};

struct FrameFeatures {
  FrameRef frame;
  Matrix tokens;  // N x C
};

struct ClipFeatures {
  std::size_t index = 0;
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::size_t frame_count = 0;
  Matrix features;  // frame_count*N x C, frames stacked in time order
  std::vector<FrameRef> frames;
};

}  // namespace ol::perception
