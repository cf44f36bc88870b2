#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ol/backends/contracts.hpp"
#include "ol/perception/types.hpp"

namespace ol::perception {

// Never throws: backend failures come back as class "error".
AudioResult classify_and_transcribe(const vad::VoiceSegment& segment, backends::AsrBackend& backend);

// nullopt when the payload cannot be decoded; the failure is logged.
std::optional<FrameFeatures> extract_frame_features(const ingest::RawFrame& frame,
                                                    backends::FrameEncoderBackend& backend,
                                                    const FeatureProfile& profile);

// Groups frame features into clips of T frames.
class ClipAssembler {
 public:
  explicit ClipAssembler(FeatureProfile profile);

  // Returns a clip once T frames have accumulated. Throws ProfileMismatch if
  // the frame's shape differs from the session profile.
  std::optional<ClipFeatures> add(FrameFeatures frame);

  // Emits the buffered frames as a short final clip, if any.
  std::optional<ClipFeatures> flush();

  std::size_t buffered() const noexcept { return buffer_.size(); }
  std::size_t next_index() const noexcept { return next_index_; }

 private:
  ClipFeatures build();

  FeatureProfile profile_;
  std::vector<FrameFeatures> buffer_;
  std::size_t next_index_ = 0;
};

}  // namespace ol::perception
