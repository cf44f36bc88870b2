#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ol/backends/config.hpp"
#include "ol/backends/contracts.hpp"
#include "ol/backends/reference.hpp"

namespace ol::backends {

// Ground truth the wizard backends answer from.
struct WizardData {
  std::vector<SegmentAnnotation> segments;
  std::map<std::string, std::string> answers;  // question -> expected answer
};

struct BackendSet {
  std::shared_ptr<AsrBackend> asr;
  std::shared_ptr<FrameEncoderBackend> frame_encoder;
  std::shared_ptr<CompressorBackend> compressor;
  std::shared_ptr<ReasonerBackend> reasoner;
  std::shared_ptr<TtsBackend> tts;
  std::shared_ptr<GateBackend> gate;
};

// Builds one backend per role as described by the config. Reference ASR has
// no annotations, so every segment is classed "unknown".
BackendSet make_backends(const RuntimeConfig& cfg, const WizardData& wizard = {});

}  // namespace ol::backends
