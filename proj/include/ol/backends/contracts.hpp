#pragma once

// Model-role contracts. Every pipeline stage talks to its model through one
// of these; reference, wizard and remote implementations are interchangeable.
// Implementations must be safe to call from several workers at once.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ol/common/matrix.hpp"
#include "ol/ingest/frames.hpp"
#include "ol/perception/types.hpp"
#include "ol/reasoning/types.hpp"
#include "ol/vad/vad.hpp"

namespace ol::backends {

struct AsrOutput {
  std::string sound_class;
  std::string transcript;
};

class AsrBackend {
 public:
  virtual ~AsrBackend() = default;
  virtual AsrOutput recognize(const vad::VoiceSegment& segment) = 0;
};

class FrameEncoderBackend {
 public:
  virtual ~FrameEncoderBackend() = default;
  // Returns an N x C matrix. Throws DecodeError for undecodable payloads.
  virtual Matrix encode(const ingest::RawFrame& frame, const perception::FeatureProfile& profile) = 0;
};

// Row counts of the blocks stacked in a compressor input, in stacking order.
struct CompressLayout {
  std::size_t feature_rows = 0;     // F_k
  std::size_t short_term_rows = 0;  // H_k
  std::size_t global_rows = 0;      // the global memory, always 1
};

struct CompressInput {
  Matrix tokens;  // [F_k ; H_k ; global] stacked along the token axis
  CompressLayout layout;
  perception::FeatureProfile profile;
};

struct CompressOutput {
  Matrix short_term;  // T*P x C
  Vector global;      // C
};

struct IntegrateInput {
  Matrix tokens;                         // [H_a ; ... ; H_k ; G_0 ; ... ; G_k]
  std::vector<std::size_t> short_rows;   // rows of each short-term block
  std::size_t global_rows = 0;           // one per integrated clip
  std::size_t first_clip = 0;            // clip index of the first short-term block
};

class CompressorBackend {
 public:
  virtual ~CompressorBackend() = default;

  // Spatial down-sampling of a clip to T*P tokens. The default averages
  // contiguous token groups per frame.
  virtual Matrix init_short_term(const Matrix& clip_features, const perception::FeatureProfile& profile);

  virtual CompressOutput compress(const CompressInput& input) = 0;

  // Returns one long-term row per short-term block in `input`.
  virtual Matrix integrate(const IntegrateInput& input) = 0;

  // Last-position output over [long_term ; tokenized question].
  virtual Vector encode_question(const Matrix& long_term, std::span<const std::string> tokens,
                                 std::string_view question, std::size_t channels) = 0;
};

// Receives text increments; returning false asks the backend to stop early.
using IncrementSink = std::function<bool(std::string_view)>;

class ReasonerBackend {
 public:
  virtual ~ReasonerBackend() = default;
  virtual void generate(const reasoning::AssembledPrompt& prompt, const IncrementSink& sink) = 0;
};

class TtsBackend {
 public:
  virtual ~TtsBackend() = default;
  // 16 kHz mono PCM.
  virtual std::vector<std::int16_t> synthesize(std::string_view text) = 0;
};

class GateBackend {
 public:
  virtual ~GateBackend() = default;
  virtual reasoning::GateDecision predict(std::string_view transcript) = 0;
};

}  // namespace ol::backends
