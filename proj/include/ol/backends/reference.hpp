#pragma once

// Deterministic reference and wizard backends. All are pure functions of
// their inputs: no hidden state, bitwise reproducible across runs.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ol/backends/contracts.hpp"

namespace ol::backends {

// Ground truth for one utterance, keyed by the utterance's onset time.
struct SegmentAnnotation {
  std::int64_t t_ms = 0;
  std::string sound_class = "speech";
  std::string transcript;
};

// ASR that reads trace annotations. The matching annotation is the one whose
// onset lies in [t_start - 64 ms, t_end] closest to t_start; segments with no
// annotation come back as class "unknown".
class WizardAsr final : public AsrBackend {
 public:
  explicit WizardAsr(std::vector<SegmentAnnotation> annotations = {});
  AsrOutput recognize(const vad::VoiceSegment& segment) override;

 private:
  std::vector<SegmentAnnotation> annotations_;
};

// Image frames: a sqrt(N) x sqrt(N) grid; each cell's rounded mean RGB triplet
// keys hashed_vector("rgb:R,G,B", C) to give one token. Matrix payloads pass
// through unchanged after a shape check.
class ReferenceFrameEncoder final : public FrameEncoderBackend {
 public:
  Matrix encode(const ingest::RawFrame& frame, const perception::FeatureProfile& profile) override;
};

// compress:  H = H0 (group means), global = normalize(mean of F rows)
// integrate: row j = normalize(mean of rows of H_j)
// question:  normalize(mean of hashed_vector(token)); the long-term memory is
//            accepted but not consulted
class ReferenceCompressor final : public CompressorBackend {
 public:
  CompressOutput compress(const CompressInput& input) override;
  Matrix integrate(const IntegrateInput& input) override;
  Vector encode_question(const Matrix& long_term, std::span<const std::string> tokens,
                         std::string_view question, std::size_t channels) override;
};

// "Answering '<question>' using clips [i, j]." streamed word by word.
class ReferenceReasoner final : public ReasonerBackend {
 public:
  void generate(const reasoning::AssembledPrompt& prompt, const IncrementSink& sink) override;
  static std::string answer_for(const reasoning::AssembledPrompt& prompt);
};

// Returns the trace's expected answer for a question, falling back to the
// reference template.
class WizardReasoner final : public ReasonerBackend {
 public:
  explicit WizardReasoner(std::map<std::string, std::string> answers);
  void generate(const reasoning::AssembledPrompt& prompt, const IncrementSink& sink) override;

 private:
  std::map<std::string, std::string> answers_;
};

// Square-wave tone, `ms_per_char` of audio per code point, padded up to a
// whole number of 16 ms chunks.
class ReferenceTts final : public TtsBackend {
 public:
  explicit ReferenceTts(std::int64_t ms_per_char = 80);
  std::vector<std::int16_t> synthesize(std::string_view text) override;

  static constexpr std::int16_t kAmplitude = 6000;
  static constexpr std::size_t kHalfPeriod = 18;

 private:
  std::int64_t ms_per_char_;
};

std::set<std::string> default_filler_lexicon();

class ReferenceGate final : public GateBackend {
 public:
  explicit ReferenceGate(std::set<std::string> lexicon = default_filler_lexicon(), std::size_t min_content_tokens = 2);
  reasoning::GateDecision predict(std::string_view transcript) override;

 private:
  std::set<std::string> lexicon_;
  std::size_t min_content_tokens_;
};

// Streams `text` as word-sized increments (each increment but the first
// starts with its separating space).
void stream_words(std::string_view text, const IncrementSink& sink);

}  // namespace ol::backends
