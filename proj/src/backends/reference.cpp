#include "ol/backends/reference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "ol/backends/hashed_vector.hpp"
#include "ol/backends/text.hpp"
#include "ol/common/error.hpp"
#include "ol/kernels/kernels.hpp"
#include "ol/perception/jpeg.hpp"

namespace ol::backends {

Matrix CompressorBackend::init_short_term(const Matrix& clip_features, const perception::FeatureProfile& profile) {
  return kernels::parallel::group_mean(clip_features, profile.tokens_per_frame, profile.memory_tokens_per_frame);
}

// --- ASR -------------------------------------------------------------------

WizardAsr::WizardAsr(std::vector<SegmentAnnotation> annotations) : annotations_(std::move(annotations)) {}

AsrOutput WizardAsr::recognize(const vad::VoiceSegment& segment) {
  const SegmentAnnotation* best = nullptr;
  std::int64_t best_dist = 0;
  for (const auto& a : annotations_) {
    if (a.t_ms < segment.t_start_ms - 64 || a.t_ms > segment.t_end_ms) continue;
    const std::int64_t d = std::llabs(a.t_ms - segment.t_start_ms);
    if (!best || d < best_dist) {
      best = &a;
      best_dist = d;
    }
  }
  if (!best) return {"unknown", ""};
  AsrOutput out{best->sound_class, best->transcript};
  if (out.sound_class != perception::kSpeechClass) out.transcript.clear();
  return out;
}

// --- frame encoder ---------------------------------------------------------

Matrix ReferenceFrameEncoder::encode(const ingest::RawFrame& frame, const perception::FeatureProfile& profile) {
  if (const auto* m = std::get_if<Matrix>(&frame.payload)) {
    if (m->rows() != profile.tokens_per_frame || m->cols() != profile.channels) {
      throw ProfileMismatch("replay frame is " + std::to_string(m->rows()) + "x" + std::to_string(m->cols()) +
                            ", profile expects " + std::to_string(profile.tokens_per_frame) + "x" +
                            std::to_string(profile.channels));
    }
    return *m;
  }
  const auto grid = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(profile.tokens_per_frame))));
  if (grid * grid != profile.tokens_per_frame) {
    throw ProfileMismatch("reference image encoder needs a square token count");
  }
  const auto& jpeg = std::get<ingest::JpegImage>(frame.payload);
  const perception::RgbImage img = perception::decode_jpeg(jpeg.bytes);
  if (img.width < grid || img.height < grid) throw DecodeError("image smaller than the encoder grid");

  Matrix out(profile.tokens_per_frame, profile.channels);
  for (std::size_t gy = 0; gy < grid; ++gy) {
    const std::size_t y0 = gy * img.height / grid;
    const std::size_t y1 = (gy + 1) * img.height / grid;
    for (std::size_t gx = 0; gx < grid; ++gx) {
      const std::size_t x0 = gx * img.width / grid;
      const std::size_t x1 = (gx + 1) * img.width / grid;
      double sum[3] = {0.0, 0.0, 0.0};
      for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) {
          const std::uint8_t* px = &img.pixels[(y * img.width + x) * 3];
          for (int c = 0; c < 3; ++c) sum[c] += px[c];
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      std::string key = "rgb:";
      for (int c = 0; c < 3; ++c) {
        if (c) key += ',';
        key += std::to_string(std::lround(sum[c] / n));
      }
      const Vector token = hashed_vector(key, profile.channels);
      std::copy(token.begin(), token.end(), out.row(gy * grid + gx).begin());
    }
  }
  return out;
}

// --- compressor ------------------------------------------------------------

CompressOutput ReferenceCompressor::compress(const CompressInput& input) {
  const auto& l = input.layout;
  if (input.tokens.rows() != l.feature_rows + l.short_term_rows + l.global_rows) {
    throw ArgumentError("compress: layout does not match token rows");
  }
  CompressOutput out;
  out.short_term = input.tokens.slice_rows(l.feature_rows, l.short_term_rows);
  out.global = normalized(kernels::parallel::column_mean(input.tokens.slice_rows(0, l.feature_rows)));
  return out;
}

Matrix ReferenceCompressor::integrate(const IntegrateInput& input) {
  Matrix out;
  std::size_t offset = 0;
  for (std::size_t rows : input.short_rows) {
    const Vector row = normalized(kernels::parallel::column_mean(input.tokens.slice_rows(offset, rows)));
    out.append_row(row);
    offset += rows;
  }
  return out;
}

Vector ReferenceCompressor::encode_question(const Matrix& /*long_term*/, std::span<const std::string> tokens,
                                            std::string_view question, std::size_t channels) {
  if (tokens.empty()) return hashed_vector(question, channels);
  Vector acc(channels, 0.0);
  for (const auto& t : tokens) {
    const Vector v = hashed_vector(t, channels);
    for (std::size_t c = 0; c < channels; ++c) acc[c] += v[c];
  }
  for (auto& x : acc) x /= static_cast<double>(tokens.size());
  return normalized(acc);
}

// --- reasoner --------------------------------------------------------------

void stream_words(std::string_view text, const IncrementSink& sink) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(' ', pos + 1);
    if (next == std::string_view::npos) next = text.size();
    if (!sink(text.substr(pos, next - pos))) return;
    pos = next;
  }
}

std::string ReferenceReasoner::answer_for(const reasoning::AssembledPrompt& prompt) {
  std::string out = "Answering '" + prompt.question + "' using clips [";
  for (std::size_t i = 0; i < prompt.clips.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(prompt.clips[i].clip_index);
  }
  out += "].";
  return out;
}

void ReferenceReasoner::generate(const reasoning::AssembledPrompt& prompt, const IncrementSink& sink) {
  stream_words(answer_for(prompt), sink);
}

WizardReasoner::WizardReasoner(std::map<std::string, std::string> answers) : answers_(std::move(answers)) {}

void WizardReasoner::generate(const reasoning::AssembledPrompt& prompt, const IncrementSink& sink) {
  auto it = answers_.find(prompt.question);
  stream_words(it != answers_.end() ? it->second : ReferenceReasoner::answer_for(prompt), sink);
}

// --- TTS -------------------------------------------------------------------

ReferenceTts::ReferenceTts(std::int64_t ms_per_char) : ms_per_char_(ms_per_char) {
  if (ms_per_char_ <= 0) throw ArgumentError("tts ms_per_char must be positive");
}

std::vector<std::int16_t> ReferenceTts::synthesize(std::string_view text) {
  const auto chars = static_cast<std::int64_t>(utf8_length(text));
  const std::int64_t chunk_ms = 16;
  const std::int64_t chunks = (chars * ms_per_char_ + chunk_ms - 1) / chunk_ms;
  std::vector<std::int16_t> pcm(static_cast<std::size_t>(chunks) * 256);
  for (std::size_t i = 0; i < pcm.size(); ++i) {
    pcm[i] = ((i / kHalfPeriod) % 2 == 0) ? kAmplitude : static_cast<std::int16_t>(-kAmplitude);
  }
  return pcm;
}

// --- gate ------------------------------------------------------------------

std::set<std::string> default_filler_lexicon() {
  return {"enn", "en",  "ok",   "okay", "uh", "um",   "umm",  "hmm",  "hm",  "mm",   "mhm",
          "ah",  "oh",  "eh",   "er",   "yeah", "yep", "yes", "right", "sure", "huh", "alright"};
}

ReferenceGate::ReferenceGate(std::set<std::string> lexicon, std::size_t min_content_tokens)
    : lexicon_(std::move(lexicon)), min_content_tokens_(min_content_tokens) {}

reasoning::GateDecision ReferenceGate::predict(std::string_view transcript) {
  using reasoning::Verdict;
  const auto tokens = tokenize(transcript);
  if (tokens.empty()) return {Verdict::Ignore, "non-linguistic"};
  const auto content = static_cast<std::size_t>(
      std::count_if(tokens.begin(), tokens.end(), [&](const std::string& t) { return !lexicon_.contains(t); }));
  if (content < min_content_tokens_) return {Verdict::Ignore, "filler"};

  static const std::set<std::string> kQuestionLeads = {"what", "where", "when", "who",   "whom",  "whose",
                                                       "which", "why",  "how",  "is",    "are",   "can",
                                                       "could", "do",   "does", "did",   "will",  "would",
                                                       "should"};
  const bool question = transcript.find('?') != std::string_view::npos || kQuestionLeads.contains(tokens.front());
  return {Verdict::Answer, question ? "question" : "instruction"};
}

}  // namespace ol::backends
