#include "ol/perception/perception.hpp"

#include <chrono>

#include <spdlog/spdlog.h>

#include "ol/common/error.hpp"

namespace ol::perception {

void FeatureProfile::validate() const {
  std::vector<std::string> bad;
  if (frames_per_clip == 0) bad.emplace_back("profile.T");
  if (tokens_per_frame == 0) bad.emplace_back("profile.N");
  if (channels < 2) bad.emplace_back("profile.C");
  if (memory_tokens_per_frame == 0 || memory_tokens_per_frame >= tokens_per_frame ||
      (tokens_per_frame > 0 && tokens_per_frame % memory_tokens_per_frame != 0)) {
    bad.emplace_back("profile.P");
    bad.emplace_back("profile.N");
  }
  if (!bad.empty()) {
    std::string msg = "invalid feature profile (need T>0, C>=2, 0<P<N and P divides N):";
    for (const auto& b : bad) msg += " " + b;
    throw ConfigError(bad, msg);
  }
}

AudioResult classify_and_transcribe(const vad::VoiceSegment& segment, backends::AsrBackend& backend) {
  AudioResult result;
  result.segment_id = segment.id;
  result.t_start_ms = segment.t_start_ms;
  result.t_end_ms = segment.t_end_ms;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto out = backend.recognize(segment);
    result.sound_class = std::move(out.sound_class);
    if (result.is_speech()) result.transcript = std::move(out.transcript);
  } catch (const std::exception& e) {
    spdlog::warn("asr backend failed on segment {}: {}", segment.id, e.what());
    result.sound_class = kErrorClass;
    result.transcript.clear();
  }
  result.backend_latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::optional<FrameFeatures> extract_frame_features(const ingest::RawFrame& frame,
                                                    backends::FrameEncoderBackend& backend,
                                                    const FeatureProfile& profile) {
  try {
    FrameFeatures out{FrameRef{frame.seq, frame.t_ms}, backend.encode(frame, profile)};
    if (!out.tokens.all_finite()) {
      spdlog::warn("frame {} produced non-finite features; dropped", frame.seq);
      return std::nullopt;
    }
    return out;
  } catch (const DecodeError& e) {
    spdlog::warn("frame {} dropped: {}", frame.seq, e.what());
    return std::nullopt;
  }
}

ClipAssembler::ClipAssembler(FeatureProfile profile) : profile_(profile) { profile_.validate(); }

std::optional<ClipFeatures> ClipAssembler::add(FrameFeatures frame) {
  if (frame.tokens.rows() != profile_.tokens_per_frame || frame.tokens.cols() != profile_.channels) {
    throw ProfileMismatch("frame features are " + std::to_string(frame.tokens.rows()) + "x" +
                          std::to_string(frame.tokens.cols()) + ", session profile is " +
                          std::to_string(profile_.tokens_per_frame) + "x" + std::to_string(profile_.channels));
  }
  buffer_.push_back(std::move(frame));
  if (buffer_.size() < profile_.frames_per_clip) return std::nullopt;
  return build();
}

std::optional<ClipFeatures> ClipAssembler::flush() {
  if (buffer_.empty()) return std::nullopt;
  return build();
}

ClipFeatures ClipAssembler::build() {
  ClipFeatures clip;
  clip.index = next_index_++;
  clip.t_start_ms = buffer_.front().frame.t_ms;
  clip.t_end_ms = buffer_.back().frame.t_ms;
  clip.frame_count = buffer_.size();
  for (auto& f : buffer_) {
    clip.features.append_rows(f.tokens);
    clip.frames.push_back(f.frame);
  }
  buffer_.clear();
  return clip;
}

}  // namespace ol::perception
