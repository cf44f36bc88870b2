#include "ol/vad/vad.hpp"

#include <cmath>

#include "ol/common/error.hpp"

namespace ol::vad {

using ingest::kChunkMs;

void VadConfig::validate() const {
  std::vector<std::string> bad;
  auto check_ms = [&](std::int64_t v, const char* name) {
    if (v <= 0 || v % kChunkMs != 0) bad.emplace_back(name);
  };
  if (!(energy_threshold > 0.0)) bad.emplace_back("vad.energy_threshold");
  check_ms(onset_min_ms, "vad.onset_min_ms");
  check_ms(hangover_ms, "vad.hangover_ms");
  check_ms(max_segment_ms, "vad.max_segment_ms");
  if (!bad.empty()) {
    std::string msg = "invalid VAD config (durations must be positive multiples of 16 ms):";
    for (const auto& b : bad) msg += " " + b;
    throw ConfigError(bad, msg);
  }
}

double chunk_rms(std::span<const std::int16_t> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (auto s : samples) acc += static_cast<double>(s) * static_cast<double>(s);
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

namespace {

std::int64_t chunk_duration_ms(const ingest::AudioChunk& chunk) {
  return static_cast<std::int64_t>(chunk.samples.size()) * 1000 / ingest::kSampleRate;
}

void close_segment(VadState& s, std::int64_t t_end_ms, bool forced, std::vector<VadEvent>& events) {
  VoiceSegment seg;
  seg.session_id = s.session_id;
  seg.id = s.next_segment_id++;
  seg.t_start_ms = s.open_start_ms;
  seg.t_end_ms = t_end_ms;
  seg.samples = std::move(s.open_samples);
  seg.forced = forced;
  s.open_samples.clear();
  s.phase = Phase::Silence;
  s.candidate_ms = 0;
  s.trailing_ms = 0;
  events.emplace_back(VoiceEnd{std::move(seg)});
}

}  // namespace

VadStep process_chunk(VadState s, const ingest::AudioChunk& chunk, const VadConfig& cfg) {
  if (s.faulted) throw SequencingError("VAD is faulted; chunk rejected");
  if (s.last_seq && chunk.seq != *s.last_seq + 1) {
    s.faulted = true;
    throw SequencingError("out-of-order audio chunk: expected seq " + std::to_string(*s.last_seq + 1) +
                          ", got " + std::to_string(chunk.seq));
  }
  s.last_seq = chunk.seq;
  if (s.session_id.empty()) s.session_id = chunk.session_id;

  std::vector<VadEvent> events;
  const bool voiced = chunk_rms(chunk.samples) >= cfg.energy_threshold;
  const std::int64_t dur = chunk_duration_ms(chunk);
  const std::int64_t chunk_end = chunk.t_start_ms + dur;
  auto append = [&] { s.open_samples.insert(s.open_samples.end(), chunk.samples.begin(), chunk.samples.end()); };

  switch (s.phase) {
    case Phase::Silence:
      if (!voiced) break;
      s.phase = Phase::Candidate;
      s.open_start_ms = chunk.t_start_ms;
      s.candidate_ms = 0;
      s.open_samples.clear();
      [[fallthrough]];
    case Phase::Candidate:
      if (!voiced) {
        s.phase = Phase::Silence;
        s.open_samples.clear();
        s.candidate_ms = 0;
        break;
      }
      append();
      s.candidate_ms += dur;
      if (s.candidate_ms >= cfg.onset_min_ms) {
        s.phase = Phase::Speech;
        events.emplace_back(VoiceStart{s.open_start_ms});
      }
      break;
    case Phase::Speech:
      append();
      if (!voiced) {
        s.phase = Phase::Trailing;
        s.trailing_ms = dur;
      }
      break;
    case Phase::Trailing:
      append();
      if (voiced) {
        s.phase = Phase::Speech;
        s.trailing_ms = 0;
      } else {
        s.trailing_ms += dur;
      }
      break;
  }

  if (s.phase == Phase::Trailing && s.trailing_ms >= cfg.hangover_ms) {
    close_segment(s, chunk_end, false, events);
  } else if ((s.phase == Phase::Speech || s.phase == Phase::Trailing) &&
             chunk_end - s.open_start_ms >= cfg.max_segment_ms) {
    close_segment(s, chunk_end, true, events);
  }
  return {std::move(s), std::move(events)};
}

VadStep finish(VadState s) {
  std::vector<VadEvent> events;
  if (s.phase == Phase::Speech || s.phase == Phase::Trailing) {
    const auto t_end = s.open_start_ms +
                       static_cast<std::int64_t>(s.open_samples.size()) * 1000 / ingest::kSampleRate;
    close_segment(s, t_end, false, events);
  } else {
    s.phase = Phase::Silence;
    s.open_samples.clear();
    s.candidate_ms = 0;
  }
  return {std::move(s), std::move(events)};
}

EnergyVad::EnergyVad(VadConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::vector<VadEvent> EnergyVad::process(const ingest::AudioChunk& chunk) {
  // Sequencing is checked here so a rejected chunk leaves the state intact.
  if (state_.faulted) throw SequencingError("VAD is faulted; chunk rejected");
  if (state_.last_seq && chunk.seq != *state_.last_seq + 1) {
    state_.faulted = true;
    throw SequencingError("out-of-order audio chunk: expected seq " +
                          std::to_string(*state_.last_seq + 1) + ", got " + std::to_string(chunk.seq));
  }
  auto step = process_chunk(std::move(state_), chunk, cfg_);
  state_ = std::move(step.state);
  return std::move(step.events);
}

std::vector<VadEvent> EnergyVad::flush() {
  auto step = finish(std::move(state_));
  state_ = std::move(step.state);
  return std::move(step.events);
}

Interrupt on_voice_start(std::int64_t t_ms, GenerationCounter& generation,
                         ControlChannel<Interrupt>& to_gateway, ControlChannel<Backup>& to_memory) {
  Interrupt irq{t_ms, generation.bump()};
  to_gateway.send(irq);
  to_memory.send(Backup{t_ms});
  return irq;
}

}  // namespace ol::vad
