#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ol/common/control.hpp"
#include "ol/ingest/audio.hpp"

namespace ol::vad {

struct VadConfig {
  double energy_threshold = 1000.0;  // RMS in PCM units
  std::int64_t onset_min_ms = 64;
  std::int64_t hangover_ms = 256;
  std::int64_t max_segment_ms = 30000;

  // Throws ConfigError naming the offending fields.
  void validate() const;
};

enum class Phase { Silence, Candidate, Speech, Trailing };

struct VoiceSegment {
  std::string session_id;
  std::uint64_t id = 0;  // per-session episode counter
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::vector<std::int16_t> samples;
  bool forced = false;  // closed by max_segment_ms

  bool operator==(const VoiceSegment&) const = default;
};

struct VoiceStart {
  std::int64_t t_ms = 0;
  bool operator==(const VoiceStart&) const = default;
};

struct VoiceEnd {
  VoiceSegment segment;
  bool operator==(const VoiceEnd&) const = default;
};

using VadEvent = std::variant<VoiceStart, VoiceEnd>;

struct VadState {
  Phase phase = Phase::Silence;
  std::string session_id;
  std::optional<std::uint64_t> last_seq;
  bool faulted = false;
  std::uint64_t next_segment_id = 0;
  std::int64_t open_start_ms = 0;
  std::int64_t candidate_ms = 0;
  std::int64_t trailing_ms = 0;
  std::vector<std::int16_t> open_samples;

  bool operator==(const VadState&) const = default;
};

struct VadStep {
  VadState state;
  std::vector<VadEvent> events;
};

double chunk_rms(std::span<const std::int16_t> samples);

// Pure transition function of the energy state machine. Throws
// SequencingError on an out-of-order chunk; the returned state is faulted.
VadStep process_chunk(VadState state, const ingest::AudioChunk& chunk, const VadConfig& cfg);

// Closes an open episode at end of stream.
VadStep finish(VadState state);

// Seam for substituting a model-based detector.
class VadBackend {
 public:
  virtual ~VadBackend() = default;
  virtual std::vector<VadEvent> process(const ingest::AudioChunk& chunk) = 0;
  virtual std::vector<VadEvent> flush() = 0;
  virtual Phase phase() const = 0;
};

class EnergyVad final : public VadBackend {
 public:
  explicit EnergyVad(VadConfig cfg);
  std::vector<VadEvent> process(const ingest::AudioChunk& chunk) override;
  std::vector<VadEvent> flush() override;
  Phase phase() const override { return state_.phase; }
  const VadState& state() const noexcept { return state_; }

 private:
  VadConfig cfg_;
  VadState state_;
};

// Issues the two onset signals, Interrupt first then Backup, with the same
// timestamp. The interrupt carries the freshly bumped generation id.
Interrupt on_voice_start(std::int64_t t_ms, GenerationCounter& generation,
                         ControlChannel<Interrupt>& to_gateway, ControlChannel<Backup>& to_memory);

}  // namespace ol::vad
