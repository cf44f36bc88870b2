#pragma once

// Replay traces: JSONL, one event per line, sorted by t_ms.
//
//   {"t_ms": 0, "kind": "audio", "payload": {"pcm_b64": "..."}}
//   {"t_ms": 0, "kind": "frame", "payload": {"features": {"rows": N, "cols": C, "f32_b64": "..."}}}
//   {"t_ms": 0, "kind": "frame", "payload": {"jpeg_b64": "..."}}
//   {"t_ms": 0, "kind": "annotation", "payload": {"type": "segment", "class": "speech", "transcript": "..."}}
//   {"t_ms": 0, "kind": "expect", "payload": {"type": "retrieved_top1", "question": "...", "clip": 2}}
//
// Audio events are placed on one continuous PCM timeline at byte offset
// t_ms * 32; gaps between events are filled with silence.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ol/backends/factory.hpp"
#include "ol/ingest/frames.hpp"

namespace ol::harness {

enum class EventKind { Audio, Frame, Annotation, Expect };

struct TraceEvent {
  std::int64_t t_ms = 0;
  EventKind kind = EventKind::Audio;
  nlohmann::json payload;
  std::size_t line = 0;  // 1-based source line
};

struct Trace {
  std::string name;
  std::vector<TraceEvent> events;

  // Wizard ground truth gathered from segment and answer annotations.
  backends::WizardData wizard() const;
  // Config overrides from session annotations, as key/value pairs.
  std::vector<std::pair<std::string, std::string>> config_overrides() const;
  // Ground-truth clip indices per question from query annotations.
  std::map<std::string, std::vector<std::size_t>> ground_truth() const;
};

// Throws TraceError naming the line for malformed or unsorted input.
Trace parse_trace(std::string_view text, std::string name = "trace");
Trace load_trace(const std::filesystem::path& path);

std::string serialize_event(const TraceEvent& e);
std::string serialize_trace(const Trace& t);

const char* kind_name(EventKind k);

// Payload helpers.
nlohmann::json audio_payload(std::span<const std::int16_t> samples);
nlohmann::json features_payload(const Matrix& m);
nlohmann::json jpeg_payload(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> audio_bytes(const TraceEvent& e);
ingest::FramePayload frame_payload(const TraceEvent& e);

// Media deliveries in time order: every 512-byte audio slice becomes
// available when its last sample has been captured.
struct Delivery {
  std::int64_t t_ms = 0;
  bool is_audio = true;
  std::vector<std::uint8_t> bytes;  // audio
  ingest::RawFrame frame;           // frame
};

std::vector<Delivery> media_deliveries(const Trace& trace);

}  // namespace ol::harness
