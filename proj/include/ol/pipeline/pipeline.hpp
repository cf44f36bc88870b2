#pragma once

// One session's perception -> memory -> reasoning pipeline.
//
//   audio bytes -> [reader] -> Audio Queue -> [vad] -> ASR Todo -> [asr]
//     -> LLM Todo -> [llm] -> TTS Todo -> [tts] -> outbound mux
//   frames -> [sampler] -> Frame Queue -> [memory]
//
// VAD onset sends an Interrupt to the outbound mux and the TTS worker and a
// Backup to the memory worker over out-of-band channels.
//
// Every stage is a non-blocking step function, so the same stages can be
// driven by one thread per stage (live) or interleaved on a single thread
// under a virtual clock (deterministic replay).

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ol/backends/config.hpp"
#include "ol/backends/factory.hpp"
#include "ol/common/clock.hpp"
#include "ol/common/control.hpp"
#include "ol/gateway/outbound.hpp"
#include "ol/ingest/audio.hpp"
#include "ol/ingest/bounded_queue.hpp"
#include "ol/ingest/frames.hpp"
#include "ol/memory/memory.hpp"
#include "ol/perception/perception.hpp"
#include "ol/reasoning/reasoning.hpp"
#include "ol/vad/vad.hpp"

namespace ol::pipeline {

class Stage {
 public:
  virtual ~Stage() = default;
  virtual const char* name() const = 0;
  // Does one unit of work. Returns false when there was nothing to do.
  virtual bool step() = 0;
  // Clock time at which the stage has timed work, if any.
  virtual std::optional<std::int64_t> next_wake_ms() const { return std::nullopt; }
};

// Hooks for metrics. Calls may arrive from several worker threads.
class PipelineObserver {
 public:
  virtual ~PipelineObserver() = default;
  virtual void on_voice_start(std::int64_t /*t_ms*/, std::uint64_t /*generation*/) {}
  virtual void on_voice_end(const vad::VoiceSegment& /*segment*/) {}
  virtual void on_transcript(const perception::AudioResult& /*result*/) {}
  virtual void on_gate(std::uint64_t /*segment_id*/, const std::string& /*transcript*/,
                       const reasoning::GateDecision& /*decision*/) {}
  virtual void on_retrieval(std::uint64_t /*segment_id*/, const std::string& /*question*/,
                            const memory::MemorySnapshot& /*snapshot*/, const memory::RetrievalResult& /*result*/) {}
  virtual void on_answer(const reasoning::AnswerEvent& /*answer*/) {}
  virtual void on_clip(const memory::ClipRecord& /*clip*/) {}
  virtual void on_snapshot(const memory::MemorySnapshot& /*snapshot*/) {}
  virtual void on_tts_queued(std::uint64_t /*answer_id*/, std::uint64_t /*generation*/, std::size_t /*chunks*/) {}
  virtual void on_status(const std::string& /*code*/, const std::string& /*detail*/) {}
};

struct LlmItem {
  std::uint64_t segment_id = 0;
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::string transcript;
};

struct TtsItem {
  std::uint64_t answer_id = 0;
  std::uint64_t generation = 0;
  std::string text;
};

struct QueueDepths {
  std::size_t audio = 0, frame = 0, asr_todo = 0, llm_todo = 0, tts_todo = 0, outbound_audio = 0;
  std::size_t audio_hw = 0, frame_hw = 0, asr_todo_hw = 0, llm_todo_hw = 0, tts_todo_hw = 0, outbound_hw = 0;
  std::size_t frames_dropped = 0, outbound_dropped = 0;
  nlohmann::json to_json() const;
};

class SessionPipeline {
 public:
  SessionPipeline(std::string session_id, backends::RuntimeConfig cfg, backends::BackendSet backends,
                  const Clock& clock, PipelineObserver* observer = nullptr);
  ~SessionPipeline();

  SessionPipeline(const SessionPipeline&) = delete;
  SessionPipeline& operator=(const SessionPipeline&) = delete;

  // Thread-safe media input.
  void push_audio(std::span<const std::uint8_t> pcm_bytes);
  void push_frame(ingest::RawFrame frame);
  // No more media will arrive; open segments and partial clips are flushed.
  void end_of_stream();

  // True when every queue, channel and stage buffer is empty and nothing
  // is scheduled.
  bool quiescent() const;
  std::optional<std::int64_t> next_wake_ms() const;

  std::vector<Stage*> stages();
  gateway::OutboundMux& outbound() { return *mux_; }
  memory::MemoryBank& bank() { return *bank_; }
  Wakeup& wakeup() { return wake_; }
  QueueDepths depths() const;
  const std::string& session_id() const noexcept { return session_; }
  const backends::RuntimeConfig& config() const noexcept { return cfg_; }
  std::uint64_t generation() const { return generation_.current(); }

  struct Impl;

 private:
  std::string session_;
  backends::RuntimeConfig cfg_;
  backends::BackendSet backends_;
  const Clock& clock_;
  PipelineObserver* observer_;
  Wakeup wake_;
  GenerationCounter generation_;
  ControlChannel<Interrupt> interrupts_to_gateway_;
  ControlChannel<Interrupt> interrupts_to_tts_;
  ControlChannel<Backup> backups_;
  std::unique_ptr<gateway::OutboundMux> mux_;
  std::unique_ptr<memory::MemoryBank> bank_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ol::pipeline
