#include "ol/pipeline/pipeline.hpp"

#include <spdlog/spdlog.h>

#include "ol/common/error.hpp"

namespace ol::pipeline {

using gateway::make_message;
using gateway::status_message;

nlohmann::json QueueDepths::to_json() const {
  return {{"audio", audio},
          {"frame", frame},
          {"asr_todo", asr_todo},
          {"llm_todo", llm_todo},
          {"tts_todo", tts_todo},
          {"outbound_audio", outbound_audio},
          {"high_water",
           {{"audio", audio_hw},
            {"frame", frame_hw},
            {"asr_todo", asr_todo_hw},
            {"llm_todo", llm_todo_hw},
            {"tts_todo", tts_todo_hw},
            {"outbound_audio", outbound_hw}}},
          {"frames_dropped", frames_dropped},
          {"outbound_dropped", outbound_dropped}};
}

struct SessionPipeline::Impl {
  using Block = ingest::OverflowPolicy;

  explicit Impl(SessionPipeline& p)
      : p(p),
        chunker(p.session_),
        audio_q(p.cfg_.queues.audio, Block::Block, &p.wake_),
        vad(p.cfg_.vad),
        asr_q(p.cfg_.queues.asr_todo, Block::Block, &p.wake_),
        llm_q(p.cfg_.queues.llm_todo, Block::Block, &p.wake_),
        tts_q(p.cfg_.queues.tts_todo, Block::Block, &p.wake_),
        sampler(p.cfg_.video),
        frame_q(p.cfg_.queues.frame, Block::DropOldest, &p.wake_),
        assembler(p.cfg_.profile),
        reader(*this),
        vad_stage(*this),
        asr_stage(*this),
        sampler_stage(*this),
        memory_stage(*this),
        llm_stage(*this),
        tts_stage(*this) {}

  SessionPipeline& p;

  // Media inboxes, filled by the transport thread.
  mutable std::mutex inbox_mu;
  std::deque<std::vector<std::uint8_t>> audio_inbox;
  std::deque<ingest::RawFrame> frame_inbox;
  std::atomic<bool> eos{false};

  ingest::AudioChunker chunker;
  std::optional<ingest::AudioChunk> pending_chunk;
  bool chunker_finished = false;
  std::atomic<bool> reader_done{false};
  ingest::BoundedQueue<ingest::AudioChunk> audio_q;

  vad::EnergyVad vad;
  std::deque<vad::VoiceSegment> pending_segments;
  std::atomic<bool> vad_done{false};
  ingest::BoundedQueue<vad::VoiceSegment> asr_q;

  std::optional<LlmItem> pending_llm;
  ingest::BoundedQueue<LlmItem> llm_q;

  std::deque<TtsItem> tts_overflow;
  ingest::BoundedQueue<TtsItem> tts_q;
  reasoning::TtsDispatcher dispatcher;
  mutable std::mutex dispatcher_mu;

  ingest::FrameSampler sampler;
  std::deque<ingest::RawFrame> sampled;
  std::atomic<bool> sampler_done{false};
  ingest::BoundedQueue<ingest::RawFrame> frame_q;

  perception::ClipAssembler assembler;
  std::atomic<bool> memory_done{false};

  double fine_now() const {
    if (const auto* steady = dynamic_cast<const SteadyClock*>(&p.clock_)) return steady->now_ms_fine();
    return static_cast<double>(p.clock_.now_ms());
  }

  void status(const std::string& level, const std::string& code, const std::string& detail,
              nlohmann::json extra = nlohmann::json::object()) {
    if (p.observer_) p.observer_->on_status(code, detail);
    p.mux_->post_event(status_message(p.session_, level, code, detail, std::move(extra)));
  }

  struct Reader final : Stage {
    explicit Reader(Impl& m) : m(m) {}
    const char* name() const override { return "audio_reader"; }
    bool step() override {
      if (m.pending_chunk) {
        if (!m.audio_q.try_push(*m.pending_chunk)) return false;
        m.pending_chunk.reset();
        if (m.chunker_finished) {
          m.reader_done = true;
          m.p.wake_.notify();
        }
        return true;
      }
      if (auto c = m.chunker.next()) {
        m.pending_chunk = std::move(c);
        return true;
      }
      std::vector<std::uint8_t> bytes;
      {
        std::lock_guard lock(m.inbox_mu);
        if (!m.audio_inbox.empty()) {
          bytes = std::move(m.audio_inbox.front());
          m.audio_inbox.pop_front();
        }
      }
      if (!bytes.empty()) {
        m.chunker.feed(bytes);
        return true;
      }
      if (m.eos && !m.chunker_finished) {
        bool inbox_empty;
        {
          std::lock_guard lock(m.inbox_mu);
          inbox_empty = m.audio_inbox.empty();
        }
        if (!inbox_empty) return true;
        try {
          if (auto last = m.chunker.finish()) m.pending_chunk = std::move(last);
        } catch (const MalformedStream& e) {
          m.status("error", "malformed_audio", e.what(), {{"offset", e.offset()}});
        }
        m.chunker_finished = true;
        if (!m.pending_chunk) {
          m.reader_done = true;
          m.p.wake_.notify();
        }
        return true;
      }
      return false;
    }
    Impl& m;
  };

  struct VadStage final : Stage {
    explicit VadStage(Impl& m) : m(m) {}
    const char* name() const override { return "vad"; }

    void handle(std::vector<vad::VadEvent> events) {
      for (auto& ev : events) {
        if (const auto* start = std::get_if<vad::VoiceStart>(&ev)) {
          const auto interrupt = vad::on_voice_start(start->t_ms, m.p.generation_, m.p.interrupts_to_gateway_,
                                                     m.p.backups_);
          m.p.interrupts_to_tts_.send(interrupt);
          m.p.mux_->notify();
          if (m.p.observer_) m.p.observer_->on_voice_start(start->t_ms, interrupt.generation);
        } else {
          auto& seg = std::get<vad::VoiceEnd>(ev).segment;
          if (m.p.observer_) m.p.observer_->on_voice_end(seg);
          m.pending_segments.push_back(std::move(seg));
        }
      }
    }

    bool step() override {
      if (!m.pending_segments.empty()) {
        if (!m.asr_q.try_push(m.pending_segments.front())) return false;
        m.pending_segments.pop_front();
        return true;
      }
      if (auto chunk = m.audio_q.try_pop()) {
        try {
          handle(m.vad.process(*chunk));
        } catch (const SequencingError& e) {
          m.status("error", "audio_sequence", e.what());
        }
        return true;
      }
      if (m.reader_done && m.audio_q.empty() && !m.vad_done) {
        handle(m.vad.flush());
        m.vad_done = true;
        m.p.wake_.notify();
        return true;
      }
      return false;
    }
    Impl& m;
  };

  struct AsrStage final : Stage {
    explicit AsrStage(Impl& m) : m(m) {}
    const char* name() const override { return "asr"; }
    bool step() override {
      if (m.pending_llm) {
        if (!m.llm_q.try_push(*m.pending_llm)) return false;
        m.pending_llm.reset();
        return true;
      }
      auto seg = m.asr_q.try_pop();
      if (!seg) return false;
      auto result = perception::classify_and_transcribe(*seg, *m.p.backends_.asr);
      if (m.p.observer_) m.p.observer_->on_transcript(result);
      m.p.mux_->post_event(make_message("transcript", m.p.session_,
                                        {{"segment_id", result.segment_id},
                                         {"t_start_ms", result.t_start_ms},
                                         {"t_end_ms", result.t_end_ms},
                                         {"class", result.sound_class},
                                         {"text", result.transcript}}));
      if (result.sound_class == perception::kErrorClass) {
        m.status("error", "asr_failed", "speech recognition failed for segment " + std::to_string(result.segment_id));
      } else if (result.is_speech()) {
        m.pending_llm = LlmItem{result.segment_id, result.t_start_ms, result.t_end_ms, result.transcript};
      }
      return true;
    }
    Impl& m;
  };

  struct SamplerStage final : Stage {
    explicit SamplerStage(Impl& m) : m(m) {}
    const char* name() const override { return "frame_sampler"; }
    bool step() override {
      if (!m.sampled.empty()) {
        auto r = m.frame_q.try_push(m.sampled.front());
        (void)r;  // DropOldest never refuses
        m.sampled.pop_front();
        return true;
      }
      std::optional<ingest::RawFrame> frame;
      {
        std::lock_guard lock(m.inbox_mu);
        if (!m.frame_inbox.empty()) {
          frame = std::move(m.frame_inbox.front());
          m.frame_inbox.pop_front();
        }
      }
      if (frame) {
        for (auto& out : m.sampler.offer(std::move(*frame))) {
          if (auto* f = std::get_if<ingest::RawFrame>(&out)) {
            m.sampled.push_back(std::move(*f));
          } else {
            const auto& stall = std::get<ingest::StreamStalled>(out);
            m.status("warn", "video_stalled", "no frames between the given times",
                     {{"last_frame_ms", stall.last_frame_ms}, {"resumed_ms", stall.resumed_ms}});
          }
        }
        return true;
      }
      if (m.eos && !m.sampler_done) {
        std::lock_guard lock(m.inbox_mu);
        if (!m.frame_inbox.empty()) return true;
        m.sampler_done = true;
        m.p.wake_.notify();
        return true;
      }
      return false;
    }
    Impl& m;
  };

  struct MemoryStage final : Stage {
    explicit MemoryStage(Impl& m) : m(m) {}
    const char* name() const override { return "memory"; }

    void ingest(perception::ClipFeatures clip) {
      auto rec = m.p.bank_->ingest(std::move(clip));
      if (rec->degraded) m.status("warn", "compressor_degraded", "clip stored with fallback memories");
      if (m.p.observer_) m.p.observer_->on_clip(*rec);
    }

    bool step() override {
      // Control before data: a snapshot covers exactly the clips finished by
      // the backup time and nothing ingested afterwards.
      if (auto b = m.p.backups_.try_receive()) {
        auto snap = m.p.bank_->snapshot(b->t_ms);
        if (m.p.observer_) m.p.observer_->on_snapshot(*snap);
        m.p.wake_.notify();
        return true;
      }
      if (auto frame = m.frame_q.try_pop()) {
        auto features = perception::extract_frame_features(*frame, *m.p.backends_.frame_encoder, m.p.cfg_.profile);
        if (!features) {
          m.status("error", "frame_decode", "frame " + std::to_string(frame->seq) + " could not be decoded");
          return true;
        }
        try {
          if (auto clip = m.assembler.add(std::move(*features))) ingest(std::move(*clip));
        } catch (const ProfileMismatch& e) {
          m.status("error", "profile_mismatch", e.what());
        }
        return true;
      }
      if (m.sampler_done && m.frame_q.empty() && !m.memory_done) {
        if (auto clip = m.assembler.flush()) ingest(std::move(*clip));
        m.memory_done = true;
        return true;
      }
      return false;
    }
    Impl& m;
  };

  struct LlmStage final : Stage {
    explicit LlmStage(Impl& m) : m(m) {}
    const char* name() const override { return "llm"; }

    void to_tts(TtsItem item) {
      if (item.text.empty()) return;
      if (!m.tts_overflow.empty() || !m.tts_q.try_push(item)) m.tts_overflow.push_back(std::move(item));
    }

    void answer(const LlmItem& item) {
      const double t0 = m.fine_now();
      const auto decision = reasoning::predict_instruction(item.transcript, *m.p.backends_.gate);
      const double t_gate = m.fine_now();
      if (m.p.observer_) m.p.observer_->on_gate(item.segment_id, item.transcript, decision);
      if (decision.verdict == reasoning::Verdict::Ignore) {
        m.status("info", "ignored", "transcript is not an instruction",
                 {{"segment_id", item.segment_id}, {"reason", decision.reason}});
        return;
      }

      const auto& cfg = m.p.cfg_;
      auto snapshot = m.p.bank_->restore_for_grounding(item.t_start_ms);
      memory::RetrievalResult retrieved;
      retrieved.no_memory = true;
      try {
        const Matrix long_term = snapshot->long_term ? *snapshot->long_term : Matrix();
        const auto q = memory::encode_question(long_term, item.transcript, cfg.profile.channels,
                                               *m.p.backends_.compressor);
        retrieved = memory::retrieve(q, *snapshot, cfg.memory.top_k, cfg.memory.recency_lambda);
      } catch (const std::exception& e) {
        m.status("warn", "retrieval_failed", e.what(), {{"segment_id", item.segment_id}});
      }
      const double t_retrieve = m.fine_now();
      if (m.p.observer_) m.p.observer_->on_retrieval(item.segment_id, item.transcript, *snapshot, retrieved);

      const auto prompt = reasoning::build_prompt(item.transcript, retrieved);
      const std::uint64_t generation = m.p.generation_.current();
      reasoning::SentenceSplitter splitter(!cfg.reasoning.sentence_streaming);
      auto outcome = reasoning::generate_answer(
          prompt, *m.p.backends_.reasoner,
          [&](std::string_view inc) {
            for (auto& s : splitter.feed(inc)) to_tts({item.segment_id, generation, std::move(s)});
          },
          [&] { return !cfg.reasoning.cancel_llm_on_voice_start || m.p.generation_.current() == generation; });
      if (!outcome.cancelled) {
        if (auto rest = splitter.finish()) to_tts({item.segment_id, generation, std::move(*rest)});
      }
      const double t_done = m.fine_now();

      reasoning::AnswerEvent ev;
      ev.session_id = m.p.session_;
      ev.segment_id = item.segment_id;
      ev.generation = generation;
      ev.question = item.transcript;
      ev.answer = outcome.text;
      for (const auto& c : prompt.clips) ev.grounded_clips.push_back(c.clip_index);
      ev.cancelled = outcome.cancelled;
      ev.error = outcome.error;
      ev.gate_ms = t_gate - t0;
      ev.retrieve_ms = t_retrieve - t_gate;
      ev.generate_ms = t_done - t_retrieve;
      if (m.p.observer_) m.p.observer_->on_answer(ev);
      m.p.mux_->post_event(make_message("answer", m.p.session_,
                                        {{"segment_id", ev.segment_id},
                                         {"generation", ev.generation},
                                         {"question", ev.question},
                                         {"text", ev.answer},
                                         {"clips", ev.grounded_clips},
                                         {"cancelled", ev.cancelled}}));
      if (outcome.error) {
        m.status("error", "reasoner_failed", outcome.error_message, {{"segment_id", item.segment_id}});
      }
    }

    bool step() override {
      bool progressed = false;
      while (!m.tts_overflow.empty()) {
        if (!m.tts_q.try_push(m.tts_overflow.front())) return progressed;
        m.tts_overflow.pop_front();
        progressed = true;
      }
      // Grounding needs the snapshot for this utterance's onset; let the
      // memory worker take any pending backup first.
      if (!m.p.backups_.empty()) return progressed;
      auto item = m.llm_q.try_pop();
      if (!item) return progressed;
      answer(*item);
      return true;
    }
    Impl& m;
  };

  struct TtsStage final : Stage {
    explicit TtsStage(Impl& m) : m(m) {}
    const char* name() const override { return "tts"; }
    bool step() override {
      bool progressed = false;
      const auto now = m.p.clock_.now_ms();
      const auto lead = m.p.cfg_.tts.lead_ms;
      std::lock_guard lock(m.dispatcher_mu);
      while (auto i = m.p.interrupts_to_tts_.try_receive()) {
        m.dispatcher.on_interrupt(i->generation);
        progressed = true;
      }
      if (auto item = m.tts_q.try_pop()) {
        progressed = true;
        try {
          const auto n = m.dispatcher.enqueue(item->text, item->generation, item->answer_id, *m.p.backends_.tts, now);
          if (m.p.observer_) m.p.observer_->on_tts_queued(item->answer_id, item->generation, n);
        } catch (const std::exception& e) {
          m.status("error", "tts_failed", e.what(), {{"segment_id", item->answer_id}});
        }
      }
      for (auto& chunk : m.dispatcher.release(now, lead)) {
        m.p.mux_->post_audio(std::move(chunk));
        progressed = true;
      }
      return progressed;
    }
    std::optional<std::int64_t> next_wake_ms() const override {
      std::lock_guard lock(m.dispatcher_mu);
      return m.dispatcher.next_release_ms(m.p.cfg_.tts.lead_ms);
    }
    Impl& m;
  };

  Reader reader;
  VadStage vad_stage;
  AsrStage asr_stage;
  SamplerStage sampler_stage;
  MemoryStage memory_stage;
  LlmStage llm_stage;
  TtsStage tts_stage;
};

SessionPipeline::SessionPipeline(std::string session_id, backends::RuntimeConfig cfg, backends::BackendSet backends,
                                 const Clock& clock, PipelineObserver* observer)
    : session_(std::move(session_id)),
      cfg_(std::move(cfg)),
      backends_(std::move(backends)),
      clock_(clock),
      observer_(observer),
      interrupts_to_gateway_(&wake_),
      interrupts_to_tts_(&wake_),
      backups_(&wake_) {
  cfg_.validate();
  mux_ = std::make_unique<gateway::OutboundMux>(session_, cfg_.gateway.outbound_cap, interrupts_to_gateway_);
  bank_ = std::make_unique<memory::MemoryBank>(cfg_.memory, cfg_.profile, *backends_.compressor);
  impl_ = std::make_unique<Impl>(*this);
}

SessionPipeline::~SessionPipeline() = default;

void SessionPipeline::push_audio(std::span<const std::uint8_t> pcm_bytes) {
  if (pcm_bytes.empty()) return;
  {
    std::lock_guard lock(impl_->inbox_mu);
    impl_->audio_inbox.emplace_back(pcm_bytes.begin(), pcm_bytes.end());
  }
  wake_.notify();
}

void SessionPipeline::push_frame(ingest::RawFrame frame) {
  frame.session_id = session_;
  {
    std::lock_guard lock(impl_->inbox_mu);
    impl_->frame_inbox.push_back(std::move(frame));
  }
  wake_.notify();
}

void SessionPipeline::end_of_stream() {
  impl_->eos = true;
  wake_.notify();
}

std::vector<Stage*> SessionPipeline::stages() {
  auto& m = *impl_;
  return {&m.reader, &m.vad_stage, &m.asr_stage, &m.sampler_stage, &m.memory_stage, &m.llm_stage, &m.tts_stage};
}

std::optional<std::int64_t> SessionPipeline::next_wake_ms() const { return impl_->tts_stage.next_wake_ms(); }

// Reads worker-local state; call only while no worker thread is running.
bool SessionPipeline::quiescent() const {
  auto& m = *impl_;
  {
    std::lock_guard lock(m.inbox_mu);
    if (!m.audio_inbox.empty() || !m.frame_inbox.empty()) return false;
  }
  {
    std::lock_guard lock(m.dispatcher_mu);
    if (m.dispatcher.pending() > 0) return false;
  }
  return !m.pending_chunk && m.audio_q.empty() && m.pending_segments.empty() && m.asr_q.empty() &&
         !m.pending_llm && m.llm_q.empty() && m.tts_overflow.empty() && m.tts_q.empty() && m.sampled.empty() &&
         m.frame_q.empty() && backups_.empty() && interrupts_to_tts_.empty() && mux_->idle();
}

QueueDepths SessionPipeline::depths() const {
  const auto& m = *impl_;
  QueueDepths d;
  d.audio = m.audio_q.size();
  d.frame = m.frame_q.size();
  d.asr_todo = m.asr_q.size();
  d.llm_todo = m.llm_q.size();
  d.tts_todo = m.tts_q.size();
  d.outbound_audio = mux_->audio_pending();
  d.audio_hw = m.audio_q.high_water();
  d.frame_hw = m.frame_q.high_water();
  d.asr_todo_hw = m.asr_q.high_water();
  d.llm_todo_hw = m.llm_q.high_water();
  d.tts_todo_hw = m.tts_q.high_water();
  d.outbound_hw = mux_->audio_high_water();
  d.frames_dropped = m.frame_q.dropped();
  d.outbound_dropped = mux_->audio_dropped();
  return d;
}

}  // namespace ol::pipeline
