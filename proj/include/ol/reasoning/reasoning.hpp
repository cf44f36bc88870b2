#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ol/backends/contracts.hpp"
#include "ol/memory/memory.hpp"
#include "ol/reasoning/types.hpp"

namespace ol::reasoning {

// Fail-closed: a backend error yields Ignore("error").
GateDecision predict_instruction(std::string_view transcript, backends::GateBackend& backend);

// The versioned prompt template. Placeholders: <|Que|>, <|Img|>, <|Mem|>.
std::string_view prompt_template();

// Instantiates the template. With no retrieved clips, the lines carrying
// <|Img|> and <|Mem|> are omitted and the question line loses its trailing
// separator.
AssembledPrompt build_prompt(std::string_view question, const memory::RetrievalResult& retrieved,
                             std::string_view tmpl = prompt_template());

// Splits streamed text at sentence boundaries (. ! ? ;).
class SentenceSplitter {
 public:
  explicit SentenceSplitter(bool whole_answer = false) : whole_answer_(whole_answer) {}
  std::vector<std::string> feed(std::string_view increment);
  std::optional<std::string> finish();

 private:
  bool whole_answer_;
  std::string buffer_;
};

struct GenerationOutcome {
  std::string text;
  std::vector<std::string> increments;
  bool cancelled = false;
  bool error = false;
  std::string error_message;
};

// Runs the reasoner, forwarding each increment to `on_increment`. A false
// return from `keep_going` stops generation. Backend failures keep whatever
// text was produced and set `error`.
GenerationOutcome generate_answer(const AssembledPrompt& prompt, backends::ReasonerBackend& backend,
                                  const std::function<void(std::string_view)>& on_increment = {},
                                  const std::function<bool()>& keep_going = {});

struct OutAudioChunk {
  std::uint64_t generation = 0;
  std::uint32_t seq = 0;  // restarts at 0 for each generation
  std::int64_t t_ms = 0;
  std::uint64_t answer_id = 0;
  std::vector<std::int16_t> samples;
};

// Slices synthesized PCM into 16 ms chunks.
std::vector<std::vector<std::int16_t>> synthesize_chunks(std::string_view text, backends::TtsBackend& backend);

// Outbound audio for one session. Tracks per-generation seq numbers and drops
// everything older than the newest generation it has been told about.
class TtsDispatcher {
 public:
  // Queues the synthesized text; returns the number of chunks queued, or 0
  // if `generation` is already stale.
  std::size_t enqueue(std::string_view text, std::uint64_t generation, std::uint64_t answer_id,
                      backends::TtsBackend& backend, std::int64_t now_ms);

  // Raises the generation floor; pending chunks below it are discarded.
  // Returns the number discarded. Idempotent.
  std::size_t on_interrupt(std::uint64_t generation);

  // Releases chunks whose play time minus `lead_ms` has arrived.
  std::vector<OutAudioChunk> release(std::int64_t now_ms, std::int64_t lead_ms);

  // Earliest time a pending chunk becomes releasable.
  std::optional<std::int64_t> next_release_ms(std::int64_t lead_ms) const;

  std::size_t pending() const noexcept { return pending_.size(); }
  std::uint64_t floor() const noexcept { return floor_; }

 private:
  std::deque<OutAudioChunk> pending_;
  std::uint64_t floor_ = 0;
  std::uint64_t seq_generation_ = 0;
  std::uint32_t next_seq_ = 0;
  std::int64_t next_play_ms_ = 0;
};

}  // namespace ol::reasoning
