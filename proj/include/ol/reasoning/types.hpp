#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ol/common/matrix.hpp"
#include "ol/perception/types.hpp"

namespace ol::reasoning {

enum class Verdict { Answer, Ignore };

struct GateDecision {
  Verdict verdict = Verdict::Ignore;
  std::string reason;  // filler | non-linguistic | instruction | question | error
  bool operator==(const GateDecision&) const = default;
};

struct PromptClip {
  std::size_t clip_index = 0;
  std::vector<perception::FrameRef> frames;
  std::shared_ptr<const Matrix> short_term;
};

struct AssembledPrompt {
  std::string text;
  std::string question;
  std::vector<PromptClip> clips;  // rank order, matches the markers in `text`
};

struct AnswerEvent {
  std::string session_id;
  std::uint64_t segment_id = 0;
  std::uint64_t generation = 0;
  std::string question;
  std::string answer;
  std::vector<std::size_t> grounded_clips;
  bool cancelled = false;
  bool error = false;
  double gate_ms = 0.0;
  double retrieve_ms = 0.0;
  double generate_ms = 0.0;
};

}  // namespace ol::reasoning
