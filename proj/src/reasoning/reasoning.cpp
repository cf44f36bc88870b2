#include "ol/reasoning/reasoning.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "ol/common/error.hpp"
#include "ol/prompt_template.hpp"

namespace ol::reasoning {

GateDecision predict_instruction(std::string_view transcript, backends::GateBackend& backend) {
  try {
    return backend.predict(transcript);
  } catch (const std::exception& e) {
    spdlog::warn("gate backend failed, ignoring transcript: {}", e.what());
    return {Verdict::Ignore, "error"};
  }
}

std::string_view prompt_template() { return detail::kPromptTemplateV1; }

namespace {

constexpr std::string_view kQue = "<|Que|>";
constexpr std::string_view kImg = "<|Img|>";
constexpr std::string_view kMem = "<|Mem|>";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string render_images(const std::vector<PromptClip>& clips) {
  std::string out;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (i) out += ' ';
    out += "[clip " + std::to_string(clips[i].clip_index) + ":";
    for (const auto& f : clips[i].frames) out += " <img t=" + std::to_string(f.t_ms) + ">";
    out += "]";
  }
  return out;
}

std::string render_memories(const std::vector<PromptClip>& clips) {
  std::string out;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (i) out += ' ';
    const auto& h = *clips[i].short_term;
    out += "[clip " + std::to_string(clips[i].clip_index) + ": <mem " + std::to_string(h.rows()) + "x" +
           std::to_string(h.cols()) + ">]";
  }
  return out;
}

}  // namespace

AssembledPrompt build_prompt(std::string_view question, const memory::RetrievalResult& retrieved,
                             std::string_view tmpl) {
  AssembledPrompt prompt;
  prompt.question = std::string(question);
  for (const auto& hit : retrieved.hits) {
    prompt.clips.push_back({hit.clip_index, hit.record->frame_refs, hit.record->short_term});
  }

  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t nl = tmpl.find('\n', pos);
    if (nl == std::string_view::npos) nl = tmpl.size();
    lines.emplace_back(tmpl.substr(pos, nl - pos));
    pos = nl + 1;
  }
  const bool cold = prompt.clips.empty();
  if (cold) {
    std::erase_if(lines, [](const std::string& l) {
      return l.find(kImg) != std::string::npos || l.find(kMem) != std::string::npos;
    });
    if (!lines.empty()) {
      auto& last = lines.back();
      while (!last.empty() && (last.back() == ',' || last.back() == ';' || last.back() == ' ')) last.pop_back();
    }
  }
  std::string text;
  for (const auto& l : lines) text += l + '\n';

  // Bind the question last so its own text is never re-scanned for markers.
  if (!cold) {
    replace_all(text, kImg, render_images(prompt.clips));
    replace_all(text, kMem, render_memories(prompt.clips));
  }
  const std::size_t q = text.find(kQue);
  if (q != std::string::npos) text.replace(q, kQue.size(), question);
  prompt.text = std::move(text);
  return prompt;
}

std::vector<std::string> SentenceSplitter::feed(std::string_view increment) {
  buffer_ += increment;
  std::vector<std::string> out;
  if (whole_answer_) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    const char c = buffer_[i];
    if (c == '.' || c == '!' || c == '?' || c == ';') {
      // Keep runs like "..." or "?!" with their sentence.
      std::size_t end = i + 1;
      while (end < buffer_.size() && (buffer_[end] == '.' || buffer_[end] == '!' || buffer_[end] == '?')) ++end;
      if (end == buffer_.size()) break;  // more punctuation may follow
      std::string sentence = buffer_.substr(start, end - start);
      const auto first = sentence.find_first_not_of(' ');
      if (first != std::string::npos) out.push_back(sentence.substr(first));
      start = end;
      i = end - 1;
    }
  }
  buffer_.erase(0, start);
  return out;
}

std::optional<std::string> SentenceSplitter::finish() {
  const auto first = buffer_.find_first_not_of(' ');
  std::optional<std::string> out;
  if (first != std::string::npos) out = buffer_.substr(first);
  buffer_.clear();
  return out;
}

GenerationOutcome generate_answer(const AssembledPrompt& prompt, backends::ReasonerBackend& backend,
                                  const std::function<void(std::string_view)>& on_increment,
                                  const std::function<bool()>& keep_going) {
  GenerationOutcome out;
  try {
    backend.generate(prompt, [&](std::string_view inc) {
      if (keep_going && !keep_going()) {
        out.cancelled = true;
        return false;
      }
      out.text += inc;
      out.increments.emplace_back(inc);
      if (on_increment) on_increment(inc);
      return true;
    });
  } catch (const std::exception& e) {
    out.error = true;
    out.error_message = e.what();
    spdlog::warn("reasoner failed after {} bytes: {}", out.text.size(), e.what());
  }
  return out;
}

std::vector<std::vector<std::int16_t>> synthesize_chunks(std::string_view text, backends::TtsBackend& backend) {
  std::vector<std::vector<std::int16_t>> out;
  if (text.empty()) return out;
  const auto pcm = backend.synthesize(text);
  constexpr std::size_t kChunk = 256;
  for (std::size_t i = 0; i < pcm.size(); i += kChunk) {
    const std::size_t n = std::min(kChunk, pcm.size() - i);
    out.emplace_back(pcm.begin() + static_cast<std::ptrdiff_t>(i), pcm.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return out;
}

std::size_t TtsDispatcher::enqueue(std::string_view text, std::uint64_t generation, std::uint64_t answer_id,
                                   backends::TtsBackend& backend, std::int64_t now_ms) {
  if (generation < floor_) return 0;
  auto chunks = synthesize_chunks(text, backend);
  if (generation != seq_generation_) {
    seq_generation_ = generation;
    next_seq_ = 0;
  }
  std::int64_t t = std::max(next_play_ms_, now_ms);
  for (auto& samples : chunks) {
    const auto dur = static_cast<std::int64_t>(samples.size()) * 1000 / 16000;
    pending_.push_back({generation, next_seq_++, t, answer_id, std::move(samples)});
    t += dur;
  }
  next_play_ms_ = t;
  return chunks.size();
}

std::size_t TtsDispatcher::on_interrupt(std::uint64_t generation) {
  if (generation <= floor_) return 0;
  floor_ = generation;
  const std::size_t before = pending_.size();
  std::erase_if(pending_, [&](const OutAudioChunk& c) { return c.generation < floor_; });
  next_play_ms_ = 0;
  return before - pending_.size();
}

std::vector<OutAudioChunk> TtsDispatcher::release(std::int64_t now_ms, std::int64_t lead_ms) {
  std::vector<OutAudioChunk> out;
  while (!pending_.empty() && pending_.front().t_ms - lead_ms <= now_ms) {
    if (pending_.front().generation >= floor_) out.push_back(std::move(pending_.front()));
    pending_.pop_front();
  }
  return out;
}

std::optional<std::int64_t> TtsDispatcher::next_release_ms(std::int64_t lead_ms) const {
  if (pending_.empty()) return std::nullopt;
  return pending_.front().t_ms - lead_ms;
}

}  // namespace ol::reasoning
