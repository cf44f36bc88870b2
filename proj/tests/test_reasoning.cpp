#include <doctest.h>

#include "ol/backends/reference.hpp"
#include "ol/backends/text.hpp"
#include "ol/common/error.hpp"
#include "ol/reasoning/reasoning.hpp"
#include "support.hpp"

using namespace ol;
using namespace ol::reasoning;

namespace {

memory::RetrievalHit hit(std::size_t clip, std::vector<std::int64_t> frame_times, std::size_t rows, std::size_t cols) {
  auto rec = std::make_shared<memory::ClipRecord>();
  rec->clip_index = clip;
  for (std::size_t i = 0; i < frame_times.size(); ++i) rec->frame_refs.push_back({i, frame_times[i]});
  rec->short_term = std::make_shared<Matrix>(rows, cols);
  return {clip, 1.0, 1.0, rec};
}

class FailingGate final : public backends::GateBackend {
 public:
  GateDecision predict(std::string_view) override { throw BackendError(BackendError::Kind::Unavailable, "down"); }
};

class FailingTts final : public backends::TtsBackend {
 public:
  std::vector<std::int16_t> synthesize(std::string_view) override {
    throw BackendError(BackendError::Kind::Unavailable, "down");
  }
};

}  // namespace

TEST_SUITE("reasoning") {
  TEST_CASE("gate examples") {
    backends::ReferenceGate gate;
    CHECK(predict_instruction("ok...", gate) == GateDecision{Verdict::Ignore, "filler"});
    CHECK(predict_instruction("enn...", gate) == GateDecision{Verdict::Ignore, "filler"});
    CHECK(predict_instruction("How about the weather today?", gate) == GateDecision{Verdict::Answer, "question"});
    CHECK(predict_instruction("", gate) == GateDecision{Verdict::Ignore, "non-linguistic"});
    CHECK(predict_instruction("Turn toward the window", gate).verdict == Verdict::Answer);
  }

  TEST_CASE("every lexicon entry is ignored, alone or doubled") {
    backends::ReferenceGate gate;
    for (const auto& w : backends::default_filler_lexicon()) {
      CHECK(predict_instruction(w, gate).verdict == Verdict::Ignore);
      CHECK(predict_instruction(w + "... " + w + ".", gate).verdict == Verdict::Ignore);
    }
  }

  TEST_CASE("gate fails closed") {
    FailingGate gate;
    CHECK(predict_instruction("What is this?", gate) == GateDecision{Verdict::Ignore, "error"});
  }

  TEST_CASE("one-clip prompt matches the golden file") {
    memory::RetrievalResult r;
    r.hits.push_back(hit(3, {12000, 13000, 14000, 15000}, 8, 64));
    const auto p = build_prompt("What is this", r);
    CHECK(p.text == test::read_file(test::source_dir() / "golden/prompt_one_clip.txt"));
    REQUIRE(p.clips.size() == 1);
    CHECK(p.clips[0].clip_index == 3);
  }

  TEST_CASE("two-clip prompt keeps rank order") {
    memory::RetrievalResult r;
    r.hits.push_back(hit(1, {4000, 7000}, 8, 64));
    r.hits.push_back(hit(0, {0, 3000}, 8, 64));
    const auto p = build_prompt("How about the weather today?", r);
    CHECK(p.text == test::read_file(test::source_dir() / "golden/prompt_two_clips.txt"));
  }

  TEST_CASE("cold-start prompt drops the image and memory lines") {
    memory::RetrievalResult r;
    r.no_memory = true;
    const auto p = build_prompt("What is this", r);
    CHECK(p.text == test::read_file(test::source_dir() / "golden/prompt_cold_start.txt"));
  }

  TEST_CASE("placeholders inside the question are not expanded") {
    memory::RetrievalResult r;
    r.hits.push_back(hit(0, {0}, 1, 2));
    const auto p = build_prompt("what is <|Img|>", r);
    CHECK(p.text.find("Question: what is <|Img|>,\n") == 0);
  }

  TEST_CASE("reference reasoner answer template") {
    memory::RetrievalResult r;
    r.hits.push_back(hit(3, {0}, 1, 2));
    const auto p = build_prompt("what is this", r);
    backends::ReferenceReasoner reasoner;
    std::string streamed;
    const auto out = generate_answer(p, reasoner, [&](std::string_view s) { streamed += s; });
    CHECK(out.text == "Answering 'what is this' using clips [3].");
    CHECK(streamed == out.text);
    CHECK(generate_answer(p, reasoner).text == out.text);
  }

  TEST_CASE("generation can be stopped early") {
    memory::RetrievalResult r;
    const auto p = build_prompt("what is this", r);
    backends::ReferenceReasoner reasoner;
    int n = 0;
    const auto out = generate_answer(p, reasoner, {}, [&] { return ++n < 2; });
    CHECK(out.cancelled);
    CHECK(out.text.size() < backends::ReferenceReasoner::answer_for(p).size());
  }

  TEST_CASE("sentence splitter") {
    SentenceSplitter s;
    std::vector<std::string> got;
    for (const char* inc : {"It may", " rain. Take", " the umbrella!", " Really?", " Yes"}) {
      for (auto& x : s.feed(inc)) got.push_back(x);
    }
    if (auto rest = s.finish()) got.push_back(*rest);
    CHECK(got == std::vector<std::string>{"It may rain.", "Take the umbrella!", "Really?", "Yes"});

    SentenceSplitter whole(true);
    CHECK(whole.feed("One. Two.").empty());
    CHECK(whole.finish() == "One. Two.");
  }

  TEST_CASE("reference TTS gives five 16 ms chunks per character") {
    backends::ReferenceTts tts;
    for (const std::string text : {"a", "Hello.", "The mug is blue.", "héllo"}) {
      const auto chunks = synthesize_chunks(text, tts);
      const auto n = backends::utf8_length(text);
      CHECK(chunks.size() == (n * 80 + 15) / 16);
      for (const auto& c : chunks) CHECK(c.size() == 256);
    }
    CHECK(synthesize_chunks("", tts).empty());
  }

  TEST_CASE("dispatcher drops stale generations and restarts seq per generation") {
    backends::ReferenceTts tts;
    TtsDispatcher d;
    CHECK(d.enqueue("Hello there.", 1, 0, tts, 0) == 60);
    auto first = d.release(0, 200);
    REQUIRE(!first.empty());
    for (std::size_t i = 0; i < first.size(); ++i) {
      CHECK(first[i].seq == i);
      CHECK(first[i].generation == 1);
    }
    CHECK(d.on_interrupt(2) == 60 - first.size());
    CHECK(d.on_interrupt(2) == 0);
    CHECK(d.enqueue("Old.", 1, 0, tts, 0) == 0);
    CHECK(d.enqueue("New.", 2, 1, tts, 500) == 20);
    const auto next = d.release(100000, 200);
    REQUIRE(next.size() == 20);
    for (std::size_t i = 0; i < next.size(); ++i) {
      CHECK(next[i].generation == 2);
      CHECK(next[i].seq == i);
    }
  }

  TEST_CASE("TTS failure surfaces as an error") {
    FailingTts tts;
    CHECK_THROWS_AS(synthesize_chunks("hi", tts), BackendError);
  }
}
