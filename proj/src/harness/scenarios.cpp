#include "ol/harness/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ol/backends/hashed_vector.hpp"
#include "ol/backends/reference.hpp"
#include "ol/backends/text.hpp"
#include "ol/common/error.hpp"
#include "ol/ingest/audio.hpp"

namespace ol::harness {

using nlohmann::json;

namespace {

constexpr std::int16_t kSpeechAmplitude = 8000;
constexpr std::size_t kSpeechHalfPeriod = 20;  // 400 Hz at 16 kHz
constexpr std::int64_t kSamplesPerMs = ingest::kSampleRate / 1000;

// Scenario feature profile: small enough to keep traces compact.
constexpr std::size_t kT = 4, kN = 4, kP = 2, kC = 64;

std::vector<std::int16_t> tone(std::int64_t duration_ms) {
  std::vector<std::int16_t> s(static_cast<std::size_t>(duration_ms * kSamplesPerMs));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = (i / kSpeechHalfPeriod) % 2 == 0 ? kSpeechAmplitude : -kSpeechAmplitude;
  return s;
}

// Cosine the reference compressor will see between q and a clip made of
// `frames`, after the float32 round trip of the trace format.
double stored_cosine(const Vector& q, const std::vector<Matrix>& frames) {
  Vector mean(q.size(), 0.0);
  std::size_t rows = 0;
  for (const auto& f : frames) {
    for (std::size_t r = 0; r < f.rows(); ++r, ++rows) {
      for (std::size_t c = 0; c < f.cols(); ++c) mean[c] += static_cast<double>(static_cast<float>(f(r, c)));
    }
  }
  for (auto& x : mean) x /= static_cast<double>(rows);
  return dot(q, normalized(mean));
}

std::string fixed(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  return s.str();
}

void profile_config(TraceBuilder& b, std::size_t T) {
  b.config("profile.T", T).config("profile.N", kN).config("profile.P", kP).config("profile.C", kC);
}

// Four-clip scene where clip `target` is built from the question's own
// direction and the others from unrelated hashed scene tokens.
Trace implicit_question(const std::string& name, const std::string& question, const std::string& object,
                        std::size_t target, const std::vector<std::string>& scenes, const std::string& answer_text) {
  TraceBuilder b(name);
  profile_config(b, kT);
  b.config("backends.reasoner.implementation", "wizard");
  const Vector q = reference_question_vector(question, kC);

  std::vector<double> cosines;
  std::int64_t t = 0;
  std::size_t frame_no = 0;
  for (std::size_t clip = 0; clip < scenes.size(); ++clip) {
    std::vector<Matrix> frames;
    for (std::size_t f = 0; f < kT; ++f, ++frame_no, t += 1000) {
      frames.push_back(clip == target ? repeated_rows(q, kN) : scene_rows(scenes[clip], frame_no, kN, kC));
      b.frame(t, frames.back());
    }
    cosines.push_back(stored_cosine(q, frames));
  }
  double runner_up = -1.0;
  for (std::size_t i = 0; i < cosines.size(); ++i) {
    if (i != target) runner_up = std::max(runner_up, cosines[i]);
  }
  if (!(cosines[target] > runner_up + 0.5)) throw Error("scenario " + name + " lost its retrieval margin");

  const std::int64_t ask = t + 1000;
  b.note("Clip " + std::to_string(target) + " shows the " + object +
         ". Every feature row of its frames equals the reference question vector of '" + question +
         "' (normalized mean of the hashed vectors of its tokens), so its global memory has cosine " +
         fixed(cosines[target]) + " with the question. The other clips are built from hashed tokens keyed " +
         "'scene:<name>:<frame>:<row>' and score at most " + fixed(runner_up) +
         ", so the object clip ranks first for any top_k.");
  b.speech(ask, 1200, question);
  b.answer(question, answer_text);
  b.query(question, {target});
  b.silence_until(ask + 2000);
  b.expect(ask, {{"type", "retrieved_top1"}, {"question", question}, {"clip", target}});
  b.expect(ask, {{"type", "retrieved_contains"}, {"question", question}, {"clip", target}});
  b.expect(ask, {{"type", "answer_equals"}, {"question", question}, {"answer", answer_text}});
  return b.build();
}

Trace weather() {
  return implicit_question("weather", "How about the weather today?", "umbrella by the door", 1,
                           {"street", "umbrella", "kitchen", "desk"}, "It may rain, so take the umbrella by the door.");
}

Trace sandwich() {
  return implicit_question("sandwich", "Where can I heat my sandwiches?", "microwave on the counter", 2,
                           {"hallway", "bookshelf", "microwave", "window"},
                           "The microwave on the kitchen counter can heat them.");
}

Trace whatisthis() {
  const std::string question = "What is this";
  TraceBuilder b("whatisthis");
  profile_config(b, kT);
  b.config("memory.recency_lambda", 10.0);
  const std::vector<std::string> scenes = {"garden", "garage", "sofa", "mug"};
  const Vector q = reference_question_vector(question, kC);
  std::int64_t t = 0;
  std::size_t frame_no = 0;
  double max_abs = 0.0;
  for (const auto& scene : scenes) {
    std::vector<Matrix> frames;
    for (std::size_t f = 0; f < kT; ++f, ++frame_no, t += 1000) {
      frames.push_back(scene_rows(scene, frame_no, kN, kC));
      b.frame(t, frames.back());
    }
    max_abs = std::max(max_abs, std::abs(stored_cosine(q, frames)));
  }
  const double gap = 10.0 / static_cast<double>(scenes.size() - 1);
  b.note("Recency bonus lambda = 10 over k = " + std::to_string(scenes.size()) +
         " clips adds 10*j/(k-1), so consecutive clips differ by " + fixed(gap) +
         " in bonus while every cosine lies within +-" + fixed(max_abs) +
         " (spread below 2). The latest clip (3) therefore ranks first.");
  const std::int64_t ask = t + 1000;
  b.speech(ask, 800, question);
  b.query(question, {scenes.size() - 1});
  b.silence_until(ask + 2000);
  b.expect(ask, {{"type", "retrieved_top1"}, {"question", question}, {"clip", scenes.size() - 1}});
  return b.build();
}

Trace barge_in() {
  const std::string first = "Can you describe what is happening in this room right now?";
  const std::string second = "Wait, what time is it?";
  TraceBuilder b("barge_in");
  profile_config(b, kT);
  std::size_t frame_no = 0;
  for (std::int64_t t = 0; t < 8000; t += 1000, ++frame_no) b.frame(t, scene_rows("room", frame_no, kN, kC));
  b.note("The first question gets the long reference answer (about 7 s of tone). The second utterance starts "
         "at 12000 ms while that answer is still playing; its onset must interrupt playback, and no audio "
         "of the first answer may reach the client after the interrupt.");
  b.speech(9000, 1000, first);
  b.speech(12000, 800, second);
  b.silence_until(14000);
  b.expect(12000, {{"type", "interrupt_by_ms"}, {"by_ms", 12100}});
  b.expect(12000, {{"type", "no_stale_audio"}});
  b.expect(12000, {{"type", "answer_count"}, {"count", 2}});
  return b.build();
}

Trace snapshot_isolation() {
  const std::string question = "What should I pick up from the table?";
  TraceBuilder b("snapshot_isolation");
  profile_config(b, 2);
  b.config("memory.top_k", 3);
  const Vector q = reference_question_vector(question, kC);
  // Clips end at 2000, 4000 and 6000 ms.
  for (std::size_t f = 0; f < 6; ++f) {
    const auto t = static_cast<std::int64_t>(f + 1) * 1000;
    b.frame(t, f >= 4 ? repeated_rows(q, kN) : scene_rows("table", f, kN, kC));
  }
  b.note("Speech starts at 4992 ms, the chunk boundary just before 5000 ms, so the Backup snapshot is taken at "
         "4992 ms and holds clips 0 and 1. Clip 2 (frames at 5000 and 6000 ms) is the question's own direction, "
         "the best possible match, but finishes at 6000 ms, after the Backup, and is ingested before the question "
         "is answered. Grounded retrieval must not see it.");
  b.speech(4992, 1600, question);
  b.query(question, {0, 1});
  b.silence_until(9000);
  b.expect(4992, {{"type", "retrieved_before_ms"}, {"question", question}, {"before_ms", 5000}});
  b.expect(4992, {{"type", "answer_count"}, {"count", 1}});
  return b.build();
}

Trace gate_filler() {
  TraceBuilder b("gate_filler");
  profile_config(b, kT);
  b.note("Backchannels and fillers only: every utterance must be ignored and produce no audio.");
  const std::vector<std::string> fillers = {"enn...", "ok...", "", "yeah", "mm-hmm", "uh huh", "okay", "right"};
  std::int64_t t = 1000;
  for (const auto& f : fillers) {
    b.speech(t, 600, f);
    t += 3000;
  }
  b.silence_until(t);
  b.expect(t, {{"type", "total_tts_frames"}, {"count", 0}});
  b.expect(t, {{"type", "no_answer"}});
  return b.build();
}

Trace gate_questions() {
  TraceBuilder b("gate_questions");
  profile_config(b, kT);
  b.config("backends.reasoner.implementation", "wizard");
  const std::vector<std::pair<std::string, std::string>> qa = {
      {"What color is the mug on the desk?", "The mug is blue."},
      {"Where did I leave my keys?", "Your keys are on the shelf."},
      {"Turn the lights toward the window", "Turning toward the window now."},
  };
  b.note("Each utterance is an answerable instruction. Each gets exactly one answer, and with the reference "
         "tone at 80 ms per character each single-sentence answer yields 5 frames of 16 ms per character.");
  std::int64_t t = 1000;
  std::size_t frames = 0;
  for (const auto& [q, a] : qa) {
    b.speech(t, 1000, q);
    b.answer(q, a);
    b.expect(t, {{"type", "answer_count"}, {"question", q}, {"count", 1}});
    b.expect(t, {{"type", "answer_equals"}, {"question", q}, {"answer", a}});
    frames += 5 * backends::utf8_length(a);
    t += 6000;
  }
  b.silence_until(t);
  b.expect(t, {{"type", "total_tts_frames"}, {"count", frames}});
  return b.build();
}

Trace latency() {
  TraceBuilder b("latency");
  profile_config(b, kT);
  b.config("vad.onset_min_ms", 32).config("vad.hangover_ms", 64);
  b.config("backends.reasoner.implementation", "wizard");
  b.note("100 short questions, 96 ms of speech each, 400 ms apart, for measuring voice end to first audio.");
  std::int64_t t = 160;
  for (int i = 0; i < 100; ++i) {
    const std::string q = "Is item " + std::to_string(i) + " here?";
    b.speech(t, 96, q);
    b.answer(q, "Yes.");
    t += 400;
  }
  b.silence_until(t + 400);
  b.expect(t, {{"type", "answer_count"}, {"count", 100}});
  return b.build();
}

}  // namespace

TraceBuilder::TraceBuilder(std::string name) : name_(std::move(name)) {}

TraceBuilder& TraceBuilder::note(std::string text) {
  notes_.push_back(std::move(text));
  return *this;
}

TraceBuilder& TraceBuilder::config(const std::string& key, json value) {
  config_[key] = std::move(value);
  return *this;
}

void TraceBuilder::add(std::int64_t t_ms, EventKind kind, json payload) {
  events_.push_back({t_ms, kind, std::move(payload), 0});
}

TraceBuilder& TraceBuilder::speech(std::int64_t t_ms, std::int64_t duration_ms, const std::string& transcript,
                                   const std::string& sound_class) {
  if (t_ms < audio_end_ms_) throw ArgumentError("speech overlaps earlier audio");
  add(t_ms, EventKind::Annotation, {{"type", "segment"}, {"class", sound_class}, {"transcript", transcript}});
  add(t_ms, EventKind::Audio, audio_payload(tone(duration_ms)));
  audio_end_ms_ = t_ms + duration_ms;
  return *this;
}

TraceBuilder& TraceBuilder::silence_until(std::int64_t t_ms) {
  if (t_ms <= audio_end_ms_) return *this;
  add(audio_end_ms_, EventKind::Audio,
      audio_payload(std::vector<std::int16_t>(static_cast<std::size_t>((t_ms - audio_end_ms_) * kSamplesPerMs), 0)));
  audio_end_ms_ = t_ms;
  return *this;
}

TraceBuilder& TraceBuilder::frame(std::int64_t t_ms, const Matrix& features) {
  add(t_ms, EventKind::Frame, features_payload(features));
  return *this;
}

TraceBuilder& TraceBuilder::answer(const std::string& question, const std::string& answer) {
  add(0, EventKind::Annotation, {{"type", "answer"}, {"question", question}, {"answer", answer}});
  return *this;
}

TraceBuilder& TraceBuilder::query(const std::string& question, std::vector<std::size_t> clips) {
  add(0, EventKind::Annotation, {{"type", "query"}, {"question", question}, {"clips", clips}});
  return *this;
}

TraceBuilder& TraceBuilder::expect(std::int64_t t_ms, json payload) {
  add(t_ms, EventKind::Expect, std::move(payload));
  return *this;
}

Trace TraceBuilder::build() const {
  Trace t;
  t.name = name_;
  for (const auto& n : notes_) t.events.push_back({0, EventKind::Annotation, {{"type", "note"}, {"text", n}}, 0});
  if (!config_.empty()) {
    t.events.push_back({0, EventKind::Annotation, {{"type", "session"}, {"config", config_}}, 0});
  }
  auto rest = events_;
  std::stable_sort(rest.begin(), rest.end(), [](const TraceEvent& a, const TraceEvent& b) { return a.t_ms < b.t_ms; });
  t.events.insert(t.events.end(), rest.begin(), rest.end());
  for (std::size_t i = 0; i < t.events.size(); ++i) t.events[i].line = i + 1;
  return t;
}

Matrix repeated_rows(const Vector& direction, std::size_t rows) {
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) m.append_row(direction);
  return m;
}

Matrix scene_rows(const std::string& scene, std::size_t frame, std::size_t rows, std::size_t channels) {
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    m.append_row(backends::hashed_vector("scene:" + scene + ":" + std::to_string(frame) + ":" + std::to_string(r), channels));
  }
  return m;
}

Vector reference_question_vector(const std::string& question, std::size_t channels) {
  backends::ReferenceCompressor rc;
  const auto tokens = backends::tokenize(question);
  return rc.encode_question(Matrix(), tokens, question, channels);
}

std::map<std::string, Trace> bundled_scenarios() {
  return {{"weather.jsonl", weather()},
          {"sandwich.jsonl", sandwich()},
          {"whatisthis.jsonl", whatisthis()},
          {"barge_in.jsonl", barge_in()},
          {"snapshot_isolation.jsonl", snapshot_isolation()},
          {"gate_filler.jsonl", gate_filler()},
          {"gate_questions.jsonl", gate_questions()},
          {"latency.jsonl", latency()}};
}

}  // namespace ol::harness
