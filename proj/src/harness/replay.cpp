#include "ol/harness/replay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "ol/common/error.hpp"
#include "ol/pipeline/pipeline.hpp"
#include "ol/pipeline/runner.hpp"

namespace ol::harness {

using nlohmann::json;

namespace {

// Timestamps for observations: the pipeline clock, at sub-millisecond
// resolution when it is a real clock.
struct Stamper {
  const Clock& clock;
  double operator()() const {
    if (const auto* s = dynamic_cast<const SteadyClock*>(&clock)) return s->now_ms_fine();
    return static_cast<double>(clock.now_ms());
  }
};

class Recorder final : public pipeline::PipelineObserver {
 public:
  explicit Recorder(Stamper stamp) : stamp_(stamp) {}

  void on_voice_start(std::int64_t t_ms, std::uint64_t generation) override {
    std::lock_guard lock(mu_);
    interrupts.push_back({t_ms, generation, std::nullopt});
  }
  void on_voice_end(const vad::VoiceSegment& seg) override {
    std::lock_guard lock(mu_);
    voice_end[seg.id] = {stamp_(), seg.t_start_ms, seg.t_end_ms};
  }
  void on_gate(std::uint64_t id, const std::string& transcript, const reasoning::GateDecision& d) override {
    std::lock_guard lock(mu_);
    auto& q = query(id);
    q.question = transcript;
    q.verdict = d.verdict == reasoning::Verdict::Answer ? "answer" : "ignore";
    q.reason = d.reason;
  }
  void on_retrieval(std::uint64_t id, const std::string&, const memory::MemorySnapshot& snap,
                    const memory::RetrievalResult& r) override {
    std::lock_guard lock(mu_);
    auto& q = query(id);
    q.retrieved_run = true;
    q.no_memory = r.no_memory;
    q.snapshot_t_ms = snap.snapshot_t_ms;
    for (const auto& h : r.hits) q.retrieved.push_back({h.clip_index, h.score, h.cosine, h.record->t_end_ms});
  }
  void on_answer(const reasoning::AnswerEvent& a) override {
    std::lock_guard lock(mu_);
    auto& q = query(a.segment_id);
    q.answered = true;
    q.answer = a.answer;
    q.generation = a.generation;
    q.gate_ms = a.gate_ms;
    q.retrieve_ms = a.retrieve_ms;
    q.generate_ms = a.generate_ms;
  }
  void on_clip(const memory::ClipRecord&) override {
    std::lock_guard lock(mu_);
    ++clips;
  }
  void on_snapshot(const memory::MemorySnapshot&) override {
    std::lock_guard lock(mu_);
    ++snapshots;
  }

  QueryRecord& query(std::uint64_t id) {
    auto it = queries.find(id);
    if (it == queries.end()) {
      it = queries.emplace(id, QueryRecord{}).first;
      it->second.segment_id = id;
    }
    return it->second;
  }

  struct VoiceEndAt {
    double at;
    std::int64_t t_start, t_end;
  };

  std::mutex mu_;
  Stamper stamp_;
  std::vector<InterruptRecord> interrupts;
  std::map<std::uint64_t, VoiceEndAt> voice_end;
  std::map<std::uint64_t, QueryRecord> queries;
  std::size_t clips = 0;
  std::size_t snapshots = 0;
};

// Ordered in-process transport: encodes every item to its wire form and
// decodes it back as a client would, logging the decoded result.
class ClientTransport final : public gateway::OutboundTransport {
 public:
  explicit ClientTransport(Stamper stamp) : stamp_(stamp) {}

  bool send(const gateway::OutboundItem& item) override {
    ClientRecord r;
    r.t_ms = stamp_();
    if (const auto* msg = std::get_if<gateway::JsonMessage>(&item)) {
      const auto text = gateway::encode_message(*msg);
      r.wire_bytes = text.size();
      r.message = gateway::decode_message(text);
    } else {
      const auto& chunk = std::get<reasoning::OutAudioChunk>(item);
      const auto bytes = gateway::encode_binary(gateway::encode_audio_out(chunk));
      r.wire_bytes = bytes.size();
      r.is_audio = true;
      r.audio = gateway::decode_audio_out(gateway::decode_binary(bytes));
      r.answer_id = chunk.answer_id;
    }
    std::lock_guard lock(mu_);
    log.push_back(std::move(r));
    return true;
  }

  std::mutex mu_;
  Stamper stamp_;
  std::vector<ClientRecord> log;
};

const std::set<std::string> kExpectTypes = {"retrieved_contains", "retrieved_top1",   "retrieved_before_ms",
                                            "answer_count",       "answer_equals",    "no_answer",
                                            "total_tts_frames",   "interrupt_by_ms",  "no_stale_audio"};

std::string require_string(const TraceEvent& e, const char* key) {
  if (!e.payload.contains(key) || !e.payload[key].is_string()) {
    throw TraceError(e.line, std::string("expect '") + e.payload["type"].get<std::string>() + "' needs string '" +
                                 key + "'");
  }
  return e.payload[key].get<std::string>();
}

std::int64_t require_int(const TraceEvent& e, const char* key) {
  if (!e.payload.contains(key) || !e.payload[key].is_number_integer()) {
    throw TraceError(e.line, std::string("expect '") + e.payload["type"].get<std::string>() + "' needs integer '" +
                                 key + "'");
  }
  return e.payload[key].get<std::int64_t>();
}

void validate_expects(const Trace& trace) {
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::Expect) continue;
    const auto type = e.payload["type"].get<std::string>();
    if (!kExpectTypes.count(type)) throw TraceError(e.line, "unknown expect type '" + type + "'");
  }
}

std::vector<const QueryRecord*> queries_for(const RunReport& r, const std::string& question) {
  std::vector<const QueryRecord*> out;
  for (const auto& q : r.queries) {
    if (q.question == question) out.push_back(&q);
  }
  return out;
}

std::string clips_text(const QueryRecord& q) {
  std::string s = "[";
  for (std::size_t i = 0; i < q.retrieved.size(); ++i) s += (i ? ", " : "") + std::to_string(q.retrieved[i].clip);
  return s + "]";
}

ExpectVerdict evaluate(const TraceEvent& e, const RunReport& r) {
  ExpectVerdict v;
  v.line = e.line;
  v.t_ms = e.t_ms;
  v.type = e.payload["type"].get<std::string>();
  const auto& t = v.type;

  if (t == "retrieved_contains" || t == "retrieved_top1" || t == "retrieved_before_ms") {
    const auto question = require_string(e, "question");
    const auto qs = queries_for(r, question);
    const QueryRecord* q = nullptr;
    for (const auto* c : qs) {
      if (c->retrieved_run) q = c;
    }
    if (!q) {
      v.detail = "no retrieval for '" + question + "'";
      return v;
    }
    if (t == "retrieved_before_ms") {
      const auto before = require_int(e, "before_ms");
      v.pass = std::all_of(q->retrieved.begin(), q->retrieved.end(),
                           [&](const HitRecord& h) { return h.t_end_ms <= before; });
      v.detail = "retrieved " + clips_text(*q) + ", snapshot at " + std::to_string(q->snapshot_t_ms);
      return v;
    }
    const auto clip = static_cast<std::size_t>(require_int(e, "clip"));
    if (t == "retrieved_top1") {
      v.pass = !q->retrieved.empty() && q->retrieved.front().clip == clip;
    } else {
      v.pass = std::any_of(q->retrieved.begin(), q->retrieved.end(), [&](const HitRecord& h) { return h.clip == clip; });
    }
    v.detail = "retrieved " + clips_text(*q) + ", wanted " + std::to_string(clip);
    return v;
  }
  if (t == "answer_count" || t == "no_answer") {
    std::size_t n = 0;
    const bool scoped = e.payload.contains("question");
    const auto question = scoped ? require_string(e, "question") : std::string();
    for (const auto& q : r.queries) {
      if (q.answered && (!scoped || q.question == question)) ++n;
    }
    const std::size_t want = t == "no_answer" ? 0 : static_cast<std::size_t>(require_int(e, "count"));
    v.pass = n == want;
    v.detail = std::to_string(n) + " answers, wanted " + std::to_string(want);
    return v;
  }
  if (t == "answer_equals") {
    const auto question = require_string(e, "question");
    const auto answer = require_string(e, "answer");
    const auto qs = queries_for(r, question);
    auto it = std::find_if(qs.begin(), qs.end(), [](const QueryRecord* q) { return q->answered; });
    if (it == qs.end()) {
      v.detail = "no answer for '" + question + "'";
      return v;
    }
    v.pass = (*it)->answer == answer;
    v.detail = "got '" + (*it)->answer + "'";
    return v;
  }
  if (t == "total_tts_frames") {
    const auto want = static_cast<std::size_t>(require_int(e, "count"));
    const auto n = static_cast<std::size_t>(
        std::count_if(r.client_log.begin(), r.client_log.end(), [](const ClientRecord& c) { return c.is_audio; }));
    v.pass = n == want;
    v.detail = std::to_string(n) + " frames, wanted " + std::to_string(want);
    return v;
  }
  if (t == "interrupt_by_ms") {
    const auto by = static_cast<double>(require_int(e, "by_ms"));
    for (const auto& c : r.client_log) {
      if (!c.is_audio && c.message.type == "interrupt" && c.t_ms >= static_cast<double>(e.t_ms) && c.t_ms <= by) {
        v.pass = true;
        v.detail = "interrupt delivered at " + std::to_string(c.t_ms);
        return v;
      }
    }
    v.detail = "no interrupt delivered in [" + std::to_string(e.t_ms) + ", " + std::to_string(by) + "]";
    return v;
  }
  if (t == "no_stale_audio") {
    v.pass = r.stale_audio_after_interrupt == 0;
    v.detail = std::to_string(r.stale_audio_after_interrupt) + " stale frames after an interrupt";
    return v;
  }
  throw TraceError(e.line, "unknown expect type '" + t + "'");
}

// Audio frames older than the newest interrupt seen so far, plus seq order
// violations within a generation.
std::size_t count_stale(const std::vector<ClientRecord>& log) {
  std::uint64_t floor = 0;
  std::map<std::uint32_t, std::int64_t> last_seq;
  std::size_t bad = 0;
  for (const auto& c : log) {
    if (!c.is_audio) {
      if (c.message.type == "interrupt") floor = std::max<std::uint64_t>(floor, c.message.payload["generation"].get<std::uint64_t>());
      continue;
    }
    if (c.audio.generation < floor) ++bad;
    auto [it, fresh] = last_seq.emplace(c.audio.generation, static_cast<std::int64_t>(c.audio.seq));
    if (!fresh) {
      if (static_cast<std::int64_t>(c.audio.seq) <= it->second) ++bad;
      it->second = c.audio.seq;
    }
  }
  return bad;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json distribution_json(const Distribution& d) {
  return {{"count", d.count}, {"p50", opt(d.p50)}, {"p95", opt(d.p95)}, {"max", opt(d.max)}, {"mean", opt(d.mean)}};
}

}  // namespace

const std::vector<std::string>& expect_types() {
  static const std::vector<std::string> v(kExpectTypes.begin(), kExpectTypes.end());
  return v;
}

std::optional<double> percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

Distribution summarize(const std::vector<double>& values) {
  Distribution d;
  d.count = values.size();
  if (values.empty()) return d;
  d.p50 = percentile_nearest_rank(values, 50);
  d.p95 = percentile_nearest_rank(values, 95);
  d.max = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(values.size());
  return d;
}

Metrics measure(const RunReport& report) {
  Metrics m;
  std::vector<double> first_audio, interrupt, gate, retrieve, generate, precision;
  for (const auto& q : report.queries) {
    if (q.first_audio_at) first_audio.push_back(*q.first_audio_at - q.voice_end_at);
    if (q.answered) {
      gate.push_back(q.gate_ms);
      retrieve.push_back(q.retrieve_ms);
      generate.push_back(q.generate_ms);
    }
    if (q.precision_at_k) precision.push_back(*q.precision_at_k);
  }
  for (const auto& i : report.interrupts) {
    if (i.delivered_at) interrupt.push_back(*i.delivered_at - static_cast<double>(i.onset_ms));
  }
  m.first_audio_ms = summarize(first_audio);
  m.interrupt_ms = summarize(interrupt);
  m.gate_ms = summarize(gate);
  m.retrieve_ms = summarize(retrieve);
  m.generate_ms = summarize(generate);
  m.precision_queries = precision.size();
  if (!precision.empty()) {
    double s = 0.0;
    for (double p : precision) s += p;
    m.mean_precision_at_k = s / static_cast<double>(precision.size());
  }
  return m;
}

json Metrics::to_json() const {
  return {{"first_audio_ms", distribution_json(first_audio_ms)},
          {"interrupt_ms", distribution_json(interrupt_ms)},
          {"gate_ms", distribution_json(gate_ms)},
          {"retrieve_ms", distribution_json(retrieve_ms)},
          {"generate_ms", distribution_json(generate_ms)},
          {"precision_at_k", {{"queries", precision_queries}, {"mean", opt(mean_precision_at_k)}}}};
}

bool RunReport::passed() const {
  return std::all_of(expects.begin(), expects.end(), [](const ExpectVerdict& v) { return v.pass; });
}

json RunReport::to_json() const {
  json qs = json::array();
  for (const auto& q : queries) {
    json hits = json::array();
    for (const auto& h : q.retrieved) {
      hits.push_back({{"clip", h.clip}, {"score", h.score}, {"cosine", h.cosine}, {"t_end_ms", h.t_end_ms}});
    }
    qs.push_back({{"segment_id", q.segment_id},
                  {"question", q.question},
                  {"t_start_ms", q.t_start_ms},
                  {"t_end_ms", q.t_end_ms},
                  {"gate", {{"verdict", q.verdict}, {"reason", q.reason}}},
                  {"snapshot_t_ms", q.retrieved_run ? json(q.snapshot_t_ms) : json(nullptr)},
                  {"no_memory", q.no_memory},
                  {"retrieved", hits},
                  {"answer", q.answered ? json(q.answer) : json(nullptr)},
                  {"generation", q.generation},
                  {"audio_frames", q.audio_frames},
                  {"precision_at_k", opt(q.precision_at_k)},
                  {"timings",
                   {{"voice_end_at", q.voice_end_at},
                    {"gate_ms", q.gate_ms},
                    {"retrieve_ms", q.retrieve_ms},
                    {"generate_ms", q.generate_ms},
                    {"first_audio_ms", q.first_audio_at ? json(*q.first_audio_at - q.voice_end_at) : json(nullptr)}}}});
  }
  json irs = json::array();
  for (const auto& i : interrupts) {
    irs.push_back({{"onset_ms", i.onset_ms},
                   {"generation", i.generation},
                   {"delivered_at", opt(i.delivered_at)},
                   {"latency_ms", i.delivered_at ? json(*i.delivered_at - static_cast<double>(i.onset_ms)) : json(nullptr)}});
  }
  json ex = json::array();
  for (const auto& v : expects) {
    ex.push_back({{"line", v.line}, {"t_ms", v.t_ms}, {"type", v.type}, {"pass", v.pass}, {"detail", v.detail}});
  }
  std::size_t audio = 0, messages = 0, bytes = 0;
  for (const auto& c : client_log) {
    (c.is_audio ? audio : messages)++;
    bytes += c.wire_bytes;
  }
  return {{"format", "ol-report/1"},
          {"trace", trace},
          {"mode", mode == Mode::Virtual ? "virtual" : "realtime"},
          {"top_k", top_k},
          {"queries", qs},
          {"interrupts", irs},
          {"expects", ex},
          {"passed", passed()},
          {"queues", queues},
          {"memory", {{"clips", clips_ingested}, {"snapshots", snapshots_taken}}},
          {"outbound",
           {{"audio_frames", audio},
            {"messages", messages},
            {"wire_bytes", bytes},
            {"stale_audio_after_interrupt", stale_audio_after_interrupt}}},
          {"metrics", measure(*this).to_json()}};
}

RunReport replay(const Trace& trace, const ReplayOptions& options) {
  validate_expects(trace);
  auto overrides = trace.config_overrides();
  overrides.insert(overrides.end(), options.overrides.begin(), options.overrides.end());
  const auto cfg = backends::load_config_text(options.config_toml, overrides);
  auto backends = backends::make_backends(cfg, trace.wizard());
  const auto deliveries = media_deliveries(trace);

  VirtualClock vclock;
  SteadyClock sclock;
  const Clock& clock = options.mode == Mode::Virtual ? static_cast<const Clock&>(vclock) : sclock;
  Stamper stamp{clock};
  Recorder recorder(stamp);
  ClientTransport client(stamp);

  pipeline::SessionPipeline pipe(trace.name, cfg, backends, clock, &recorder);
  pipeline::OutboundPump pump(pipe.outbound(), client);
  auto stages = pipe.stages();
  stages.push_back(&pump);

  if (options.mode == Mode::Virtual) {
    pipeline::VirtualRunner runner(stages, vclock);
    for (const auto& d : deliveries) {
      runner.advance_to(d.t_ms);
      if (d.is_audio) {
        pipe.push_audio(d.bytes);
      } else {
        pipe.push_frame(d.frame);
      }
      runner.settle();
    }
    pipe.end_of_stream();
    runner.drain();
  } else {
    pipe.outbound().set_ready_callback([&pipe] { pipe.wakeup().notify(); });
    pipeline::ThreadedRunner runner(stages, pipe.wakeup(), clock);
    runner.start();
    for (const auto& d : deliveries) {
      const auto wait = d.t_ms - clock.now_ms();
      if (wait > 0) std::this_thread::sleep_for(std::chrono::milliseconds(wait));
      if (d.is_audio) {
        pipe.push_audio(d.bytes);
      } else {
        pipe.push_frame(d.frame);
      }
    }
    pipe.end_of_stream();
    // Stop periodically to inspect worker state safely.
    for (int i = 0; i < 600; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
      runner.stop();
      const bool done = pipe.quiescent();
      if (done) break;
      runner.start();
    }
    runner.stop();
    pipe.outbound().set_ready_callback({});
  }

  RunReport report;
  report.trace = trace.name;
  report.mode = options.mode;
  report.top_k = cfg.memory.top_k;
  report.client_log = client.log;
  report.queues = pipe.depths().to_json();
  report.clips_ingested = recorder.clips;
  report.snapshots_taken = recorder.snapshots;
  report.stale_audio_after_interrupt = count_stale(report.client_log);

  report.interrupts = recorder.interrupts;
  for (auto& i : report.interrupts) {
    for (const auto& c : report.client_log) {
      if (!c.is_audio && c.message.type == "interrupt" &&
          c.message.payload["generation"].get<std::uint64_t>() == i.generation) {
        i.delivered_at = c.t_ms;
        break;
      }
    }
  }

  const auto truth = trace.ground_truth();
  for (auto& [id, q] : recorder.queries) {
    if (auto it = recorder.voice_end.find(id); it != recorder.voice_end.end()) {
      q.voice_end_at = it->second.at;
      q.t_start_ms = it->second.t_start;
      q.t_end_ms = it->second.t_end;
    }
    for (const auto& c : report.client_log) {
      if (c.is_audio && c.answer_id == id) {
        if (!q.first_audio_at) q.first_audio_at = c.t_ms;
        ++q.audio_frames;
      }
    }
    if (auto gt = truth.find(q.question); gt != truth.end() && q.retrieved_run && report.top_k > 0) {
      std::size_t hits = 0;
      for (const auto& h : q.retrieved) {
        if (std::find(gt->second.begin(), gt->second.end(), h.clip) != gt->second.end()) ++hits;
      }
      q.precision_at_k = static_cast<double>(hits) / static_cast<double>(report.top_k);
    }
    report.queries.push_back(q);
  }

  for (const auto& e : trace.events) {
    if (e.kind == EventKind::Expect) report.expects.push_back(evaluate(e, report));
  }
  return report;
}

}  // namespace ol::harness
