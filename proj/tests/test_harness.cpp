#include <doctest.h>

#include <random>

#include "ol/common/error.hpp"
#include "ol/common/json_schema.hpp"
#include "ol/harness/replay.hpp"
#include "ol/harness/scenarios.hpp"
#include "ol/harness/trace.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

using namespace ol;
using namespace ol::harness;
using nlohmann::json;

namespace {

std::size_t trace_error_line(const std::string& text) {
  try {
    (void)parse_trace(text);
  } catch (const TraceError& e) {
    return e.line();
  }
  return 0;
}

Trace bundled(const std::string& name) { return load_trace(test::source_dir().parent_path() / "assets/traces" / name); }

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("trace parse errors name the line") {
    const std::string ok = R"({"t_ms": 0, "kind": "annotation", "payload": {"type": "note", "text": "x"}})";
    CHECK(trace_error_line(ok + "\n{oops\n") == 2);
    CHECK(trace_error_line(ok + "\n" + R"({"t_ms": 5, "kind": "bogus", "payload": {}})") == 2);
    CHECK(trace_error_line(R"({"t_ms": 10, "kind": "annotation", "payload": {"type": "note", "text": "x"}})"
                           "\n" + ok) == 2);
    CHECK(trace_error_line(R"({"kind": "audio", "payload": {}})") == 1);
    CHECK(trace_error_line(ok + "\n\n" + R"({"t_ms": 1, "kind": "audio", "payload": {"pcm_b64": "!!"}})") == 3);
  }

  TEST_CASE("unknown expect types are rejected") {
    const std::string t = R"({"t_ms": 0, "kind": "expect", "payload": {"type": "telepathy"}})";
    CHECK(trace_error_line(t) == 1);
    for (const auto& type : expect_types()) CHECK_FALSE(type.empty());
  }

  TEST_CASE("serialize and parse round trip") {
    for (const auto& [name, trace] : bundled_scenarios()) {
      const auto text = serialize_trace(trace);
      CHECK_MESSAGE(serialize_trace(parse_trace(text, name)) == text, name);
    }
  }

  TEST_CASE("bundled traces match the generator") {
    for (const auto& [name, trace] : bundled_scenarios()) {
      CHECK_MESSAGE(test::read_file(test::source_dir().parent_path() / "assets/traces" / name) ==
                        serialize_trace(trace),
                    name);
    }
  }

  TEST_CASE("audio deliveries fall at chunk ends") {
    const auto trace = bundled("weather.jsonl");
    std::int64_t last = -1;
    std::vector<Delivery> audio;
    for (const auto& d : media_deliveries(trace)) {
      CHECK(d.t_ms >= last);
      last = d.t_ms;
      if (d.is_audio) audio.push_back(d);
    }
    REQUIRE(audio.size() > 1);
    std::size_t bytes = 0;
    for (std::size_t i = 0; i < audio.size(); ++i) {
      // Only the final slice may be short.
      if (i + 1 < audio.size()) CHECK(audio[i].bytes.size() == 512);
      bytes += audio[i].bytes.size();
      CHECK(audio[i].t_ms == static_cast<std::int64_t>(bytes / 32));
    }
  }

  TEST_CASE("nearest-rank percentile") {
    CHECK(percentile_nearest_rank({10, 20, 30}, 50) == 20);
    CHECK(percentile_nearest_rank({10, 20, 30}, 95) == 30);
    CHECK(percentile_nearest_rank({10, 20, 30}, 0) == 10);
    CHECK(percentile_nearest_rank({7}, 95) == 7);
    CHECK_FALSE(percentile_nearest_rank({}, 50));
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> v(1 + rng() % 50);
      for (auto& x : v) x = static_cast<double>(rng() % 1000) / 7.0;
      for (double p : {1.0, 50.0, 95.0, 99.0, 100.0}) CHECK(*percentile_nearest_rank(v, p) == oracle::nearest_rank(v, p));
    }
  }

  TEST_CASE("measure agrees with a hand computation over 100 queries") {
    RunReport r;
    std::vector<double> lat, gate, prec;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
      QueryRecord q;
      q.voice_end_at = 1000.0 * i;
      q.answered = i % 10 != 0;
      q.gate_ms = 0.25 * i;
      if (q.answered) {
        q.first_audio_at = q.voice_end_at + static_cast<double>(rng() % 5000) / 100.0;
        lat.push_back(*q.first_audio_at - q.voice_end_at);
        gate.push_back(q.gate_ms);
      }
      if (i % 3 == 0) {
        q.precision_at_k = static_cast<double>(rng() % 3) / 2.0;
        prec.push_back(*q.precision_at_k);
      }
      r.queries.push_back(q);
    }
    r.interrupts.push_back({100, 1, 104.5});
    r.interrupts.push_back({200, 2, std::nullopt});
    const auto m = measure(r);
    CHECK(m.first_audio_ms.count == lat.size());
    CHECK(*m.first_audio_ms.p50 == oracle::nearest_rank(lat, 50));
    CHECK(*m.first_audio_ms.p95 == oracle::nearest_rank(lat, 95));
    CHECK(*m.first_audio_ms.max == *std::max_element(lat.begin(), lat.end()));
    long double sum = 0;
    for (double x : lat) sum += x;
    CHECK(std::abs(*m.first_audio_ms.mean - static_cast<double>(sum / lat.size())) <= 1e-12);
    CHECK(*m.gate_ms.p50 == oracle::nearest_rank(gate, 50));
    long double psum = 0;
    for (double x : prec) psum += x;
    CHECK(m.precision_queries == prec.size());
    CHECK(std::abs(*m.mean_precision_at_k - static_cast<double>(psum / prec.size())) <= 1e-12);
    CHECK(m.interrupt_ms.count == 1);
    CHECK(*m.interrupt_ms.p50 == 4.5);
  }

  TEST_CASE("precision at k counts ground-truth hits over top_k") {
    const auto report = replay(bundled("weather.jsonl"));
    REQUIRE(report.queries.size() == 1);
    CHECK(report.top_k == 2);
    REQUIRE(report.queries[0].precision_at_k);
    CHECK(*report.queries[0].precision_at_k == 0.5);
    CHECK(*measure(report).mean_precision_at_k == 0.5);
  }

  TEST_CASE("virtual replay is deterministic") {
    for (const char* name : {"barge_in.jsonl", "snapshot_isolation.jsonl", "sandwich.jsonl"}) {
      const auto trace = bundled(name);
      const auto a = replay(trace).to_json().dump();
      const auto b = replay(trace).to_json().dump();
      CHECK_MESSAGE(a == b, name);
    }
  }

  TEST_CASE("bundled traces pass their expectations") {
    for (const auto& [name, trace] : bundled_scenarios()) {
      if (name == "latency.jsonl") continue;  // covered by the acceptance run
      const auto report = replay(bundled(name));
      for (const auto& e : report.expects) CHECK_MESSAGE(e.pass, name, " line ", e.line, ": ", e.detail);
      CHECK_FALSE(report.expects.empty());
    }
  }

  TEST_CASE("reports conform to the report schema") {
    const auto schema = JsonSchema::load(asset_path("schemas/report.schema.json"));
    for (const char* name : {"weather.jsonl", "barge_in.jsonl", "gate_filler.jsonl"}) {
      const auto report = replay(bundled(name));
      auto doc = report.to_json();
      const auto errors = schema.validate(doc);
      CHECK_MESSAGE(errors.empty(), name, ": ", (errors.empty() ? "" : errors.front()));
    }
  }

  TEST_CASE("client log wire messages conform to the wire schema") {
    const auto schema = JsonSchema::load(asset_path("schemas/wire.schema.json"));
    const auto report = replay(bundled("barge_in.jsonl"));
    std::size_t n = 0;
    for (const auto& c : report.client_log) {
      if (c.is_audio) continue;
      const auto doc = json::parse(gateway::encode_message(c.message));
      CHECK(schema.accepts(doc));
      ++n;
    }
    CHECK(n > 0);
  }

  TEST_CASE("schema validator catches violations") {
    const JsonSchema s(json::parse(R"({
      "type": "object", "required": ["a"], "additionalProperties": false,
      "properties": {"a": {"type": "integer", "minimum": 0}, "b": {"enum": ["x", "y"]}}})"));
    CHECK(s.accepts(json{{"a", 1}}));
    CHECK_FALSE(s.accepts(json{{"a", -1}}));
    CHECK_FALSE(s.accepts(json{{"b", "x"}}));
    CHECK_FALSE(s.accepts(json{{"a", 1}, {"c", 0}}));
    CHECK_FALSE(s.accepts(json{{"a", 1}, {"b", "z"}}));
    CHECK_THROWS_AS(JsonSchema(json::parse(R"({"patternProperties": {}})")), ArgumentError);
  }
}
