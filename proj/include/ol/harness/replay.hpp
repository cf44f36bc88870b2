#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ol/backends/config.hpp"
#include "ol/gateway/wire.hpp"
#include "ol/harness/trace.hpp"

namespace ol::harness {

enum class Mode { Virtual, RealTime };

struct ReplayOptions {
  Mode mode = Mode::Virtual;
  std::string config_toml;                                        // base config
  std::vector<std::pair<std::string, std::string>> overrides;     // applied after the trace's own
};

// What the client saw, in write order. Audio entries keep the answer they
// belong to (not on the wire) so latencies can be attributed.
struct ClientRecord {
  double t_ms = 0.0;
  bool is_audio = false;
  gateway::JsonMessage message;
  gateway::AudioOut audio;
  std::uint64_t answer_id = 0;
  std::size_t wire_bytes = 0;
};

struct HitRecord {
  std::size_t clip = 0;
  double score = 0.0;
  double cosine = 0.0;
  std::int64_t t_end_ms = 0;
};

struct QueryRecord {
  std::uint64_t segment_id = 0;
  std::string question;
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  double voice_end_at = 0.0;
  std::string verdict;
  std::string reason;
  bool retrieved_run = false;
  bool no_memory = false;
  std::int64_t snapshot_t_ms = 0;
  std::vector<HitRecord> retrieved;
  bool answered = false;
  std::string answer;
  std::uint64_t generation = 0;
  double gate_ms = 0.0, retrieve_ms = 0.0, generate_ms = 0.0;
  std::optional<double> first_audio_at;
  std::size_t audio_frames = 0;
  std::optional<double> precision_at_k;
};

struct InterruptRecord {
  std::int64_t onset_ms = 0;
  std::uint64_t generation = 0;
  std::optional<double> delivered_at;
};

struct ExpectVerdict {
  std::size_t line = 0;
  std::int64_t t_ms = 0;
  std::string type;
  bool pass = false;
  std::string detail;
};

struct RunReport {
  std::string trace;
  Mode mode = Mode::Virtual;
  std::size_t top_k = 0;
  std::vector<QueryRecord> queries;
  std::vector<InterruptRecord> interrupts;
  std::vector<ExpectVerdict> expects;
  std::vector<ClientRecord> client_log;
  nlohmann::json queues;
  std::size_t clips_ingested = 0;
  std::size_t snapshots_taken = 0;
  std::size_t stale_audio_after_interrupt = 0;

  bool passed() const;
  // Client log is summarized, not dumped.
  nlohmann::json to_json() const;
};

// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * n) of the
// sorted sample, rank clamped to [1, n]. Empty input gives nullopt.
std::optional<double> percentile_nearest_rank(std::vector<double> values, double p);

struct Distribution {
  std::size_t count = 0;
  std::optional<double> p50, p95, max, mean;
};

Distribution summarize(const std::vector<double>& values);

struct Metrics {
  Distribution first_audio_ms;  // voice end -> first outbound audio frame
  Distribution interrupt_ms;    // voice onset -> interrupt delivered
  Distribution gate_ms, retrieve_ms, generate_ms;
  std::optional<double> mean_precision_at_k;
  std::size_t precision_queries = 0;

  nlohmann::json to_json() const;
};

Metrics measure(const RunReport& report);

// Expect types understood by evaluate().
const std::vector<std::string>& expect_types();

RunReport replay(const Trace& trace, const ReplayOptions& options = {});

}  // namespace ol::harness
