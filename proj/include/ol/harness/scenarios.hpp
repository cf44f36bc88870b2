#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ol/common/matrix.hpp"
#include "ol/harness/trace.hpp"

namespace ol::harness {

// Incremental trace construction. Events are kept in insertion order within
// equal timestamps.
class TraceBuilder {
 public:
  explicit TraceBuilder(std::string name);

  TraceBuilder& note(std::string text);
  TraceBuilder& config(const std::string& key, nlohmann::json value);

  // A voiced burst (400 Hz square wave, amplitude 8000) with its wizard
  // segment annotation at t_ms.
  TraceBuilder& speech(std::int64_t t_ms, std::int64_t duration_ms, const std::string& transcript,
                       const std::string& sound_class = "speech");
  // Silence up to t_ms so the recording does not end mid-hangover.
  TraceBuilder& silence_until(std::int64_t t_ms);
  TraceBuilder& frame(std::int64_t t_ms, const Matrix& features);
  TraceBuilder& answer(const std::string& question, const std::string& answer);
  TraceBuilder& query(const std::string& question, std::vector<std::size_t> clips);
  TraceBuilder& expect(std::int64_t t_ms, nlohmann::json payload);

  Trace build() const;

 private:
  void add(std::int64_t t_ms, EventKind kind, nlohmann::json payload);

  std::string name_;
  nlohmann::json config_ = nlohmann::json::object();
  std::vector<std::string> notes_;
  std::vector<TraceEvent> events_;
  std::int64_t audio_end_ms_ = 0;
};

// N x C block whose rows are all `direction`.
Matrix repeated_rows(const Vector& direction, std::size_t rows);
// N x C block of hashed vectors keyed by scene, frame and row.
Matrix scene_rows(const std::string& scene, std::size_t frame, std::size_t rows, std::size_t channels);

// The question feature the reference compressor produces for `question`.
Vector reference_question_vector(const std::string& question, std::size_t channels);

// All bundled scenarios, keyed by file name (e.g. "weather.jsonl").
std::map<std::string, Trace> bundled_scenarios();

}  // namespace ol::harness
