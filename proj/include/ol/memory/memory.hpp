#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ol/backends/contracts.hpp"
#include "ol/common/matrix.hpp"
#include "ol/perception/types.hpp"

namespace ol::memory {

struct MemoryConfig {
  std::size_t top_k = 2;
  std::size_t window = 32;        // short-term memories per integration pass
  std::size_t max_snapshots = 8;
  std::size_t frame_refs = 4;     // source frames kept per clip for prompts
  double recency_lambda = 0.0;    // 0 = pure cosine ranking
  bool keep_clip_features = false;

  void validate() const;
};

// Everything the bank knows about one clip. Immutable once published.
struct ClipRecord {
  std::size_t clip_index = 0;
  std::int64_t t_start_ms = 0;
  std::int64_t t_end_ms = 0;
  std::size_t frame_count = 0;
  std::shared_ptr<const Matrix> features;  // null once evicted
  std::shared_ptr<const Matrix> short_term;
  Vector global;
  std::vector<perception::FrameRef> frame_refs;
  bool degraded = false;
};

using RecordPtr = std::shared_ptr<const ClipRecord>;

// Point-in-time view of the bank: the clips that had finished by
// `snapshot_t_ms` and the long-term memory integrated over exactly those.
struct MemorySnapshot {
  std::int64_t snapshot_t_ms = 0;
  std::vector<RecordPtr> clips;
  std::shared_ptr<const Matrix> long_term;  // one row per clip
  std::shared_ptr<const Matrix> globals;    // one row per clip, retrieval keys

  bool empty() const noexcept { return clips.empty(); }
  std::size_t size() const noexcept { return clips.size(); }
};

using SnapshotPtr = std::shared_ptr<const MemorySnapshot>;

struct QuestionFeature {
  Vector q;
  std::string text;
};

struct RetrievalHit {
  std::size_t clip_index = 0;
  double score = 0.0;   // cosine plus any recency bonus
  double cosine = 0.0;
  RecordPtr record;
};

struct RetrievalResult {
  std::vector<RetrievalHit> hits;
  bool no_memory = false;
};

struct CompressResult {
  Matrix short_term;
  Vector global;
  bool degraded = false;
};

// Spatial down-sampling to T*P tokens. Throws ConfigError unless P divides N.
Matrix init_short_term(const Matrix& clip_features, const perception::FeatureProfile& profile,
                       backends::CompressorBackend& backend);

// Runs the compressor over [F ; H0 ; G0]. If the backend fails, falls back to
// H0 and the normalized token mean of F and flags the result as degraded.
CompressResult compress_clip(const Matrix& clip_features, const Matrix& initial_short_term,
                             std::span<const double> initial_global, const perception::FeatureProfile& profile,
                             backends::CompressorBackend& backend);

// Integrates the given short-term memories (clips first_clip.. in order)
// together with all global memories. Returns one row per short-term block.
Matrix integrate(std::span<const Matrix* const> short_terms, std::span<const Vector> globals,
                 std::size_t first_clip, backends::CompressorBackend& backend);

// Throws ArgumentError on an empty question.
QuestionFeature encode_question(const Matrix& long_term, std::string_view question, std::size_t channels,
                                backends::CompressorBackend& backend);

// Top-k clips by cosine(q, global) + recency_lambda * position/(k-1), ties to
// the earlier clip.
RetrievalResult retrieve(const QuestionFeature& q, const MemorySnapshot& bank, std::size_t top_k,
                         double recency_lambda = 0.0);

// Indices of `n` evenly spaced picks out of `count` (first and last included).
std::vector<std::size_t> evenly_spaced(std::size_t count, std::size_t n);

std::uint64_t content_hash(const MemorySnapshot& snapshot);

// The live memory bank. One writer (the compressor worker) calls ingest and
// snapshot; any thread may call restore_for_grounding and live_view.
class MemoryBank {
 public:
  MemoryBank(MemoryConfig cfg, perception::FeatureProfile profile, backends::CompressorBackend& backend);

  RecordPtr ingest(perception::ClipFeatures clip);

  // Captures the clips finished by t_ms. Retains at most max_snapshots.
  SnapshotPtr snapshot(std::int64_t t_ms);

  // Most recent snapshot taken at or before t_ms; an empty bank when none.
  SnapshotPtr restore_for_grounding(std::int64_t t_ms) const;

  SnapshotPtr live_view() const;

  // Replaces the bank contents, e.g. after import.
  void load(const MemorySnapshot& snapshot);

  std::size_t size() const;
  std::size_t snapshot_count() const;
  const MemoryConfig& config() const noexcept { return cfg_; }
  const perception::FeatureProfile& profile() const noexcept { return profile_; }

 private:
  std::shared_ptr<const Matrix> long_term_for_prefix(std::size_t count) const;
  std::shared_ptr<const Matrix> globals_for_prefix(std::size_t count) const;
  void integrate_step(std::vector<RecordPtr> const& records, std::size_t upto, Matrix& long_term) const;

  MemoryConfig cfg_;
  perception::FeatureProfile profile_;
  backends::CompressorBackend& backend_;

  mutable std::mutex mu_;
  std::vector<RecordPtr> records_;
  std::shared_ptr<const Matrix> long_term_;
  std::vector<SnapshotPtr> snapshots_;
};

// On-disk layout: manifest.json (format "omnimem/1") plus little-endian
// float32 row-major matrices, one file per block.
void export_memory(const MemorySnapshot& snapshot, const perception::FeatureProfile& profile,
                   const std::filesystem::path& dir);

struct ImportedMemory {
  perception::FeatureProfile profile;
  MemorySnapshot snapshot;
};

ImportedMemory import_memory(const std::filesystem::path& dir);

}  // namespace ol::memory
