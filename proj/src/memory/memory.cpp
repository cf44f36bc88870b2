#include "ol/memory/memory.hpp"

#include <algorithm>
#include <cstring>

#include <spdlog/spdlog.h>

#include "ol/backends/hashed_vector.hpp"
#include "ol/backends/text.hpp"
#include "ol/common/error.hpp"
#include "ol/kernels/kernels.hpp"

namespace ol::memory {

void MemoryConfig::validate() const {
  std::vector<std::string> bad;
  if (top_k == 0) bad.emplace_back("memory.top_k");
  if (window == 0) bad.emplace_back("memory.window");
  if (max_snapshots == 0) bad.emplace_back("memory.max_snapshots");
  if (frame_refs == 0) bad.emplace_back("memory.frame_refs");
  if (!(recency_lambda >= 0.0)) bad.emplace_back("memory.recency_lambda");
  if (!bad.empty()) {
    std::string msg = "invalid memory config:";
    for (const auto& b : bad) msg += " " + b;
    throw ConfigError(bad, msg);
  }
}

Matrix init_short_term(const Matrix& clip_features, const perception::FeatureProfile& profile,
                       backends::CompressorBackend& backend) {
  const auto n = profile.tokens_per_frame;
  const auto p = profile.memory_tokens_per_frame;
  if (p == 0 || n % p != 0) {
    throw ConfigError({"profile.P", "profile.N"}, "P (" + std::to_string(p) + ") must divide N (" +
                                                      std::to_string(n) + ")");
  }
  return backend.init_short_term(clip_features, profile);
}

CompressResult compress_clip(const Matrix& clip_features, const Matrix& initial_short_term,
                             std::span<const double> initial_global, const perception::FeatureProfile& profile,
                             backends::CompressorBackend& backend) {
  backends::CompressInput in;
  in.profile = profile;
  in.layout = {clip_features.rows(), initial_short_term.rows(), 1};
  in.tokens = clip_features;
  in.tokens.append_rows(initial_short_term);
  in.tokens.append_row(initial_global);

  const std::size_t frames = clip_features.rows() / profile.tokens_per_frame;
  try {
    auto out = backend.compress(in);
    if (out.short_term.rows() != frames * profile.memory_tokens_per_frame ||
        out.short_term.cols() != profile.channels || out.global.size() != profile.channels) {
      throw BackendError(BackendError::Kind::Protocol, "compressor returned wrong shapes");
    }
    if (!out.short_term.all_finite() || !Matrix::row_vector(out.global).all_finite()) {
      throw BackendError(BackendError::Kind::Protocol, "compressor returned non-finite values");
    }
    return {std::move(out.short_term), std::move(out.global), false};
  } catch (const std::exception& e) {
    spdlog::warn("compressor failed, storing clip in degraded mode: {}", e.what());
    return {initial_short_term, normalized(kernels::parallel::column_mean(clip_features)), true};
  }
}

Matrix integrate(std::span<const Matrix* const> short_terms, std::span<const Vector> globals,
                 std::size_t first_clip, backends::CompressorBackend& backend) {
  if (short_terms.empty()) throw ArgumentError("integrate: no clips");
  backends::IntegrateInput in;
  in.first_clip = first_clip;
  in.global_rows = globals.size();
  const std::size_t cols = short_terms.front()->cols();
  for (const Matrix* h : short_terms) {
    if (h->cols() != cols) throw ArgumentError("integrate: inconsistent channel count");
    in.tokens.append_rows(*h);
    in.short_rows.push_back(h->rows());
  }
  for (const auto& g : globals) {
    if (g.size() != cols) throw ArgumentError("integrate: inconsistent channel count");
    in.tokens.append_row(g);
  }
  Matrix out = backend.integrate(in);
  if (out.rows() != short_terms.size() || out.cols() != cols) {
    throw BackendError(BackendError::Kind::Protocol, "integrate returned wrong shape");
  }
  return out;
}

QuestionFeature encode_question(const Matrix& long_term, std::string_view question, std::size_t channels,
                                backends::CompressorBackend& backend) {
  if (question.empty()) throw ArgumentError("encode_question: empty question");
  const auto tokens = backends::tokenize(question);
  QuestionFeature out{backend.encode_question(long_term, tokens, question, channels), std::string(question)};
  if (out.q.size() != channels) throw BackendError(BackendError::Kind::Protocol, "question feature has wrong size");
  return out;
}

RetrievalResult retrieve(const QuestionFeature& q, const MemorySnapshot& bank, std::size_t top_k,
                         double recency_lambda) {
  RetrievalResult result;
  if (bank.empty()) {
    result.no_memory = true;
    return result;
  }
  if (top_k == 0) throw ArgumentError("retrieve: top_k must be at least 1");
  const std::size_t k = bank.size();
  std::vector<double> cos(k);
  kernels::parallel::cosine_scores(q.q, *bank.globals, cos);

  std::vector<RetrievalHit> hits(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double recency = k > 1 ? static_cast<double>(j) / static_cast<double>(k - 1) : 1.0;
    hits[j] = {bank.clips[j]->clip_index, cos[j] + recency_lambda * recency, cos[j], bank.clips[j]};
  }
  const std::size_t n = std::min(top_k, k);
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(),
                    [](const RetrievalHit& a, const RetrievalHit& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.clip_index < b.clip_index;
                    });
  hits.resize(n);
  result.hits = std::move(hits);
  return result;
}

std::vector<std::size_t> evenly_spaced(std::size_t count, std::size_t n) {
  std::vector<std::size_t> out;
  if (count == 0 || n == 0) return out;
  n = std::min(n, count);
  if (n == 1) return {0};
  for (std::size_t i = 0; i < n; ++i) out.push_back(i * (count - 1) / (n - 1));
  return out;
}

namespace {

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

template <typename T>
void hash_value(std::uint64_t& h, T v) {
  hash_bytes(h, &v, sizeof v);
}

void hash_span(std::uint64_t& h, std::span<const double> v) {
  hash_value(h, v.size());
  hash_bytes(h, v.data(), v.size_bytes());
}

}  // namespace

std::uint64_t content_hash(const MemorySnapshot& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  hash_value(h, s.snapshot_t_ms);
  hash_value(h, s.clips.size());
  for (const auto& c : s.clips) {
    hash_value(h, c->clip_index);
    hash_value(h, c->t_start_ms);
    hash_value(h, c->t_end_ms);
    hash_value(h, c->frame_count);
    hash_value(h, c->degraded);
    hash_span(h, c->short_term->data());
    hash_span(h, c->global);
    for (const auto& f : c->frame_refs) {
      hash_value(h, f.seq);
      hash_value(h, f.t_ms);
    }
  }
  if (s.long_term) hash_span(h, s.long_term->data());
  if (s.globals) hash_span(h, s.globals->data());
  return h;
}

MemoryBank::MemoryBank(MemoryConfig cfg, perception::FeatureProfile profile, backends::CompressorBackend& backend)
    : cfg_(cfg), profile_(profile), backend_(backend), long_term_(std::make_shared<const Matrix>()) {
  cfg_.validate();
  profile_.validate();
}

void MemoryBank::integrate_step(const std::vector<RecordPtr>& records, std::size_t upto, Matrix& long_term) const {
  // Recompute the last `window` rows of clips [0, upto) against all globals.
  const std::size_t first = upto > cfg_.window ? upto - cfg_.window : 0;
  std::vector<const Matrix*> shorts;
  for (std::size_t i = first; i < upto; ++i) shorts.push_back(records[i]->short_term.get());
  std::vector<Vector> globals;
  globals.reserve(upto);
  for (std::size_t i = 0; i < upto; ++i) globals.push_back(records[i]->global);
  const Matrix rows = integrate(shorts, globals, first, backend_);

  Matrix next(upto, profile_.channels);
  for (std::size_t r = 0; r < first; ++r) {
    std::copy(long_term.row(r).begin(), long_term.row(r).end(), next.row(r).begin());
  }
  for (std::size_t r = first; r < upto; ++r) {
    std::copy(rows.row(r - first).begin(), rows.row(r - first).end(), next.row(r).begin());
  }
  long_term = std::move(next);
}

RecordPtr MemoryBank::ingest(perception::ClipFeatures clip) {
  if (clip.features.cols() != profile_.channels ||
      clip.features.rows() != clip.frame_count * profile_.tokens_per_frame) {
    throw ProfileMismatch("clip features do not match the session profile");
  }
  auto rec = std::make_shared<ClipRecord>();
  rec->t_start_ms = clip.t_start_ms;
  rec->t_end_ms = clip.t_end_ms;
  rec->frame_count = clip.frame_count;
  for (auto i : evenly_spaced(clip.frames.size(), cfg_.frame_refs)) rec->frame_refs.push_back(clip.frames[i]);

  const Matrix h0 = init_short_term(clip.features, profile_, backend_);
  const Vector g0(profile_.channels, 0.0);
  auto compressed = compress_clip(clip.features, h0, g0, profile_, backend_);
  rec->short_term = std::make_shared<const Matrix>(std::move(compressed.short_term));
  rec->global = std::move(compressed.global);
  rec->degraded = compressed.degraded;
  if (cfg_.keep_clip_features) rec->features = std::make_shared<const Matrix>(std::move(clip.features));

  std::vector<RecordPtr> records;
  Matrix long_term;
  {
    std::lock_guard lock(mu_);
    rec->clip_index = records_.size();
    records = records_;
    long_term = *long_term_;
  }
  records.push_back(rec);
  integrate_step(records, records.size(), long_term);
  {
    std::lock_guard lock(mu_);
    records_ = std::move(records);
    long_term_ = std::make_shared<const Matrix>(std::move(long_term));
  }
  return rec;
}

std::shared_ptr<const Matrix> MemoryBank::long_term_for_prefix(std::size_t count) const {
  // Caller holds mu_.
  if (count == records_.size()) return long_term_;
  Matrix lt;
  for (std::size_t i = 1; i <= count; ++i) integrate_step(records_, i, lt);
  return std::make_shared<const Matrix>(std::move(lt));
}

std::shared_ptr<const Matrix> MemoryBank::globals_for_prefix(std::size_t count) const {
  Matrix g(count, profile_.channels);
  for (std::size_t i = 0; i < count; ++i) {
    std::copy(records_[i]->global.begin(), records_[i]->global.end(), g.row(i).begin());
  }
  return std::make_shared<const Matrix>(std::move(g));
}

SnapshotPtr MemoryBank::snapshot(std::int64_t t_ms) {
  std::lock_guard lock(mu_);
  auto snap = std::make_shared<MemorySnapshot>();
  snap->snapshot_t_ms = t_ms;
  std::size_t count = 0;
  while (count < records_.size() && records_[count]->t_end_ms <= t_ms) ++count;
  snap->clips.assign(records_.begin(), records_.begin() + static_cast<std::ptrdiff_t>(count));
  snap->long_term = long_term_for_prefix(count);
  snap->globals = globals_for_prefix(count);
  snapshots_.push_back(snap);
  if (snapshots_.size() > cfg_.max_snapshots) snapshots_.erase(snapshots_.begin());
  return snap;
}

SnapshotPtr MemoryBank::restore_for_grounding(std::int64_t t_ms) const {
  std::lock_guard lock(mu_);
  for (auto it = snapshots_.rbegin(); it != snapshots_.rend(); ++it) {
    if ((*it)->snapshot_t_ms <= t_ms) return *it;
  }
  auto cold = std::make_shared<MemorySnapshot>();
  cold->snapshot_t_ms = t_ms;
  cold->long_term = std::make_shared<const Matrix>();
  cold->globals = std::make_shared<const Matrix>(0, profile_.channels);
  return cold;
}

SnapshotPtr MemoryBank::live_view() const {
  std::lock_guard lock(mu_);
  auto snap = std::make_shared<MemorySnapshot>();
  snap->snapshot_t_ms = records_.empty() ? 0 : records_.back()->t_end_ms;
  snap->clips = records_;
  snap->long_term = long_term_;
  snap->globals = globals_for_prefix(records_.size());
  return snap;
}

void MemoryBank::load(const MemorySnapshot& s) {
  std::lock_guard lock(mu_);
  records_ = s.clips;
  long_term_ = s.long_term ? s.long_term : std::make_shared<const Matrix>();
  snapshots_.clear();
}

std::size_t MemoryBank::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::size_t MemoryBank::snapshot_count() const {
  std::lock_guard lock(mu_);
  return snapshots_.size();
}

}  // namespace ol::memory
