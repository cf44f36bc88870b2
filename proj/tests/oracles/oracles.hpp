#pragma once

// Test oracles. Each one restates a rule from its definition with the
// plainest code possible and shares no code with the implementation it
// checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

namespace oracle {

// ---- VAD ----------------------------------------------------------------
//
// Works on run lengths of voiced/unvoiced 256-sample windows instead of a
// per-chunk state machine:
//   onset   = first window of a voiced run lasting >= onset windows
//   offset  = end of the first unvoiced run lasting >= hangover windows that
//             starts after the onset run; stream end if there is none
// Scanning resumes at the offset.

struct Segment {
  std::int64_t start_ms;
  std::int64_t end_ms;
};

inline std::vector<bool> voiced_windows(const std::vector<std::int16_t>& pcm, double threshold) {
  std::vector<bool> out;
  for (std::size_t w = 0; w * 256 < pcm.size(); ++w) {
    const std::size_t n = std::min<std::size_t>(256, pcm.size() - w * 256);
    long double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const long double s = pcm[w * 256 + i];
      sum += s * s;
    }
    out.push_back(std::sqrt(static_cast<double>(sum / n)) >= threshold);
  }
  return out;
}

inline std::vector<Segment> vad_segments(const std::vector<std::int16_t>& pcm, double threshold,
                                         std::int64_t onset_ms, std::int64_t hangover_ms) {
  const auto v = voiced_windows(pcm, threshold);
  const std::size_t onset_w = static_cast<std::size_t>(onset_ms / 16);
  const std::size_t hang_w = static_cast<std::size_t>(hangover_ms / 16);
  const std::int64_t total_ms = static_cast<std::int64_t>(pcm.size()) * 1000 / 16000;
  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < v.size()) {
    if (!v[i]) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < v.size() && v[run_end]) ++run_end;
    if (run_end - i < onset_w) {
      i = run_end;
      continue;
    }
    const std::size_t start = i;
    std::size_t j = start + onset_w;
    std::optional<std::size_t> end_w;
    while (j < v.size()) {
      if (v[j]) {
        ++j;
        continue;
      }
      std::size_t quiet_end = j;
      while (quiet_end < v.size() && !v[quiet_end]) ++quiet_end;
      if (quiet_end - j >= hang_w) {
        end_w = j + hang_w;
        break;
      }
      j = quiet_end;
    }
    out.push_back({static_cast<std::int64_t>(start) * 16,
                   end_w ? static_cast<std::int64_t>(*end_w) * 16 : total_ms});
    if (!end_w) break;
    i = *end_w;
  }
  return out;
}

// ---- retrieval ------------------------------------------------------------
//
// Scores every clip, sorts the whole list by (score desc, index asc) and
// keeps the first top_k.

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0 || bb == 0) return 0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

inline std::vector<std::size_t> brute_force_top_k(const std::vector<double>& q,
                                                  const std::vector<std::vector<double>>& globals,
                                                  std::size_t top_k, double lambda = 0.0) {
  const std::size_t k = globals.size();
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t j = 0; j < k; ++j) {
    double s = cosine(q, globals[j]);
    if (lambda != 0.0 && k > 1) s += lambda * static_cast<double>(j) / static_cast<double>(k - 1);
    scored.emplace_back(s, j);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < std::min(top_k, k); ++r) out.push_back(scored[r].second);
  return out;
}

// ---- spatial down-sampling ---------------------------------------------------
//
// Row-major tokens (rows x cols). Output token p of frame f is the mean of
// input tokens f*N + p*(N/P) .. f*N + (p+1)*(N/P) - 1.

inline std::vector<std::vector<double>> group_mean(const std::vector<std::vector<double>>& tokens, std::size_t n,
                                                   std::size_t p) {
  const std::size_t g = n / p;
  std::vector<std::vector<double>> out;
  for (std::size_t f = 0; f * n < tokens.size(); ++f) {
    for (std::size_t o = 0; o < p; ++o) {
      std::vector<double> acc(tokens[0].size(), 0.0);
      for (std::size_t t = 0; t < g; ++t) {
        const auto& row = tokens[f * n + o * g + t];
        for (std::size_t c = 0; c < row.size(); ++c) acc[c] += row[c];
      }
      for (auto& x : acc) x /= static_cast<double>(g);
      out.push_back(acc);
    }
  }
  return out;
}

// ---- FIFO model ------------------------------------------------------------

template <typename T>
struct DropOldestModel {
  std::size_t capacity;
  std::deque<T> items;
  std::optional<T> push(T x) {
    std::optional<T> evicted;
    if (items.size() == capacity) {
      evicted = items.front();
      items.pop_front();
    }
    items.push_back(x);
    return evicted;
  }
  std::optional<T> pop() {
    if (items.empty()) return std::nullopt;
    T x = items.front();
    items.pop_front();
    return x;
  }
};

// ---- nearest-rank percentile -------------------------------------------------

inline double nearest_rank(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  std::size_t rank = 1;
  while (static_cast<double>(rank) < p / 100.0 * static_cast<double>(v.size())) ++rank;
  return v[rank - 1];
}

}  // namespace oracle
