#include <cmath>

#include "ol/common/error.hpp"
#include "ol/kernels/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ol::kernels {

bool openmp_enabled() noexcept {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace parallel {

namespace {
// Below this many output elements thread start-up dominates.
constexpr std::ptrdiff_t kMinParallelWork = 64;
}  // namespace

void cosine_scores(std::span<const double> q, const Matrix& rows, std::span<double> out) {
  if (rows.rows() != out.size()) throw ArgumentError("cosine_scores: output size mismatch");
  if (rows.rows() > 0 && rows.cols() != q.size()) throw ArgumentError("cosine_scores: dimension mismatch");
  const double qn = l2_norm(q);
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
  const std::size_t cols = rows.cols();
  const double* qp = q.data();
  const double* base = rows.data().data();
  double* op = out.data();

#pragma omp parallel for schedule(static) if (n >= kMinParallelWork)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const double* r = base + static_cast<std::size_t>(j) * cols;
    double d = 0.0;
    double rr = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      d += qp[c] * r[c];
      rr += r[c] * r[c];
    }
    const double denom = qn * std::sqrt(rr);
    op[j] = denom > 0.0 ? d / denom : 0.0;
  }
}

Matrix group_mean(const Matrix& tokens, std::size_t tokens_per_frame, std::size_t groups) {
  if (groups == 0 || tokens_per_frame % groups != 0) {
    throw ArgumentError("group_mean: groups must divide tokens per frame");
  }
  if (tokens.rows() % tokens_per_frame != 0) {
    throw ArgumentError("group_mean: row count is not a whole number of frames");
  }
  const std::size_t frames = tokens.rows() / tokens_per_frame;
  const std::size_t width = tokens_per_frame / groups;
  const std::size_t cols = tokens.cols();
  Matrix out(frames * groups, cols);
  const auto n_out = static_cast<std::ptrdiff_t>(frames * groups);
  const double* src = tokens.data().data();
  double* dst = out.data().data();

#pragma omp parallel for schedule(static) if (n_out * static_cast<std::ptrdiff_t>(cols) >= kMinParallelWork * 16)
  for (std::ptrdiff_t o = 0; o < n_out; ++o) {
    const std::size_t uo = static_cast<std::size_t>(o);
    const std::size_t first = (uo / groups) * tokens_per_frame + (uo % groups) * width;
    double* d = dst + uo * cols;
    for (std::size_t i = 0; i < width; ++i) {
      const double* s = src + (first + i) * cols;
      for (std::size_t c = 0; c < cols; ++c) d[c] += s[c];
    }
    for (std::size_t c = 0; c < cols; ++c) d[c] /= static_cast<double>(width);
  }
  return out;
}

Vector column_mean(const Matrix& m) {
  Vector out(m.cols(), 0.0);
  if (m.rows() == 0) return out;
  const auto cols = static_cast<std::ptrdiff_t>(m.cols());
  const std::size_t rows = m.rows();
  const std::size_t stride = m.cols();
  const double* src = m.data().data();

  // Each column keeps the serial row order, so sums match bit for bit.
#pragma omp parallel for schedule(static) if (cols * static_cast<std::ptrdiff_t>(rows) >= kMinParallelWork * 64)
  for (std::ptrdiff_t c = 0; c < cols; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += src[r * stride + static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(c)] = acc / static_cast<double>(rows);
  }
  return out;
}

}  // namespace parallel
}  // namespace ol::kernels
