#include <cmath>

#include "ol/common/error.hpp"
#include "ol/kernels/kernels.hpp"

namespace ol::kernels::serial {

void cosine_scores(std::span<const double> q, const Matrix& rows, std::span<double> out) {
  if (rows.rows() != out.size()) throw ArgumentError("cosine_scores: output size mismatch");
  if (rows.rows() > 0 && rows.cols() != q.size()) throw ArgumentError("cosine_scores: dimension mismatch");
  const double qn = l2_norm(q);
  for (std::size_t j = 0; j < rows.rows(); ++j) {
    auto r = rows.row(j);
    double d = 0.0;
    double rr = 0.0;
    for (std::size_t c = 0; c < r.size(); ++c) {
      d += q[c] * r[c];
      rr += r[c] * r[c];
    }
    const double denom = qn * std::sqrt(rr);
    out[j] = denom > 0.0 ? d / denom : 0.0;
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
  for (std::size_t o = 0; o < frames * groups; ++o) {
    const std::size_t first = (o / groups) * tokens_per_frame + (o % groups) * width;
    auto dst = out.row(o);
    for (std::size_t i = 0; i < width; ++i) {
      auto src = tokens.row(first + i);
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
    for (std::size_t c = 0; c < cols; ++c) dst[c] /= static_cast<double>(width);
  }
  return out;
}

Vector column_mean(const Matrix& m) {
  Vector out(m.cols(), 0.0);
  if (m.rows() == 0) return out;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) acc += m(r, c);
    out[c] = acc / static_cast<double>(m.rows());
  }
  return out;
}

}  // namespace ol::kernels::serial
