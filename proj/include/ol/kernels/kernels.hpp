#pragma once

// Data-parallel inner loops of the memory module. `serial` is the reference
// kept for testing and benchmarking; `parallel` is what production code calls.
// Both namespaces produce bitwise-identical results: the OpenMP versions only
// split independent outputs across threads and never reorder a reduction.

#include <cstddef>
#include <span>

#include "ol/common/matrix.hpp"

namespace ol::kernels {

namespace serial {

// out[j] = cos(q, rows.row(j)); zero-norm operands score 0.
void cosine_scores(std::span<const double> q, const Matrix& rows, std::span<double> out);

// Per frame of `tokens_per_frame` rows, averages `tokens_per_frame / groups`
// contiguous tokens into each of `groups` output tokens.
Matrix group_mean(const Matrix& tokens, std::size_t tokens_per_frame, std::size_t groups);

// Mean over rows.
Vector column_mean(const Matrix& m);

}  // namespace serial

namespace parallel {

void cosine_scores(std::span<const double> q, const Matrix& rows, std::span<double> out);
Matrix group_mean(const Matrix& tokens, std::size_t tokens_per_frame, std::size_t groups);
Vector column_mean(const Matrix& m);

}  // namespace parallel

bool openmp_enabled() noexcept;

}  // namespace ol::kernels
