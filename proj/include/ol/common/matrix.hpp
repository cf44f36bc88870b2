#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ol {

using Vector = std::vector<double>;

// Dense row-major matrix. Rows are tokens, columns are feature channels.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix row_vector(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  // Appends the rows of `other` below this matrix. An empty matrix adopts
  // the column count of the first block appended to it.
  void append_rows(const Matrix& other);
  void append_row(std::span<const double> row);

  Matrix slice_rows(std::size_t first, std::size_t count) const;

  bool all_finite() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Returns v / ||v||; a zero vector maps to the first basis vector so callers
// always receive a unit vector.
Vector normalized(std::span<const double> v);

}  // namespace ol
