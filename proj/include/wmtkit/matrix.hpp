#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "wmtkit/random.hpp"

namespace wmtkit::kernels {

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Throws std::invalid_argument if data.size() != rows * cols.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Nested-list literal; rows must have equal length.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  /// Entries uniform in [-scale, scale).
  static Matrix random(std::size_t rows, std::size_t cols, rng::Engine& engine, double scale = 1.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const;
  /// Columns [begin, begin + count).
  Matrix col_slice(std::size_t begin, std::size_t count) const;
  /// Rows [begin, begin + count).
  Matrix row_slice(std::size_t begin, std::size_t count) const;

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// All binary ops throw std::invalid_argument on a shape mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
/// Adds a 1 x cols row vector to every row.
Matrix add_row_vector(const Matrix& a, const Matrix& bias);
Matrix relu(const Matrix& a);
Matrix hconcat(std::span<const Matrix> parts);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace wmtkit::kernels
