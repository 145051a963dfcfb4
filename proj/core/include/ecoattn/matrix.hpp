/* Copyright 2026 The EcoAttn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef ECOATTN_MATRIX_HPP_
#define ECOATTN_MATRIX_HPP_

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ecoattn {

/// Dense row-major matrix of 64-bit reals. Values are immutable in spirit:
/// every operation below returns a fresh matrix, and the summation order
/// inside each operation is fixed (left to right over the shared index) so
/// that repeated runs produce bit-identical results.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;
  std::string shape_str() const;  // "(rows x cols)", for error messages

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Standard product; throws DimensionError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Row-wise softmax with per-row max subtraction. Every output row is
/// nonnegative and sums to 1 within 1e-12. Throws NumericError on an empty
/// matrix.
Matrix softmax_rows(const Matrix& m);

/// Scales every row to unit L2 norm. A row with norm below 1e-30 is
/// degenerate and raises NumericError.
Matrix l2_normalize_rows(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double s);

/// max_ij |a_ij - b_ij|; shapes must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Formats one double with 17 significant digits ('.' decimal separator,
/// locale independent); round-trips exactly through read_matrix.
std::string format_double(double v);

/// Fixture text format: first line "rows cols", then one whitespace-separated
/// row per line at full round-trip precision.
void write_matrix(std::ostream& out, const Matrix& m);
Matrix read_matrix(std::istream& in);
void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

}  // namespace ecoattn

#endif  // ECOATTN_MATRIX_HPP_
