// Copyright 2026 The LPL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lpl {

/// Dense row-major matrix of doubles. Vectors are passed around as spans.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Rows of `source` picked by `indices`, in order.
Matrix gather_rows(const Matrix& source, std::span<const std::size_t> indices);

double dot(std::span<const double> u, std::span<const double> v);
double l2_norm(std::span<const double> u);
double max_abs_diff(const Matrix& a, const Matrix& b);

struct CosineResult {
  double value = 0.0;
  /// Set when either input has zero norm; `value` is then 0.
  bool degenerate = false;
};

CosineResult cosine(std::span<const double> u, std::span<const double> v);

/// Gradient of cos(p, v) with respect to p. Zero when either norm is zero.
void cosine_grad_wrt_first(std::span<const double> p, std::span<const double> v,
                           std::span<double> out);

/// softmax(scores / temperature), max-subtracted.
std::vector<double> softmax(std::span<const double> scores, double temperature);

/// Throws a numeric error naming `what` if any entry is NaN or infinite.
void ensure_finite(const Matrix& m, const char* what);

}  // namespace lpl
