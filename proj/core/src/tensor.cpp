// Copyright 2026 The mtltag Authors
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

#include "mtltag/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mtltag {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("tensor data length does not match shape");
  }
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor(1, values.size(), std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw std::invalid_argument("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor(n, m, std::move(data));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::squared_norm() const noexcept {
  double sum = 0.0;
  for (double v : data_) sum += v * v;
  return sum;
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (!same_shape(other)) throw std::invalid_argument("shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor& Tensor::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

std::string Tensor::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

void matmul_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = out.row_span(i).data();
    const double* arow = a.row_span(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row_span(p).data();
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_at_b_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  // a: n x k, b: n x m, out: k x m
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.row_span(i).data();
    const double* brow = b.row_span(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* orow = out.row_span(p).data();
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_a_bt_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  // a: n x m, b: k x m, out: n x k
  const std::size_t n = a.rows(), m = a.cols(), k = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a.row_span(i).data();
    double* orow = out.row_span(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b.row_span(p).data();
      double sum = 0.0;
      for (std::size_t j = 0; j < m; ++j) sum += arow[j] * brow[j];
      orow[p] += sum;
    }
  }
}

}  // namespace mtltag
