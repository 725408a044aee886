// Copyright 2026 The mtr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
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
#include <string>
#include <vector>

namespace mtr {

// Row-major dense array of doubles. Rank 1 arrays behave as a single row, so
// every kernel can treat its operands as matrices.
class DenseArray {
 public:
  DenseArray() = default;
  explicit DenseArray(std::vector<std::size_t> shape, double fill = 0.0);
  DenseArray(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseArray matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return DenseArray({rows, cols}, fill);
  }
  static DenseArray row_vector(std::vector<double> values);
  static DenseArray scalar(double value) { return DenseArray({1, 1}, value); }
  static DenseArray from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseArray identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols(), cols()};
  }
  const std::vector<double>& storage() const { return data_; }

  bool same_shape(const DenseArray& other) const;
  bool all_finite() const;
  void fill(double value);
  // this += other (same shape).
  void accumulate(const DenseArray& other);
  double squared_norm() const;
  DenseArray transposed() const;

  std::string shape_string() const;

  friend bool operator==(const DenseArray&, const DenseArray&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Throws ShapeMismatch naming `what` unless a.shape() == b.shape().
void require_same_shape(const DenseArray& a, const DenseArray& b, const char* what);

}  // namespace mtr
