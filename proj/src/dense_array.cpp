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

#include "mtr/dense_array.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "mtr/error.hpp"

namespace mtr {
namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

DenseArray::DenseArray(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

DenseArray::DenseArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeMismatch("data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_string());
  }
}

DenseArray DenseArray::row_vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return DenseArray({1, n}, std::move(values));
}

DenseArray DenseArray::from_rows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeMismatch("ragged initializer rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseArray({r, c}, std::move(data));
}

DenseArray DenseArray::identity(std::size_t n) {
  DenseArray out = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::size_t DenseArray::rows() const {
  if (shape_.empty()) return 0;
  return shape_.size() == 1 ? 1 : shape_.front();
}

std::size_t DenseArray::cols() const { return shape_.empty() ? 0 : shape_.back(); }

bool DenseArray::same_shape(const DenseArray& other) const {
  return rows() == other.rows() && cols() == other.cols();
}

bool DenseArray::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void DenseArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void DenseArray::accumulate(const DenseArray& other) {
  require_same_shape(*this, other, "accumulate");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

double DenseArray::squared_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return s;
}

DenseArray DenseArray::transposed() const {
  DenseArray out = matrix(cols(), rows());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t c = 0; c < cols(); ++c) out(c, r) = (*this)(r, c);
  }
  return out;
}

std::string DenseArray::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

void require_same_shape(const DenseArray& a, const DenseArray& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch(std::string(what) + ": " + a.shape_string() + " vs " +
                        b.shape_string());
  }
}

}  // namespace mtr
