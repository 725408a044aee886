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

#include "mtr/rng.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mtr/error.hpp"

namespace mtr {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
  return splitmix64(splitmix64(root) ^ fnv1a64(stream));
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index) {
  return splitmix64(derive_seed(root, stream) + index);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

DenseArray gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  DenseArray out = DenseArray::matrix(rows, cols);
  for (double& x : out.values()) x = normal(rng);
  return out;
}

DenseArray random_orthonormal_columns(Rng& rng, std::size_t rows, std::size_t cols) {
  if (cols > rows) throw ShapeMismatch("cannot fit more orthonormal columns than rows");
  DenseArray m = gaussian_matrix(rng, rows, cols, 1.0);
  for (std::size_t j = 0; j < cols; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t r = 0; r < rows; ++r) proj += m(r, j) * m(r, k);
        for (std::size_t r = 0; r < rows; ++r) m(r, j) -= proj * m(r, k);
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < rows; ++r) norm += m(r, j) * m(r, j);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < rows; ++r) m(r, j) /= norm;
  }
  return m;
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void restore_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw Error("corrupt RNG state");
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace mtr
