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

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

#include "mtr/dense_array.hpp"

namespace mtr {

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

// Independent seed for a named stream ("benchmark", "init", "sampling",
// "shuffle", ...) derived from one root seed.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream, std::uint64_t index);

// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

// Gaussian matrix with the given standard deviation.
DenseArray gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev);
// Random matrix with orthonormal columns (rows >= cols), from Gram-Schmidt
// on a Gaussian draw with a second re-orthogonalization pass.
DenseArray random_orthonormal_columns(Rng& rng, std::size_t rows, std::size_t cols);

std::string rng_state(const Rng& rng);
void restore_rng_state(Rng& rng, const std::string& state);

std::string hex64(std::uint64_t v);

}  // namespace mtr
