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
#include <string>
#include <vector>

#include "mtr/gradcheck.hpp"

namespace mtr {

struct GradcheckSuiteOptions {
  std::size_t dim = 16;
  std::size_t rank = 4;
  std::size_t hidden = 32;
  std::size_t batch = 8;
  double h = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct GradcheckCase {
  std::string name;  // op name, or "loss/<interp>" for the full objective
  GradCheckResult result;
  bool passed = false;
};

// Finite-difference checks of every differentiable primitive, then of the
// complete training objective (encoder, hypernetwork and retrieval biases)
// under each query-calibration mode.
std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& options);

}  // namespace mtr
