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

#include "mtr/benchmark.hpp"
#include "mtr/config.hpp"

namespace mtr::testing {

// Two small datasets, enough for a few dozen training steps.
inline BenchmarkSpec toy_spec(std::uint64_t seed = 3) {
  BenchmarkSpec s;
  s.name = "toy";
  s.seed = seed;
  s.latent_dim = 6;
  s.batch_size = 8;
  s.datasets = {{"ident", TaskFamily::kIdentity, 48, 8, 8, 32, 0.1, 0},
                {"rot", TaskFamily::kRotation, 32, 8, 8, 32, 0.1, 0}};
  return s;
}

inline TrainConfig toy_config(InterpMode mode = InterpMode::kSlerp) {
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.epochs = 2;
  c.batch_size = 8;
  c.dim = 8;
  c.rank = 2;
  c.hidden = 12;
  c.interp = mode;
  return c;
}

}  // namespace mtr::testing
