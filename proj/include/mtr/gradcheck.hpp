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

#include <functional>
#include <string>
#include <vector>

#include "mtr/parameters.hpp"
#include "mtr/tape.hpp"

namespace mtr {

// Builds a scalar objective on `tape` from the current values in `params`.
// Must bind parameters through Tape::parameter so gradients can be read back.
using TapedObjective = std::function<Var(Tape& tape, const ParameterSet& params)>;

struct GradCheckEntry {
  std::string parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double max_rel_error = 0.0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::vector<GradCheckEntry> per_parameter;
  std::size_t probes = 0;

  const GradCheckEntry& worst() const;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Compares reverse-mode gradients of `objective` against central differences
// (f(x+h) - f(x-h)) / 2h for every scalar of every parameter. `params` is
// perturbed in place and restored before returning. Throws NonFiniteValue if
// the objective is NaN/Inf at any probe.
GradCheckResult finite_difference_check(ParameterSet& params, const TapedObjective& objective,
                                        double h = 1e-5);

}  // namespace mtr
