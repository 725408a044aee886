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

#include "mtr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "mtr/error.hpp"

namespace mtr {
namespace {

double evaluate(ParameterSet& params, const TapedObjective& objective) {
  Tape tape(/*record_gradients=*/false);
  const double v = tape.value(objective(tape, params))[0];
  if (!std::isfinite(v)) throw NonFiniteValue("objective is not finite at a probe point");
  return v;
}

}  // namespace

const GradCheckEntry& GradCheckResult::worst() const {
  return *std::max_element(per_parameter.begin(), per_parameter.end(),
                           [](const auto& a, const auto& b) {
                             return a.max_rel_error < b.max_rel_error;
                           });
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult finite_difference_check(ParameterSet& params, const TapedObjective& objective,
                                        double h) {
  Gradients analytic;
  {
    Tape tape;
    const Var root = objective(tape, params);
    if (!std::isfinite(tape.value(root)[0])) {
      throw NonFiniteValue("objective is not finite at the base point");
    }
    tape.backward(root);
    analytic = tape.parameter_gradients(params);
  }

  GradCheckResult result;
  for (const auto& name : params.names()) {
    GradCheckEntry entry;
    entry.parameter = name;
    const DenseArray& grad = analytic.at(name);
    const std::size_t n = params.get(name).size();
    for (std::size_t i = 0; i < n; ++i) {
      double& x = params.get_mut(name)[i];
      const double saved = x;
      x = saved + h;
      const double fp = evaluate(params, objective);
      x = saved - h;
      const double fm = evaluate(params, objective);
      x = saved;
      result.probes += 2;

      const double numeric = (fp - fm) / (2.0 * h);
      const double err = relative_error(grad[i], numeric);
      if (i == 0 || err > entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = i;
        entry.analytic = grad[i];
        entry.numeric = numeric;
      }
    }
    result.max_rel_error = std::max(result.max_rel_error, entry.max_rel_error);
    result.per_parameter.push_back(std::move(entry));
  }
  return result;
}

}  // namespace mtr
