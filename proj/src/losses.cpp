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

#include "mtr/losses.hpp"

#include <algorithm>
#include <cmath>

#include "mtr/error.hpp"
#include "mtr/ops.hpp"

namespace mtr {

Var info_nce(Tape& tape, Var queries, Var targets, double tau) {
  const Var logits = ops::scale(tape, ops::matmul_nt(tape, queries, targets), 1.0 / tau);
  return ops::softmax_xent_diag(tape, logits);
}

double info_nce(const std::vector<UnitVector>& queries, const std::vector<UnitVector>& targets,
                double tau) {
  if (queries.size() != targets.size() || queries.empty()) {
    throw ShapeMismatch("info_nce needs equally many (>0) queries and targets");
  }
  const std::size_t n = queries.size();
  std::vector<double> logits(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      logits[j] = dot(queries[i].values(), targets[j].values()) / tau;
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (double z : logits) s += std::exp(z - m);
    loss += m + std::log(s) - logits[i];
  }
  return loss / static_cast<double>(n);
}

LossVars total_loss(Tape& tape, const RetrievalModel& model, const Batch& batch,
                    const TrainConfig& config) {
  if (batch.empty()) throw ConfigError("empty training batch");
  const std::size_t dataset = batch.front()->dataset_id;
  for (const Sample* s : batch) {
    if (s->dataset_id != dataset) throw ConfigError("training batch mixes datasets");
  }
  const QueryEncoding q = model.encode_queries(tape, batch);
  const Var t = model.encode_targets(tape, batch);

  LossVars vars;
  vars.ret = info_nce(tape, q.q, t, config.tau);
  vars.total = vars.ret;
  if (q.calibration) {
    vars.ortho = ops::mean_all(tape, q.calibration->ortho);
    vars.reg = ops::mean_all(tape, q.calibration->reg);
    vars.total = ops::add(tape, vars.total, ops::scale(tape, vars.ortho, config.beta_ortho));
    vars.total = ops::add(tape, vars.total, ops::scale(tape, vars.reg, config.beta_reg));
  }
  return vars;
}

LossBreakdown breakdown(Tape& tape, const LossVars& vars) {
  LossBreakdown b;
  b.ret = tape.value(vars.ret)[0];
  if (vars.ortho.valid()) b.ortho = tape.value(vars.ortho)[0];
  if (vars.reg.valid()) b.reg = tape.value(vars.reg)[0];
  b.total = tape.value(vars.total)[0];
  return b;
}

}  // namespace mtr
