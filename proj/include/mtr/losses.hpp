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

#include <vector>

#include "mtr/config.hpp"
#include "mtr/model.hpp"
#include "mtr/sphere.hpp"
#include "mtr/tape.hpp"

namespace mtr {

// Components of total = ret + beta_ortho * ortho + beta_reg * reg.
struct LossBreakdown {
  double ret = 0.0;
  double ortho = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct LossVars {
  Var ret;
  Var ortho;  // invalid without a calibrator
  Var reg;    // invalid without a calibrator
  Var total;
};

// In-batch contrastive loss: mean over i of -log softmax_j(q_i . t_j / tau)[i].
Var info_nce(Tape& tape, Var queries, Var targets, double tau);
// Same quantity on plain vectors, log-sum-exp stabilized.
double info_nce(const std::vector<UnitVector>& queries, const std::vector<UnitVector>& targets,
                double tau);

// Builds the full objective for one single-dataset batch. Regularizers are
// per-instance values averaged over the batch.
LossVars total_loss(Tape& tape, const RetrievalModel& model, const Batch& batch,
                    const TrainConfig& config);
LossBreakdown breakdown(Tape& tape, const LossVars& vars);

}  // namespace mtr
