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
#include <optional>
#include <vector>

#include "mtr/benchmark.hpp"
#include "mtr/calibrator.hpp"
#include "mtr/config.hpp"
#include "mtr/parameters.hpp"
#include "mtr/rng.hpp"
#include "mtr/sphere.hpp"
#include "mtr/tape.hpp"

namespace mtr {

using Batch = std::vector<const Sample*>;

// Toy stand-in for a large multimodal encoder. Each side is one affine map
// with tanh, plus an additive learnable retrieval-bias vector (r_q, r_t) that
// every embedding passes through, then L2 normalization:
//   q0 = normalize(tanh(W_q [x_q ; onehot(instruction)] + b_q) + r_q)
//   t  = normalize(tanh(W_t x_t + b_t) + r_t)
class DualEncoder {
 public:
  DualEncoder(std::size_t feature_dim, std::size_t instruction_count, std::size_t dim);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t instruction_count() const { return instruction_count_; }
  std::size_t dim() const { return dim_; }

  void register_parameters(ParameterSet& params, Rng& rng) const;

  // [query_features ; onehot(instruction_id)] per row.
  DenseArray query_inputs(const Batch& batch) const;
  DenseArray target_inputs(const Batch& batch) const;

  Var encode_queries(Tape& tape, const ParameterSet& params, Var inputs) const;
  Var encode_targets(Tape& tape, const ParameterSet& params, Var inputs) const;

  static constexpr const char* kQueryWeight = "enc.query.weight";
  static constexpr const char* kQueryBias = "enc.query.bias";
  static constexpr const char* kQueryRet = "enc.query.ret";
  static constexpr const char* kTargetWeight = "enc.target.weight";
  static constexpr const char* kTargetBias = "enc.target.bias";
  static constexpr const char* kTargetRet = "enc.target.ret";

 private:
  std::size_t feature_dim_;
  std::size_t instruction_count_;
  std::size_t dim_;
};

struct QueryEncoding {
  Var q0;
  Var q;
  std::optional<CalibratedBatch> calibration;
};

// Dual encoder plus optional query calibrator, with all weights in one
// ParameterSet.
class RetrievalModel {
 public:
  RetrievalModel(std::size_t feature_dim, std::size_t instruction_count,
                 const TrainConfig& config);

  void initialize(Rng& rng, FinalLayerInit calibrator_init = FinalLayerInit::kLowRankAdapter);

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }
  const DualEncoder& encoder() const { return encoder_; }
  // Null when the interpolation mode is kNone.
  const HyperNetwork* calibrator() const { return calibrator_ ? &*calibrator_ : nullptr; }
  InterpMode interp() const { return interp_; }

  QueryEncoding encode_queries(Tape& tape, const Batch& batch) const;
  Var encode_targets(Tape& tape, const Batch& batch) const;

  struct Embeddings {
    std::vector<UnitVector> vectors;
    std::vector<double> lambda;  // per query; empty without a calibrator
  };
  // Forward-only embedding, chunked; safe to call concurrently.
  Embeddings embed_queries(const std::vector<Sample>& samples) const;
  std::vector<UnitVector> embed_targets(const std::vector<Sample>& samples) const;

 private:
  DualEncoder encoder_;
  std::optional<HyperNetwork> calibrator_;
  InterpMode interp_;
  ParameterSet params_;
};

Batch as_batch(const std::vector<Sample>& samples, std::size_t begin, std::size_t end);

}  // namespace mtr
