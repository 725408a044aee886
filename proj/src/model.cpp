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

#include "mtr/model.hpp"

#include <algorithm>
#include <cmath>

#include "mtr/error.hpp"
#include "mtr/ops.hpp"

namespace mtr {
namespace {

constexpr std::size_t kEmbedChunk = 256;

std::vector<UnitVector> rows_as_unit(const DenseArray& a) {
  std::vector<UnitVector> out;
  out.reserve(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    out.push_back(UnitVector::checked(std::vector<double>(r.begin(), r.end()), 1e-6));
  }
  return out;
}

}  // namespace

DualEncoder::DualEncoder(std::size_t feature_dim, std::size_t instruction_count,
                         std::size_t dim)
    : feature_dim_(feature_dim), instruction_count_(instruction_count), dim_(dim) {
  if (feature_dim_ == 0 || dim_ == 0) throw ConfigError("encoder dimensions must be positive");
}

void DualEncoder::register_parameters(ParameterSet& params, Rng& rng) const {
  const std::size_t query_in = feature_dim_ + instruction_count_;
  params.add(kQueryWeight, gaussian_matrix(rng, query_in, dim_, 1.0 / std::sqrt(query_in)));
  params.add(kQueryBias, DenseArray::matrix(1, dim_));
  params.add(kQueryRet, gaussian_matrix(rng, 1, dim_, 0.02));
  params.add(kTargetWeight,
             gaussian_matrix(rng, feature_dim_, dim_, 1.0 / std::sqrt(feature_dim_)));
  params.add(kTargetBias, DenseArray::matrix(1, dim_));
  params.add(kTargetRet, gaussian_matrix(rng, 1, dim_, 0.02));
}

DenseArray DualEncoder::query_inputs(const Batch& batch) const {
  DenseArray x = DenseArray::matrix(batch.size(), feature_dim_ + instruction_count_);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = *batch[i];
    if (s.query_features.size() != feature_dim_) {
      throw DimensionMismatch("query features have width " +
                              std::to_string(s.query_features.size()) + ", encoder expects " +
                              std::to_string(feature_dim_));
    }
    if (s.instruction_id >= instruction_count_) {
      throw DimensionMismatch("instruction id " + std::to_string(s.instruction_id) +
                              " outside encoder vocabulary of " +
                              std::to_string(instruction_count_));
    }
    std::copy(s.query_features.begin(), s.query_features.end(), x.row(i).begin());
    x(i, feature_dim_ + s.instruction_id) = 1.0;
  }
  return x;
}

DenseArray DualEncoder::target_inputs(const Batch& batch) const {
  DenseArray x = DenseArray::matrix(batch.size(), feature_dim_);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = *batch[i];
    if (s.target_features.size() != feature_dim_) {
      throw DimensionMismatch("target features have width " +
                              std::to_string(s.target_features.size()) +
                              ", encoder expects " + std::to_string(feature_dim_));
    }
    std::copy(s.target_features.begin(), s.target_features.end(), x.row(i).begin());
  }
  return x;
}

Var DualEncoder::encode_queries(Tape& tape, const ParameterSet& params, Var inputs) const {
  Var h = ops::matmul(tape, inputs, tape.parameter(params, kQueryWeight));
  h = ops::tanh(tape, ops::add_row(tape, h, tape.parameter(params, kQueryBias)));
  h = ops::add_row(tape, h, tape.parameter(params, kQueryRet));
  return ops::normalize_rows(tape, h);
}

Var DualEncoder::encode_targets(Tape& tape, const ParameterSet& params, Var inputs) const {
  Var h = ops::matmul(tape, inputs, tape.parameter(params, kTargetWeight));
  h = ops::tanh(tape, ops::add_row(tape, h, tape.parameter(params, kTargetBias)));
  h = ops::add_row(tape, h, tape.parameter(params, kTargetRet));
  return ops::normalize_rows(tape, h);
}

RetrievalModel::RetrievalModel(std::size_t feature_dim, std::size_t instruction_count,
                               const TrainConfig& config)
    : encoder_(feature_dim, instruction_count, config.dim), interp_(config.interp) {
  if (config.use_calibrator()) calibrator_.emplace(config.calibrator());
}

void RetrievalModel::initialize(Rng& rng, FinalLayerInit calibrator_init) {
  params_ = ParameterSet();
  encoder_.register_parameters(params_, rng);
  if (calibrator_) calibrator_->register_parameters(params_, rng, calibrator_init);
}

QueryEncoding RetrievalModel::encode_queries(Tape& tape, const Batch& batch) const {
  QueryEncoding enc;
  const Var inputs = tape.constant(encoder_.query_inputs(batch));
  enc.q0 = encoder_.encode_queries(tape, params_, inputs);
  if (calibrator_) {
    enc.calibration = calibrator_->calibrate(tape, params_, enc.q0, interp_);
    enc.q = enc.calibration->query;
  } else {
    enc.q = enc.q0;
  }
  return enc;
}

Var RetrievalModel::encode_targets(Tape& tape, const Batch& batch) const {
  return encoder_.encode_targets(tape, params_, tape.constant(encoder_.target_inputs(batch)));
}

RetrievalModel::Embeddings RetrievalModel::embed_queries(
    const std::vector<Sample>& samples) const {
  Embeddings out;
  out.vectors.reserve(samples.size());
  for (std::size_t begin = 0; begin < samples.size(); begin += kEmbedChunk) {
    const std::size_t end = std::min(samples.size(), begin + kEmbedChunk);
    Tape tape(/*record_gradients=*/false);
    const QueryEncoding enc = encode_queries(tape, as_batch(samples, begin, end));
    auto vecs = rows_as_unit(tape.value(enc.q));
    std::move(vecs.begin(), vecs.end(), std::back_inserter(out.vectors));
    if (enc.calibration) {
      const DenseArray& lam = tape.value(enc.calibration->lambda);
      out.lambda.insert(out.lambda.end(), lam.values().begin(), lam.values().end());
    }
  }
  return out;
}

std::vector<UnitVector> RetrievalModel::embed_targets(const std::vector<Sample>& samples) const {
  std::vector<UnitVector> out;
  out.reserve(samples.size());
  for (std::size_t begin = 0; begin < samples.size(); begin += kEmbedChunk) {
    const std::size_t end = std::min(samples.size(), begin + kEmbedChunk);
    Tape tape(/*record_gradients=*/false);
    auto vecs = rows_as_unit(tape.value(encode_targets(tape, as_batch(samples, begin, end))));
    std::move(vecs.begin(), vecs.end(), std::back_inserter(out));
  }
  return out;
}

Batch as_batch(const std::vector<Sample>& samples, std::size_t begin, std::size_t end) {
  Batch b;
  b.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) b.push_back(&samples[i]);
  return b;
}

}  // namespace mtr
