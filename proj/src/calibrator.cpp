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

#include "mtr/calibrator.hpp"

#include <cmath>

#include "mtr/error.hpp"
#include "mtr/ops.hpp"

namespace mtr {

const char* to_string(InterpMode mode) {
  switch (mode) {
    case InterpMode::kSlerp: return "slerp";
    case InterpMode::kLinear: return "linear";
    case InterpMode::kProposalOnly: return "proposal_only";
    case InterpMode::kNone: return "none";
  }
  return "?";
}

InterpMode parse_interp_mode(const std::string& s) {
  if (s == "slerp") return InterpMode::kSlerp;
  if (s == "linear") return InterpMode::kLinear;
  if (s == "proposal_only") return InterpMode::kProposalOnly;
  if (s == "none") return InterpMode::kNone;
  throw ConfigError("unknown interpolation mode '" + s + "'");
}

HyperNetwork::HyperNetwork(CalibratorConfig config) : config_(config) {
  if (config_.rank == 0 || config_.rank >= config_.dim) {
    throw ConfigError("calibrator rank must satisfy 0 < d < D (d=" +
                      std::to_string(config_.rank) + ", D=" + std::to_string(config_.dim) + ")");
  }
  if (!config_.shared_params && config_.hidden == 0) {
    throw ConfigError("calibrator hidden width must be positive");
  }
}

void HyperNetwork::register_parameters(ParameterSet& params, Rng& rng,
                                       FinalLayerInit init) const {
  const std::size_t dim = config_.dim, rank = config_.rank;
  DenseArray bias = DenseArray::matrix(1, output_width());
  if (init == FinalLayerInit::kLowRankAdapter) {
    const DenseArray a = random_orthonormal_columns(rng, dim, rank);
    for (std::size_t i = 0; i < a.size(); ++i) bias[i] = a[i];
  }
  if (config_.shared_params) {
    params.add(kShared, std::move(bias));
    return;
  }
  params.add(kHiddenWeight, gaussian_matrix(rng, dim, config_.hidden, 1.0 / std::sqrt(dim)));
  params.add(kHiddenBias, DenseArray::matrix(1, config_.hidden));
  params.add(kHeadWeight, DenseArray::matrix(config_.hidden, output_width()));
  params.add(kHeadBias, std::move(bias));
}

Var HyperNetwork::head(Tape& tape, const ParameterSet& params, Var q0) const {
  const DenseArray& qv = tape.value(q0);
  if (qv.cols() != config_.dim) {
    throw ShapeMismatch("hypernetwork expects width " + std::to_string(config_.dim) +
                        ", got " + qv.shape_string());
  }
  if (config_.shared_params) {
    return ops::broadcast_rows(tape, tape.parameter(params, kShared), qv.rows());
  }
  const Var input = config_.detach_input ? ops::detach(tape, q0) : q0;
  Var h = ops::matmul(tape, input, tape.parameter(params, kHiddenWeight));
  h = ops::tanh(tape, ops::add_row(tape, h, tape.parameter(params, kHiddenBias)));
  Var out = ops::matmul(tape, h, tape.parameter(params, kHeadWeight));
  return ops::add_row(tape, out, tape.parameter(params, kHeadBias));
}

CalibratedBatch HyperNetwork::calibrate(Tape& tape, const ParameterSet& params, Var q0,
                                        InterpMode mode) const {
  const std::size_t dim = config_.dim, rank = config_.rank, block = block_size();
  const Var out = head(tape, params, q0);
  const Var down = ops::slice_cols(tape, out, 0, block);
  const Var up = ops::slice_cols(tape, out, block, 2 * block);
  const Var logit = ops::slice_cols(tape, out, 2 * block, 2 * block + 1);

  CalibratedBatch b;
  b.lambda = ops::sigmoid(tape, logit);
  const Var latent = ops::rowvec_matmul(tape, q0, down, rank);
  const Var delta = ops::rowvec_matmul(tape, latent, up, dim);
  b.proposal = ops::normalize_rows(tape, ops::add(tape, q0, delta));
  b.omega = ops::clamp_arccos(tape, ops::row_dot(tape, q0, b.proposal));
  b.ortho = ops::ortho_penalty(tape, down, rank);
  b.reg = ops::sum_squares_rows(tape, ops::slice_cols(tape, out, 0, 2 * block));

  switch (mode) {
    case InterpMode::kSlerp:
      b.query = ops::slerp_rows(tape, q0, b.proposal, b.lambda);
      break;
    case InterpMode::kLinear: {
      const Var keep = ops::affine(tape, b.lambda, -1.0, 1.0);
      const Var mix = ops::add(tape, ops::mul_col(tape, q0, keep),
                               ops::mul_col(tape, b.proposal, b.lambda));
      b.query = ops::normalize_rows(tape, mix);
      break;
    }
    case InterpMode::kProposalOnly:
      b.query = b.proposal;
      break;
    case InterpMode::kNone:
      b.query = q0;
      break;
  }
  return b;
}

std::vector<AdaptationParams> HyperNetwork::predict_params(const std::vector<UnitVector>& q0,
                                                           const ParameterSet& params) const {
  const std::size_t dim = config_.dim, rank = config_.rank, block = block_size();
  DenseArray batch = DenseArray::matrix(q0.size(), dim);
  for (std::size_t i = 0; i < q0.size(); ++i) {
    if (q0[i].dim() != dim) {
      throw ShapeMismatch("hypernetwork expects width " + std::to_string(dim) + ", got " +
                          std::to_string(q0[i].dim()));
    }
    std::copy(q0[i].values().begin(), q0[i].values().end(), batch.row(i).begin());
  }
  Tape tape(/*record_gradients=*/false);
  const DenseArray& out = tape.value(head(tape, params, tape.constant(std::move(batch))));

  std::vector<AdaptationParams> result(q0.size());
  for (std::size_t i = 0; i < q0.size(); ++i) {
    auto row = out.row(i);
    AdaptationParams& p = result[i];
    p.down = DenseArray({dim, rank}, std::vector<double>(row.begin(), row.begin() + block));
    p.up = DenseArray({rank, dim},
                      std::vector<double>(row.begin() + block, row.begin() + 2 * block));
    const double logit = row[2 * block];
    p.lambda = 1.0 / (1.0 + std::exp(-logit));
  }
  return result;
}

AdaptationParams HyperNetwork::predict_params(const UnitVector& q0,
                                              const ParameterSet& params) const {
  return std::move(predict_params(std::vector<UnitVector>{q0}, params).front());
}

UnitVector make_proposal(const UnitVector& q0, const AdaptationParams& p) {
  const std::size_t dim = q0.dim();
  const std::size_t rank = p.down.cols();
  if (p.down.rows() != dim || p.up.rows() != rank || p.up.cols() != dim) {
    throw ShapeMismatch("adaptation params " + p.down.shape_string() + ", " +
                        p.up.shape_string() + " do not fit dimension " + std::to_string(dim));
  }
  std::vector<double> latent(rank, 0.0);
  for (std::size_t r = 0; r < dim; ++r)
    for (std::size_t j = 0; j < rank; ++j) latent[j] += q0[r] * p.down(r, j);
  std::vector<double> sum(q0.values().begin(), q0.values().end());
  for (std::size_t j = 0; j < rank; ++j)
    for (std::size_t c = 0; c < dim; ++c) sum[c] += latent[j] * p.up(j, c);
  return normalize(sum);
}

CalibrationOutput calibrate(const UnitVector& q0, const AdaptationParams& p, InterpMode mode) {
  CalibrationOutput out;
  out.proposal = make_proposal(q0, p);
  out.lambda = p.lambda;
  out.omega = angle(q0, out.proposal);
  out.ortho_loss = ortho_loss(p.down);
  out.reg_loss = frob_loss(p.down, p.up);
  switch (mode) {
    case InterpMode::kSlerp:
      out.query = slerp(q0, out.proposal, p.lambda);
      break;
    case InterpMode::kLinear: {
      std::vector<double> mix(q0.dim());
      for (std::size_t i = 0; i < mix.size(); ++i)
        mix[i] = (1.0 - p.lambda) * q0[i] + p.lambda * out.proposal[i];
      out.query = normalize(mix);
      break;
    }
    case InterpMode::kProposalOnly:
      out.query = out.proposal;
      break;
    case InterpMode::kNone:
      out.query = q0;
      break;
  }
  return out;
}

CalibrationOutput calibrate(const UnitVector& q0, const HyperNetwork& net,
                            const ParameterSet& params, InterpMode mode) {
  return calibrate(q0, net.predict_params(q0, params), mode);
}

double ortho_loss(const DenseArray& down) {
  const std::size_t rows = down.rows(), rank = down.cols();
  double s = 0.0;
  for (std::size_t i = 0; i < rank; ++i) {
    for (std::size_t j = 0; j < rank; ++j) {
      double g = 0.0;
      for (std::size_t r = 0; r < rows; ++r) g += down(r, i) * down(r, j);
      const double e = g - (i == j ? 1.0 : 0.0);
      s += e * e;
    }
  }
  return s;
}

double frob_loss(const DenseArray& down, const DenseArray& up) {
  return down.squared_norm() + up.squared_norm();
}

}  // namespace mtr
