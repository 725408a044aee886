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
#include <string>
#include <vector>

#include "mtr/dense_array.hpp"
#include "mtr/parameters.hpp"
#include "mtr/rng.hpp"
#include "mtr/sphere.hpp"
#include "mtr/tape.hpp"

namespace mtr {

// How the final query is formed from the initial query q0 and the proposal.
enum class InterpMode {
  kSlerp,         // great-circle interpolation with the predicted lambda
  kLinear,        // normalize((1 - lambda) q0 + lambda q_p)
  kProposalOnly,  // q = q_p
  kNone,          // q = q0, calibrator unused
};

const char* to_string(InterpMode mode);
InterpMode parse_interp_mode(const std::string& s);

struct CalibratorConfig {
  std::size_t dim = 64;      // D
  std::size_t rank = 8;      // d
  std::size_t hidden = 128;  // H
  // One learned (A, B, lambda) shared by every query instead of the MLP.
  bool shared_params = false;
  // Feed the hypernetwork a gradient-blocked copy of q0.
  bool detach_input = false;
};

enum class FinalLayerInit {
  // Whole output layer zero: A = 0, B = 0, lambda = 0.5 for every input.
  kZero,
  // B block and lambda logit zero, A bias set to a random matrix with
  // orthonormal columns, A weights zero. Still the identity map at init
  // (B = 0), but the bottleneck is not a stationary point of the loss.
  kLowRankAdapter,
};

// Per-query low-rank adaptation: down projection A (D x d), up projection
// B (d x D), interpolation coefficient lambda in (0, 1).
struct AdaptationParams {
  DenseArray down;
  DenseArray up;
  double lambda = 0.5;
};

struct CalibrationOutput {
  UnitVector query;
  UnitVector proposal;
  double omega = 0.0;
  double lambda = 0.0;
  double ortho_loss = 0.0;
  double reg_loss = 0.0;
};

// Taped per-batch quantities. Rows align with the q0 batch.
struct CalibratedBatch {
  Var query;     // N x D
  Var proposal;  // N x D
  Var lambda;    // N x 1
  Var omega;     // N x 1, angle(q0, q_p)
  Var ortho;     // N x 1, ||A^T A - I||_F^2 per row
  Var reg;       // N x 1, ||A||_F^2 + ||B||_F^2 per row
};

// MLP q0 -> (A, B, lambda-logit): affine D->H, tanh, affine H->2Dd+1.
// Parameters live in an external ParameterSet under the names below so that
// optimizers, checkpoints and gradient checks can treat them uniformly.
class HyperNetwork {
 public:
  explicit HyperNetwork(CalibratorConfig config);

  const CalibratorConfig& config() const { return config_; }
  std::size_t output_width() const { return 2 * config_.dim * config_.rank + 1; }
  std::size_t block_size() const { return config_.dim * config_.rank; }

  void register_parameters(ParameterSet& params, Rng& rng,
                           FinalLayerInit init = FinalLayerInit::kLowRankAdapter) const;

  // Raw output, N x output_width(). Throws ShapeMismatch if q0 is not N x D.
  Var head(Tape& tape, const ParameterSet& params, Var q0) const;

  CalibratedBatch calibrate(Tape& tape, const ParameterSet& params, Var q0,
                            InterpMode mode) const;

  AdaptationParams predict_params(const UnitVector& q0, const ParameterSet& params) const;
  std::vector<AdaptationParams> predict_params(const std::vector<UnitVector>& q0,
                                               const ParameterSet& params) const;

  static constexpr const char* kHiddenWeight = "calib.hidden.weight";
  static constexpr const char* kHiddenBias = "calib.hidden.bias";
  static constexpr const char* kHeadWeight = "calib.head.weight";
  static constexpr const char* kHeadBias = "calib.head.bias";
  static constexpr const char* kShared = "calib.shared";

 private:
  CalibratorConfig config_;
};

// q_p = normalize(q0 + (q0 A) B). Throws ZeroNorm if the sum vanishes.
UnitVector make_proposal(const UnitVector& q0, const AdaptationParams& p);

// Full calibration of one query with explicit adaptation parameters.
CalibrationOutput calibrate(const UnitVector& q0, const AdaptationParams& p,
                            InterpMode mode = InterpMode::kSlerp);
// Predicts the parameters with `net` and calibrates.
CalibrationOutput calibrate(const UnitVector& q0, const HyperNetwork& net,
                            const ParameterSet& params, InterpMode mode = InterpMode::kSlerp);

// ||A^T A - I_d||_F^2
double ortho_loss(const DenseArray& down);
// ||A||_F^2 + ||B||_F^2
double frob_loss(const DenseArray& down, const DenseArray& up);

}  // namespace mtr
