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

#include <nlohmann/json.hpp>

#include "mtr/calibrator.hpp"
#include "mtr/sampler.hpp"

namespace mtr {

enum class Precision { kF64, kF32 };

const char* to_string(Precision p);
Precision parse_precision(const std::string& s);

// Everything that shapes one training run. Defaults for the loss weights,
// batch size, epochs and learning rate are the reference (large-model)
// settings; the desk-scale presets under configs/ override what they need.
struct TrainConfig {
  double tau = 0.05;           // InfoNCE temperature
  double beta_ortho = 1e-2;    // weight of ||A^T A - I||^2
  double beta_reg = 1e-4;      // weight of ||A||^2 + ||B||^2
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 5;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  std::size_t dim = 64;      // D
  std::size_t rank = 8;      // d
  std::size_t hidden = 128;  // H
  InterpMode interp = InterpMode::kSlerp;
  bool shared_params = false;
  bool detach_hypernet_input = false;
  Precision precision = Precision::kF64;

  SamplerConfig sampler;

  bool use_calibrator() const { return interp != InterpMode::kNone; }
  CalibratorConfig calibrator() const;

  // Collects every violated constraint and throws one ConfigError listing all.
  void validate() const;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
};

std::string config_hash(const nlohmann::json& resolved);

}  // namespace mtr
