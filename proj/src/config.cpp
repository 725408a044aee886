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

#include "mtr/config.hpp"

#include <set>
#include <sstream>

#include "mtr/error.hpp"
#include "mtr/rng.hpp"

namespace mtr {

using nlohmann::json;

const char* to_string(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& s) {
  if (s == "f64") return Precision::kF64;
  if (s == "f32") return Precision::kF32;
  throw ConfigError("unknown precision '" + s + "'");
}

CalibratorConfig TrainConfig::calibrator() const {
  return CalibratorConfig{dim, rank, hidden, shared_params, detach_hypernet_input};
}

void TrainConfig::validate() const {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const char* msg) {
    if (!ok) errors.emplace_back(msg);
  };
  check(tau > 0.0, "tau must be positive");
  check(beta_ortho >= 0.0, "beta_ortho must be nonnegative");
  check(beta_reg >= 0.0, "beta_reg must be nonnegative");
  check(learning_rate >= 0.0, "learning_rate must be nonnegative");
  check(weight_decay >= 0.0, "weight_decay must be nonnegative");
  check(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must be in [0, 1)");
  check(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must be in [0, 1)");
  check(adam_eps > 0.0, "adam_eps must be positive");
  check(epochs >= 1, "epochs must be >= 1");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(dim >= 2, "dim must be >= 2");
  check(rank >= 1 && rank < dim, "rank must satisfy 0 < rank < dim");
  check(hidden >= 1, "hidden must be >= 1");
  check(sampler.alpha >= 0.0 && sampler.alpha < 1.0, "sampler.alpha must be in [0, 1)");
  check(sampler.eta > 0.0, "sampler.eta must be positive");
  check(sampler.gamma >= 0.0 && sampler.gamma < 1.0, "sampler.gamma must be in [0, 1)");
  check(sampler.epsilon > 0.0, "sampler.epsilon must be positive");
  check(sampler.warmup_epochs >= 1, "sampler.warmup_epochs must be >= 1");
  if (!errors.empty()) {
    std::ostringstream os;
    os << errors.size() << " config error(s):";
    for (const auto& e : errors) os << "\n  - " << e;
    throw ConfigError(os.str());
  }
}

json TrainConfig::to_json() const {
  return {{"tau", tau},
          {"beta_ortho", beta_ortho},
          {"beta_reg", beta_reg},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed},
          {"dim", dim},
          {"rank", rank},
          {"hidden", hidden},
          {"interp", to_string(interp)},
          {"shared_params", shared_params},
          {"detach_hypernet_input", detach_hypernet_input},
          {"precision", to_string(precision)},
          {"sampler",
           {{"alpha", sampler.alpha},
            {"eta", sampler.eta},
            {"gamma", sampler.gamma},
            {"epsilon", sampler.epsilon},
            {"selection", to_string(sampler.selection)},
            {"strategy", to_string(sampler.strategy)},
            {"warmup_epochs", sampler.warmup_epochs}}}};
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError(std::string("unknown key '") + key + "' in " + where);
    }
  }
}

}  // namespace

TrainConfig TrainConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  reject_unknown(j,
                 {"tau", "beta_ortho", "beta_reg", "learning_rate", "weight_decay", "adam_beta1",
                  "adam_beta2", "adam_eps", "epochs", "batch_size", "seed", "dim", "rank",
                  "hidden", "interp", "shared_params", "detach_hypernet_input", "precision",
                  "sampler"},
                 "train config");
  TrainConfig c;
  read(j, "tau", c.tau);
  read(j, "beta_ortho", c.beta_ortho);
  read(j, "beta_reg", c.beta_reg);
  read(j, "learning_rate", c.learning_rate);
  read(j, "weight_decay", c.weight_decay);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  read(j, "dim", c.dim);
  read(j, "rank", c.rank);
  read(j, "hidden", c.hidden);
  read(j, "shared_params", c.shared_params);
  read(j, "detach_hypernet_input", c.detach_hypernet_input);
  std::string s;
  if (j.contains("interp")) {
    read(j, "interp", s);
    c.interp = parse_interp_mode(s);
  }
  if (j.contains("precision")) {
    read(j, "precision", s);
    c.precision = parse_precision(s);
  }
  if (j.contains("sampler")) {
    const json& sj = j.at("sampler");
    reject_unknown(sj,
                   {"alpha", "eta", "gamma", "epsilon", "selection", "strategy",
                    "warmup_epochs"},
                   "sampler config");
    read(sj, "alpha", c.sampler.alpha);
    read(sj, "eta", c.sampler.eta);
    read(sj, "gamma", c.sampler.gamma);
    read(sj, "epsilon", c.sampler.epsilon);
    read(sj, "warmup_epochs", c.sampler.warmup_epochs);
    if (sj.contains("selection")) {
      read(sj, "selection", s);
      c.sampler.selection = parse_selection_mode(s);
    }
    if (sj.contains("strategy")) {
      read(sj, "strategy", s);
      c.sampler.strategy = parse_sampling_strategy(s);
    }
  }
  return c;
}

std::string config_hash(const json& resolved) { return hex64(fnv1a64(resolved.dump())); }

}  // namespace mtr
