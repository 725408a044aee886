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
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtr/benchmark.hpp"
#include "mtr/config.hpp"

namespace mtr::cli {

// Default output root when neither --out nor output_dir is given.
inline constexpr const char* kOutRootEnv = "MTR_OUT_ROOT";

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

// Everything one invocation needs. The JSON form is
//   {"experiment": ..., "output_dir": ..., "seeds": [...],
//    "benchmark": {"preset": NAME} | {"spec": {...}} | {"spec_path": PATH}
//                 | {"data": PATH, ["spec_path": PATH]},
//    "train": {TrainConfig fields}}
// with every key optional. Relative paths resolve against `base_dir`.
struct RunConfig {
  std::string experiment = "ufire-mini";
  std::optional<std::string> output_dir;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  nlohmann::json benchmark = {{"preset", "ufire-mini"}};
  TrainConfig train = desk_train_config();
  std::filesystem::path base_dir = ".";

  // Reference loss weights and schedule with the desk learning rate.
  static TrainConfig desk_train_config();

  static RunConfig from_json(const nlohmann::json& j, std::filesystem::path base_dir = ".");
  static RunConfig load(const std::filesystem::path& path);
};

struct ResolvedBenchmark {
  Benchmark data;
  // Reloadable description: the full spec for generated benchmarks, or the
  // data path plus content hash for JSONL inputs.
  nlohmann::json description;
};

ResolvedBenchmark resolve_benchmark(const RunConfig& config, std::uint64_t root_seed);

// Sets the query representation (and, for none/ggas-only, the sampling
// strategy) of one ablation row. Throws ConfigError for unknown names.
void apply_ablation(TrainConfig& config, const std::string& ablation);

struct AblationVariant {
  std::string name;
  std::string ablation;
  std::optional<std::string> sampling;
};
// Rows #1 to #6 and the full model.
const std::vector<AblationVariant>& ablation_variants();

// The fully expanded configuration of one run and its hash.
nlohmann::json resolved_config(const std::string& command, const RunConfig& config,
                               const TrainConfig& train, const nlohmann::json& benchmark);
std::string resolved_hash(const nlohmann::json& resolved);

// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mtr::cli
