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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtr/dense_array.hpp"

namespace mtr {

enum class TaskFamily {
  kIdentity,   // target latent equals query latent
  kRotation,   // target latent is a dataset-secret orthogonal map of the query
  kAttribute,  // identity map, but gallery distractors differ only in an attribute block
};

const char* to_string(TaskFamily family);
TaskFamily parse_task_family(const std::string& s);

enum class Split { kTrain, kVal, kTest, kGallery };

const char* to_string(Split split);
Split parse_split(const std::string& s);

struct DatasetSpec {
  std::string name;
  TaskFamily family = TaskFamily::kIdentity;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  // Total gallery size: every val and test positive plus distractors.
  std::size_t gallery = 0;
  double noise = 0.1;
  // Trailing latent coordinates forming the attribute block (attribute family).
  std::size_t attribute_dim = 0;
};

// Declarative benchmark description. Every field is required in the JSON form.
struct BenchmarkSpec {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t latent_dim = 16;
  std::size_t batch_size = 64;
  std::vector<DatasetSpec> datasets;

  // Throws InvalidSpec naming the violated constraint.
  void validate() const;

  nlohmann::json to_json() const;
  static BenchmarkSpec from_json(const nlohmann::json& j);
  static BenchmarkSpec load(const std::filesystem::path& path);

  // Six datasets over three families with train sizes 2000/2000/500/500/200/200.
  static BenchmarkSpec ufire_mini(std::uint64_t seed);
  // Two rotation datasets with train sizes 5000 and 500.
  static BenchmarkSpec lambda_scale(std::uint64_t seed);
};

struct Sample {
  std::vector<double> query_features;  // empty for gallery records
  std::size_t instruction_id = 0;
  std::vector<double> target_features;
  std::uint64_t target_id = 0;
  std::size_t dataset_id = 0;
  Split split = Split::kTrain;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::size_t id = 0;
  std::string name;
  std::string family;  // empty when unknown (e.g. loaded without a spec)
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  std::vector<Sample> gallery;

  const std::vector<Sample>& split(Split s) const;
  std::vector<Sample>& split(Split s);

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Benchmark {
  std::vector<Dataset> datasets;

  std::size_t feature_dim() const;
  std::size_t instruction_count() const { return datasets.size(); }
  std::size_t total_train() const;

  friend bool operator==(const Benchmark&, const Benchmark&) = default;
};

// Orthogonal map used as the secret query->target transform of dataset k.
DenseArray dataset_transform(const BenchmarkSpec& spec, std::size_t k);

Benchmark generate_benchmark(const BenchmarkSpec& spec);

// One JSON object per line with exactly the fields dataset_id, split,
// instruction_id, query_features, target_features, target_id.
void save_jsonl(const Benchmark& benchmark, const std::filesystem::path& path);
// Throws MalformedRecord (with line number) or DimensionMismatch. An empty
// file yields an empty benchmark.
Benchmark load_jsonl(const std::filesystem::path& path);
// Copies names and families from `spec` onto a loaded benchmark.
void apply_spec_metadata(Benchmark& benchmark, const BenchmarkSpec& spec);

}  // namespace mtr
