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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtr/benchmark.hpp"
#include "mtr/model.hpp"
#include "mtr/sphere.hpp"

namespace mtr {

struct DatasetMetrics {
  std::size_t dataset_id = 0;
  std::string name;
  std::size_t queries = 0;
  double r1 = 0.0;  // percent
  double r5 = 0.0;
  double r10 = 0.0;
  double mr = 0.0;  // (R@1 + R@5 + R@10) / 3
  std::optional<double> mean_lambda;

  friend bool operator==(const DatasetMetrics&, const DatasetMetrics&) = default;
};

struct MetricsReport {
  static constexpr int kSchemaVersion = 1;

  std::string split;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::uint64_t step = 0;
  std::vector<DatasetMetrics> datasets;
  DatasetMetrics macro;  // arithmetic means over datasets

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
  // Aligned plain-text table: one row per dataset plus a macro row.
  std::string to_table() const;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

// Gallery positions sorted by descending q . g; equal scores keep ascending
// target id. Throws EmptyGallery.
std::vector<std::uint64_t> score_gallery(const UnitVector& query,
                                         const std::vector<UnitVector>& gallery,
                                         const std::vector<std::uint64_t>& ids);

// Percentage of queries whose top-k ranking holds at least one positive.
double recall_at_k(const std::vector<std::vector<std::uint64_t>>& rankings,
                   const std::vector<std::vector<std::uint64_t>>& positives, std::size_t k);

DatasetMetrics evaluate_dataset(const RetrievalModel& model, const Dataset& dataset,
                                Split split);
// Per-dataset R@1/5/10 and mR on `split` plus the macro row. Read-only on
// the model.
MetricsReport evaluate(const RetrievalModel& model, const Benchmark& benchmark, Split split);

}  // namespace mtr
