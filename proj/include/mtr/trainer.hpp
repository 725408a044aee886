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
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mtr/benchmark.hpp"
#include "mtr/config.hpp"
#include "mtr/evaluator.hpp"
#include "mtr/losses.hpp"
#include "mtr/model.hpp"
#include "mtr/sampler.hpp"

namespace mtr {

// Adam with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& config);

  void step(ParameterSet& params, const Gradients& grads);
  std::uint64_t steps() const { return t_; }

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::uint64_t t_ = 0;
  std::map<std::string, DenseArray> m_;
  std::map<std::string, DenseArray> v_;
};

struct StepResult {
  LossBreakdown loss;
  double grad_norm_query = 0.0;   // ||dL/d r_q||
  double grad_norm_target = 0.0;  // ||dL/d r_t||
  double instant = 0.0;           // their sum, the batch difficulty
};

// Forward, backward, difficulty measurement (before the update), then one
// optimizer update. Throws NonFiniteGradient naming the offending parameter.
StepResult train_step(RetrievalModel& model, const Batch& batch, AdamW& optimizer,
                      const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  std::uint64_t step = 0;  // steps completed at the end of this epoch
  double mean_loss = 0.0;
  std::vector<double> difficulty;  // G_k at the end of the epoch
  MetricsReport validation;
};

nlohmann::json params_to_json(const ParameterSet& params);
ParameterSet params_from_json(const nlohmann::json& j);

// Full training loop: round-robin warm-up, then the configured sampling
// strategy; per-epoch validation; sampler trace; checkpoints.
//
// With an output directory the trainer writes trace.csv (one row per step),
// runlog.jsonl (one line per epoch), metrics.json / metrics.txt (test split)
// and checkpoint.json. If a step throws, checkpoint.partial.json is flushed
// before the exception propagates.
class Trainer {
 public:
  Trainer(const Benchmark& benchmark, TrainConfig config, std::string config_hash,
          std::optional<std::filesystem::path> out_dir = std::nullopt);

  // Rebuilds the exact state saved by save_checkpoint(). Output files are
  // appended to, so a resumed run produces the same files as an unbroken one.
  static Trainer resume(const Benchmark& benchmark, const std::filesystem::path& checkpoint,
                        std::optional<std::filesystem::path> out_dir = std::nullopt);

  // Trains until every step is done, or until `stop_at_step` steps have been
  // completed, in which case checkpoint.json is written and run() returns.
  void run(std::optional<std::uint64_t> stop_at_step = std::nullopt);
  // One sampler-driven training step.
  StepResult step();

  bool finished() const { return step_ >= total_steps_; }
  std::uint64_t current_step() const { return step_; }
  std::uint64_t total_steps() const { return total_steps_; }
  std::uint64_t steps_per_epoch() const { return steps_per_epoch_; }
  int current_epoch() const;

  const TrainConfig& config() const { return config_; }
  const std::string& hash() const { return config_hash_; }
  const RetrievalModel& model() const { return model_; }
  RetrievalModel& model() { return model_; }
  const TaskSampler& sampler() const { return sampler_; }
  const std::vector<TraceRecord>& trace() const { return trace_; }
  const std::vector<EpochRecord>& epochs() const { return epochs_; }
  const std::optional<MetricsReport>& final_metrics() const { return final_metrics_; }

  nlohmann::json checkpoint_json() const;
  void save_checkpoint(const std::filesystem::path& path) const;

 private:
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t pos = 0;
  };

  Batch next_batch(std::size_t task);
  void end_epoch(int epoch);
  void finish();
  void open_outputs(bool fresh);
  void write_trace(const TraceRecord& r);

  const Benchmark& benchmark_;
  TrainConfig config_;
  std::string config_hash_;
  std::optional<std::filesystem::path> out_dir_;

  RetrievalModel model_;
  AdamW optimizer_;
  TaskSampler sampler_;
  Rng shuffle_rng_;
  std::vector<Cursor> cursors_;

  std::uint64_t steps_per_epoch_ = 0;
  std::uint64_t total_steps_ = 0;
  std::uint64_t step_ = 0;
  double epoch_loss_sum_ = 0.0;

  std::vector<TraceRecord> trace_;
  std::vector<EpochRecord> epochs_;
  std::optional<MetricsReport> final_metrics_;

  std::ofstream trace_out_;
  std::ofstream log_out_;
};

}  // namespace mtr
