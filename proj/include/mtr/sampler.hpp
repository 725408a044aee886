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
#include <optional>
#include <string>
#include <vector>

#include "mtr/rng.hpp"

namespace mtr {

enum class SelectionMode { kMultinomial, kArgmax };

// Which task-selection policy drives training.
enum class SamplingStrategy {
  kGgas,        // gradient-guided, size-aware scores
  kGgasNoSize,  // gradient-guided with the size exponent forced to 0
  kRandom,      // task drawn with probability proportional to its size
};

const char* to_string(SelectionMode mode);
const char* to_string(SamplingStrategy strategy);
SelectionMode parse_selection_mode(const std::string& s);
SamplingStrategy parse_sampling_strategy(const std::string& s);

struct SamplerConfig {
  double alpha = 0.9;    // EMA smoothing
  double eta = 1.0;      // difficulty temperature
  double gamma = 0.5;    // size exponent
  double epsilon = 0.02; // probability floor
  SelectionMode selection = SelectionMode::kMultinomial;
  SamplingStrategy strategy = SamplingStrategy::kGgas;
  int warmup_epochs = 1;

  // Throws ConfigError on out-of-range values, including epsilon * K >= 1.
  void validate(std::size_t task_count) const;
};

struct TaskStats {
  std::size_t dataset_id = 0;
  std::uint64_t size = 1;   // N_k, training examples
  double difficulty = 0.0;  // G_k, EMA of instantaneous difficulty
  double last_instant = 0.0;
  std::uint64_t steps_sampled = 0;
};

struct SamplingDistribution {
  std::vector<double> p;
  std::uint64_t step = 0;
};

// d_k = ||grad wrt query retrieval bias|| + ||grad wrt target retrieval bias||
double instantaneous_difficulty(double grad_norm_query, double grad_norm_target);
// G = alpha * G_prev + (1 - alpha) * d
double update_ema(double previous, double instant, double alpha);
// S_k = exp(G_k / eta + gamma * ln N_k). Throws Overflow when the exponent
// exceeds 700.
std::vector<double> sampling_scores(const std::vector<double>& difficulty,
                                    const std::vector<std::uint64_t>& sizes, double eta,
                                    double gamma);
// Floors S_k / sum(S) at epsilon and renormalizes.
SamplingDistribution probabilities(const std::vector<double>& scores, double epsilon);
// Argmax (lowest index wins ties) or one multinomial draw from `rng`.
std::size_t select_task(const SamplingDistribution& dist, SelectionMode mode, Rng& rng);

// One sampler record per training step, for difficulty traces.
struct TraceRecord {
  std::uint64_t step = 0;
  int epoch = 0;
  std::size_t task = 0;
  double instant = 0.0;  // d_k of the batch trained at this step
  std::vector<double> difficulty;
  std::vector<double> probability;
};

// Stateful task scheduler. During warm-up epochs tasks are visited
// round-robin; afterwards the configured strategy picks each step's task.
// Only the task that produced a measurement has its EMA updated.
class TaskSampler {
 public:
  TaskSampler(std::vector<TaskStats> stats, SamplerConfig config, std::uint64_t seed);

  // Folds the measured difficulty of the batch just trained on `task` into
  // its EMA. Throws UnknownTask for an id outside the task set.
  void observe(std::size_t task, double instant);
  // Distribution the next selection would use at `epoch`.
  SamplingDistribution distribution(int epoch) const;
  // Chooses the task for the next step and advances the step counter.
  std::size_t select(int epoch);
  // observe() followed by select(): the full per-step sampler update.
  std::size_t step(int epoch, std::optional<std::pair<std::size_t, double>> measured);

  const std::vector<TaskStats>& stats() const { return stats_; }
  const SamplerConfig& config() const { return config_; }
  std::uint64_t steps_taken() const { return step_; }
  std::vector<double> difficulties() const;

  // Checkpoint support.
  std::string rng_state() const;
  void restore(std::vector<TaskStats> stats, std::uint64_t step, std::uint64_t warmup_cursor,
               const std::string& rng_state);
  std::uint64_t warmup_cursor() const { return warmup_cursor_; }

 private:
  bool in_warmup(int epoch) const;

  std::vector<TaskStats> stats_;
  SamplerConfig config_;
  Rng rng_;
  std::uint64_t step_ = 0;
  std::uint64_t warmup_cursor_ = 0;
};

// sampler_step over an explicit state: reports `measured` (if any), then picks
// the next task.
std::size_t sampler_step(TaskSampler& sampler, int epoch,
                         std::optional<std::pair<std::size_t, double>> measured);

}  // namespace mtr
