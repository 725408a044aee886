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

#include "mtr/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mtr/error.hpp"

namespace mtr {

const char* to_string(SelectionMode mode) {
  return mode == SelectionMode::kArgmax ? "argmax" : "multinomial";
}

const char* to_string(SamplingStrategy strategy) {
  switch (strategy) {
    case SamplingStrategy::kGgas: return "ggas";
    case SamplingStrategy::kGgasNoSize: return "ggas-nosize";
    case SamplingStrategy::kRandom: return "random";
  }
  return "?";
}

SelectionMode parse_selection_mode(const std::string& s) {
  if (s == "multinomial") return SelectionMode::kMultinomial;
  if (s == "argmax") return SelectionMode::kArgmax;
  throw ConfigError("unknown selection mode '" + s + "'");
}

SamplingStrategy parse_sampling_strategy(const std::string& s) {
  if (s == "ggas") return SamplingStrategy::kGgas;
  if (s == "ggas-nosize") return SamplingStrategy::kGgasNoSize;
  if (s == "random") return SamplingStrategy::kRandom;
  throw ConfigError("unknown sampling strategy '" + s + "'");
}

void SamplerConfig::validate(std::size_t task_count) const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("sampler.alpha must be in [0, 1)");
  if (!(eta > 0.0)) throw ConfigError("sampler.eta must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("sampler.gamma must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("sampler.epsilon must be positive");
  if (!(epsilon * static_cast<double>(task_count) < 1.0)) {
    throw ConfigError("sampler.epsilon * K must be < 1 (epsilon=" + std::to_string(epsilon) +
                      ", K=" + std::to_string(task_count) + ")");
  }
  if (warmup_epochs < 1) throw ConfigError("sampler.warmup_epochs must be >= 1");
}

double instantaneous_difficulty(double grad_norm_query, double grad_norm_target) {
  if (grad_norm_query < 0.0 || grad_norm_target < 0.0) {
    throw NegativeInput("gradient norms must be nonnegative");
  }
  return grad_norm_query + grad_norm_target;
}

double update_ema(double previous, double instant, double alpha) {
  return alpha * previous + (1.0 - alpha) * instant;
}

std::vector<double> sampling_scores(const std::vector<double>& difficulty,
                                    const std::vector<std::uint64_t>& sizes, double eta,
                                    double gamma) {
  if (difficulty.size() != sizes.size()) {
    throw ShapeMismatch("sampling_scores: " + std::to_string(difficulty.size()) +
                        " difficulties vs " + std::to_string(sizes.size()) + " sizes");
  }
  std::vector<double> scores(difficulty.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (sizes[k] < 1) throw ConfigError("dataset sizes must be >= 1");
    const double exponent =
        difficulty[k] / eta + gamma * std::log(static_cast<double>(sizes[k]));
    if (exponent > 700.0) {
      throw Overflow("sampling score exponent " + std::to_string(exponent) +
                     " for task " + std::to_string(k) + "; increase eta");
    }
    scores[k] = std::exp(exponent);
  }
  return scores;
}

SamplingDistribution probabilities(const std::vector<double>& scores, double epsilon) {
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  SamplingDistribution dist;
  dist.p.resize(scores.size());
  double floored_total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    dist.p[k] = std::max(scores[k] / total, epsilon);
    floored_total += dist.p[k];
  }
  for (double& p : dist.p) p /= floored_total;
  return dist;
}

std::size_t select_task(const SamplingDistribution& dist, SelectionMode mode, Rng& rng) {
  if (dist.p.empty()) throw UnknownTask("empty sampling distribution");
  if (mode == SelectionMode::kArgmax) {
    return static_cast<std::size_t>(
        std::distance(dist.p.begin(), std::max_element(dist.p.begin(), dist.p.end())));
  }
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t k = 0; k < dist.p.size(); ++k) {
    cumulative += dist.p[k];
    if (u < cumulative) return k;
  }
  // Rounding left u above the final cumulative sum.
  for (std::size_t k = dist.p.size(); k-- > 0;) {
    if (dist.p[k] > 0.0) return k;
  }
  return dist.p.size() - 1;
}

TaskSampler::TaskSampler(std::vector<TaskStats> stats, SamplerConfig config, std::uint64_t seed)
    : stats_(std::move(stats)), config_(config), rng_(seed) {
  if (stats_.empty()) throw ConfigError("sampler needs at least one task");
  config_.validate(stats_.size());
}

void TaskSampler::observe(std::size_t task, double instant) {
  if (task >= stats_.size()) {
    throw UnknownTask("difficulty reported for unknown task " + std::to_string(task));
  }
  if (instant < 0.0) throw NegativeInput("instantaneous difficulty must be nonnegative");
  TaskStats& s = stats_[task];
  s.difficulty = update_ema(s.difficulty, instant, config_.alpha);
  s.last_instant = instant;
}

bool TaskSampler::in_warmup(int epoch) const {
  return config_.strategy != SamplingStrategy::kRandom && epoch <= config_.warmup_epochs;
}

SamplingDistribution TaskSampler::distribution(int epoch) const {
  const std::size_t k = stats_.size();
  SamplingDistribution dist;
  dist.step = step_;
  if (in_warmup(epoch)) {
    dist.p.assign(k, 1.0 / static_cast<double>(k));
    return dist;
  }
  std::vector<std::uint64_t> sizes(k);
  for (std::size_t i = 0; i < k; ++i) sizes[i] = stats_[i].size;
  if (config_.strategy == SamplingStrategy::kRandom) {
    const double total = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(),
                                                             std::uint64_t{0}));
    dist.p.resize(k);
    for (std::size_t i = 0; i < k; ++i) dist.p[i] = static_cast<double>(sizes[i]) / total;
    return dist;
  }
  const double gamma = config_.strategy == SamplingStrategy::kGgasNoSize ? 0.0 : config_.gamma;
  dist = probabilities(sampling_scores(difficulties(), sizes, config_.eta, gamma),
                       config_.epsilon);
  dist.step = step_;
  return dist;
}

std::size_t TaskSampler::select(int epoch) {
  if (epoch < 1) throw ConfigError("epochs are numbered from 1");
  std::size_t task;
  if (in_warmup(epoch)) {
    task = static_cast<std::size_t>(warmup_cursor_ % stats_.size());
    ++warmup_cursor_;
  } else {
    const SelectionMode mode = config_.strategy == SamplingStrategy::kRandom
                                   ? SelectionMode::kMultinomial
                                   : config_.selection;
    task = select_task(distribution(epoch), mode, rng_);
  }
  ++stats_[task].steps_sampled;
  ++step_;
  return task;
}

std::size_t TaskSampler::step(int epoch,
                              std::optional<std::pair<std::size_t, double>> measured) {
  if (measured) observe(measured->first, measured->second);
  return select(epoch);
}

std::vector<double> TaskSampler::difficulties() const {
  std::vector<double> g(stats_.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = stats_[i].difficulty;
  return g;
}

std::string TaskSampler::rng_state() const { return mtr::rng_state(rng_); }

void TaskSampler::restore(std::vector<TaskStats> stats, std::uint64_t step,
                          std::uint64_t warmup_cursor, const std::string& state) {
  if (stats.size() != stats_.size()) throw ConfigError("checkpoint task count mismatch");
  stats_ = std::move(stats);
  step_ = step;
  warmup_cursor_ = warmup_cursor;
  restore_rng_state(rng_, state);
}

std::size_t sampler_step(TaskSampler& sampler, int epoch,
                         std::optional<std::pair<std::size_t, double>> measured) {
  return sampler.step(epoch, measured);
}

}  // namespace mtr
