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

#include "mtr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "mtr/error.hpp"
#include "mtr/rng.hpp"

namespace mtr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kCheckpointVersion = 1;

json array_to_json(const DenseArray& a) { return {{"shape", a.shape()}, {"data", a.storage()}}; }

DenseArray array_from_json(const json& j) {
  return DenseArray(j.at("shape").get<std::vector<std::size_t>>(),
                    j.at("data").get<std::vector<double>>());
}

double l2(const DenseArray& a) { return std::sqrt(a.squared_norm()); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<TaskStats> initial_stats(const Benchmark& bench) {
  std::vector<TaskStats> stats;
  for (const auto& ds : bench.datasets) {
    TaskStats s;
    s.dataset_id = ds.id;
    s.size = ds.train.size();
    stats.push_back(s);
  }
  return stats;
}

}  // namespace

AdamW::AdamW(const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_eps),
      weight_decay_(config.weight_decay) {}

void AdamW::step(ParameterSet& params, const Gradients& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& name : params.names()) {
    DenseArray& p = params.get_mut(name);
    const DenseArray& g = grads.at(name);
    auto [mit, _m] = m_.try_emplace(name, p.shape());
    auto [vit, _v] = v_.try_emplace(name, p.shape());
    DenseArray& m = mit->second;
    DenseArray& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr_ * weight_decay_ * p[i];
      p[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

json AdamW::to_json() const {
  json m = json::object(), v = json::object();
  for (const auto& [k, a] : m_) m[k] = array_to_json(a);
  for (const auto& [k, a] : v_) v[k] = array_to_json(a);
  return {{"t", t_}, {"m", m}, {"v", v}};
}

void AdamW::load_json(const json& j) {
  t_ = j.at("t").get<std::uint64_t>();
  m_.clear();
  v_.clear();
  for (const auto& [k, a] : j.at("m").items()) m_.emplace(k, array_from_json(a));
  for (const auto& [k, a] : j.at("v").items()) v_.emplace(k, array_from_json(a));
}

StepResult train_step(RetrievalModel& model, const Batch& batch, AdamW& optimizer,
                      const TrainConfig& config) {
  Tape tape;
  const LossVars vars = total_loss(tape, model, batch, config);
  StepResult result;
  result.loss = breakdown(tape, vars);
  tape.backward(vars.total);
  const Gradients grads = tape.parameter_gradients(model.params());
  for (const auto& [name, g] : grads) {
    if (!g.all_finite()) {
      throw NonFiniteGradient("non-finite gradient for '" + name + "' (loss " +
                              fmt(result.loss.total) + ")");
    }
  }
  result.grad_norm_query = l2(grads.at(DualEncoder::kQueryRet));
  result.grad_norm_target = l2(grads.at(DualEncoder::kTargetRet));
  result.instant = instantaneous_difficulty(result.grad_norm_query, result.grad_norm_target);

  optimizer.step(model.params(), grads);
  if (config.precision == Precision::kF32) {
    for (const auto& name : model.params().names()) {
      for (double& x : model.params().get_mut(name).values())
        x = static_cast<double>(static_cast<float>(x));
    }
  }
  return result;
}

json params_to_json(const ParameterSet& params) {
  json out = json::array();
  for (const auto& name : params.names()) {
    json a = array_to_json(params.get(name));
    a["name"] = name;
    out.push_back(std::move(a));
  }
  return out;
}

ParameterSet params_from_json(const json& j) {
  ParameterSet params;
  for (const auto& a : j) params.add(a.at("name").get<std::string>(), array_from_json(a));
  return params;
}

Trainer::Trainer(const Benchmark& benchmark, TrainConfig config, std::string config_hash,
                 std::optional<fs::path> out_dir)
    : benchmark_(benchmark),
      config_(std::move(config)),
      config_hash_(std::move(config_hash)),
      out_dir_(std::move(out_dir)),
      model_((config_.validate(), benchmark.feature_dim()), benchmark.instruction_count(),
             config_),
      optimizer_(config_),
      sampler_(initial_stats(benchmark), config_.sampler, derive_seed(config_.seed, "sampling")),
      shuffle_rng_(derive_seed(config_.seed, "shuffle")) {
  if (benchmark.datasets.empty()) throw ConfigError("training needs at least one dataset");
  for (const auto& ds : benchmark.datasets) {
    if (ds.train.size() < config_.batch_size) {
      throw ConfigError("dataset " + ds.name + " has fewer training samples (" +
                        std::to_string(ds.train.size()) + ") than batch_size");
    }
  }
  steps_per_epoch_ = benchmark.total_train() / config_.batch_size;
  total_steps_ = steps_per_epoch_ * static_cast<std::uint64_t>(config_.epochs);

  Rng init_rng(derive_seed(config_.seed, "init"));
  model_.initialize(init_rng);

  cursors_.resize(benchmark.datasets.size());
  for (std::size_t k = 0; k < cursors_.size(); ++k) {
    Cursor& c = cursors_[k];
    c.order.resize(benchmark.datasets[k].train.size());
    std::iota(c.order.begin(), c.order.end(), std::size_t{0});
    std::shuffle(c.order.begin(), c.order.end(), shuffle_rng_);
  }
  open_outputs(/*fresh=*/true);
}

Trainer Trainer::resume(const Benchmark& benchmark, const fs::path& checkpoint,
                        std::optional<fs::path> out_dir) {
  std::ifstream in(checkpoint);
  if (!in) throw Error("cannot open checkpoint " + checkpoint.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("corrupt checkpoint " + checkpoint.string() + ": " + e.what());
  }
  if (j.value("format", "") != "mtr-checkpoint" || j.value("version", 0) != kCheckpointVersion) {
    throw Error("unsupported checkpoint format in " + checkpoint.string());
  }
  TrainConfig config = TrainConfig::from_json(j.at("config"));
  // Construct without outputs so the fresh-run headers are not rewritten.
  Trainer t(benchmark, config, j.at("config_hash").get<std::string>(), std::nullopt);
  t.model_.params() = params_from_json(j.at("params"));
  t.optimizer_.load_json(j.at("optimizer"));

  const json& s = j.at("sampler");
  std::vector<TaskStats> stats;
  for (const auto& r : s.at("stats")) {
    TaskStats ts;
    ts.dataset_id = r.at("dataset_id").get<std::size_t>();
    ts.size = r.at("size").get<std::uint64_t>();
    ts.difficulty = r.at("difficulty").get<double>();
    ts.last_instant = r.at("last_instant").get<double>();
    ts.steps_sampled = r.at("steps_sampled").get<std::uint64_t>();
    stats.push_back(ts);
  }
  t.sampler_.restore(std::move(stats), s.at("step").get<std::uint64_t>(),
                     s.at("warmup_cursor").get<std::uint64_t>(),
                     s.at("rng").get<std::string>());
  restore_rng_state(t.shuffle_rng_, j.at("shuffle_rng").get<std::string>());
  const json& cursors = j.at("cursors");
  for (std::size_t k = 0; k < t.cursors_.size(); ++k) {
    t.cursors_[k].order = cursors.at(k).at("order").get<std::vector<std::size_t>>();
    t.cursors_[k].pos = cursors.at(k).at("pos").get<std::size_t>();
  }
  t.step_ = j.at("step").get<std::uint64_t>();
  t.epoch_loss_sum_ = j.at("epoch_loss_sum").get<double>();
  for (const auto& e : j.at("epochs")) {
    EpochRecord r;
    r.epoch = e.at("epoch").get<int>();
    r.step = e.at("step").get<std::uint64_t>();
    r.mean_loss = e.at("mean_loss").get<double>();
    r.difficulty = e.at("difficulty").get<std::vector<double>>();
    r.validation = MetricsReport::from_json(e.at("validation"));
    t.epochs_.push_back(std::move(r));
  }
  t.out_dir_ = std::move(out_dir);
  t.open_outputs(/*fresh=*/false);
  return t;
}

int Trainer::current_epoch() const {
  return static_cast<int>(step_ / steps_per_epoch_) + 1;
}

void Trainer::open_outputs(bool fresh) {
  if (!out_dir_) return;
  fs::create_directories(*out_dir_);
  const auto mode = fresh ? std::ios::trunc : std::ios::app;
  trace_out_.open(*out_dir_ / "trace.csv", std::ios::out | mode);
  log_out_.open(*out_dir_ / "runlog.jsonl", std::ios::out | mode);
  if (!trace_out_ || !log_out_) throw Error("cannot open outputs in " + out_dir_->string());
  if (fresh) {
    trace_out_ << "# config_hash=" << config_hash_ << " seed=" << config_.seed << '\n';
    trace_out_ << "step,epoch,task,d";
    const std::size_t k = benchmark_.datasets.size();
    for (std::size_t i = 0; i < k; ++i) trace_out_ << ",G" << i;
    for (std::size_t i = 0; i < k; ++i) trace_out_ << ",P" << i;
    trace_out_ << '\n';
  }
}

void Trainer::write_trace(const TraceRecord& r) {
  if (!trace_out_.is_open()) return;
  trace_out_ << r.step << ',' << r.epoch << ',' << r.task << ',' << fmt(r.instant);
  for (double g : r.difficulty) trace_out_ << ',' << fmt(g);
  for (double p : r.probability) trace_out_ << ',' << fmt(p);
  trace_out_ << '\n';
}

Batch Trainer::next_batch(std::size_t task) {
  const std::vector<Sample>& train = benchmark_.datasets[task].train;
  Cursor& c = cursors_[task];
  if (c.pos + config_.batch_size > c.order.size()) {
    std::shuffle(c.order.begin(), c.order.end(), shuffle_rng_);
    c.pos = 0;
  }
  Batch b;
  b.reserve(config_.batch_size);
  for (std::size_t i = 0; i < config_.batch_size; ++i) b.push_back(&train[c.order[c.pos + i]]);
  c.pos += config_.batch_size;
  return b;
}

StepResult Trainer::step() {
  if (finished()) throw Error("training already finished");
  const int epoch = current_epoch();
  TraceRecord rec;
  rec.step = step_;
  rec.epoch = epoch;
  rec.probability = sampler_.distribution(epoch).p;
  rec.task = sampler_.select(epoch);

  const StepResult result = train_step(model_, next_batch(rec.task), optimizer_, config_);
  sampler_.observe(rec.task, result.instant);
  rec.instant = result.instant;
  rec.difficulty = sampler_.difficulties();
  write_trace(rec);
  trace_.push_back(std::move(rec));

  epoch_loss_sum_ += result.loss.total;
  ++step_;
  if (step_ % steps_per_epoch_ == 0) end_epoch(epoch);
  return result;
}

void Trainer::end_epoch(int epoch) {
  EpochRecord r;
  r.epoch = epoch;
  r.step = step_;
  r.mean_loss = epoch_loss_sum_ / static_cast<double>(steps_per_epoch_);
  r.difficulty = sampler_.difficulties();
  r.validation = evaluate(model_, benchmark_, Split::kVal);
  r.validation.seed = config_.seed;
  r.validation.config_hash = config_hash_;
  r.validation.step = step_;
  epoch_loss_sum_ = 0.0;
  if (log_out_.is_open()) {
    json line = {{"epoch", r.epoch},          {"step", r.step},
                 {"config_hash", config_hash_}, {"seed", config_.seed},
                 {"mean_loss", r.mean_loss},  {"difficulty", r.difficulty},
                 {"validation", r.validation.to_json()}};
    log_out_ << line.dump() << '\n';
    log_out_.flush();
  }
  epochs_.push_back(std::move(r));
}

void Trainer::finish() {
  MetricsReport report = evaluate(model_, benchmark_, Split::kTest);
  report.seed = config_.seed;
  report.config_hash = config_hash_;
  report.step = step_;
  final_metrics_ = report;
  if (out_dir_) {
    std::ofstream(*out_dir_ / "metrics.json") << report.to_json().dump(2) << '\n';
    std::ofstream(*out_dir_ / "metrics.txt") << report.to_table();
    save_checkpoint(*out_dir_ / "checkpoint.json");
  }
}

void Trainer::run(std::optional<std::uint64_t> stop_at_step) {
  try {
    while (!finished()) {
      if (stop_at_step && step_ >= *stop_at_step) {
        trace_out_.flush();
        if (out_dir_) save_checkpoint(*out_dir_ / "checkpoint.json");
        return;
      }
      step();
    }
  } catch (...) {
    trace_out_.flush();
    if (out_dir_) save_checkpoint(*out_dir_ / "checkpoint.partial.json");
    throw;
  }
  trace_out_.flush();
  finish();
}

json Trainer::checkpoint_json() const {
  json stats = json::array();
  for (const auto& s : sampler_.stats()) {
    stats.push_back({{"dataset_id", s.dataset_id},
                     {"size", s.size},
                     {"difficulty", s.difficulty},
                     {"last_instant", s.last_instant},
                     {"steps_sampled", s.steps_sampled}});
  }
  json cursors = json::array();
  for (const auto& c : cursors_) cursors.push_back({{"order", c.order}, {"pos", c.pos}});
  json epochs = json::array();
  for (const auto& e : epochs_) {
    epochs.push_back({{"epoch", e.epoch},
                      {"step", e.step},
                      {"mean_loss", e.mean_loss},
                      {"difficulty", e.difficulty},
                      {"validation", e.validation.to_json()}});
  }
  return {{"format", "mtr-checkpoint"},
          {"version", kCheckpointVersion},
          {"config", config_.to_json()},
          {"config_hash", config_hash_},
          {"feature_dim", benchmark_.feature_dim()},
          {"instruction_count", benchmark_.instruction_count()},
          {"step", step_},
          {"epoch_loss_sum", epoch_loss_sum_},
          {"params", params_to_json(model_.params())},
          {"optimizer", optimizer_.to_json()},
          {"sampler",
           {{"stats", stats},
            {"step", sampler_.steps_taken()},
            {"warmup_cursor", sampler_.warmup_cursor()},
            {"rng", sampler_.rng_state()}}},
          {"shuffle_rng", rng_state(shuffle_rng_)},
          {"cursors", cursors},
          {"epochs", epochs}};
}

void Trainer::save_checkpoint(const fs::path& path) const {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << checkpoint_json().dump() << '\n';
  }
  fs::rename(tmp, path);
}

}  // namespace mtr
