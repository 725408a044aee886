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

#include "mtr/diagnostics.hpp"

#include <functional>
#include <random>

#include "mtr/benchmark.hpp"
#include "mtr/config.hpp"
#include "mtr/losses.hpp"
#include "mtr/model.hpp"
#include "mtr/ops.hpp"
#include "mtr/rng.hpp"

namespace mtr {
namespace {

DenseArray uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  DenseArray a = DenseArray::matrix(rows, cols);
  for (double& x : a.values()) x = dist(rng);
  return a;
}

// Reduces an op output to a scalar with fixed random weights so that no
// gradient component is hidden by symmetry.
Var weighted_sum(Tape& t, Var out, Rng& rng) {
  const DenseArray& v = t.value(out);
  return ops::sum_all(t, ops::mul(t, out, t.constant(uniform(rng, v.rows(), v.cols(), -1, 1))));
}

struct OpCase {
  std::string name;
  ParameterSet params;
  std::function<Var(Tape&, const ParameterSet&)> build;
};

std::vector<OpCase> op_cases(const GradcheckSuiteOptions& o, Rng& rng) {
  const std::size_t n = o.batch, d = o.dim, r = o.rank;
  std::vector<OpCase> cases;
  auto add = [&](std::string name, std::vector<std::pair<std::string, DenseArray>> inputs,
                 std::function<Var(Tape&, const std::vector<Var>&)> f) {
    OpCase c;
    c.name = std::move(name);
    std::vector<std::string> names;
    for (auto& [k, v] : inputs) {
      names.push_back(k);
      c.params.add(k, std::move(v));
    }
    const std::uint64_t wseed = rng();
    c.build = [names, f, wseed](Tape& t, const ParameterSet& p) {
      std::vector<Var> vars;
      for (const auto& k : names) vars.push_back(t.parameter(p, k));
      Rng w(wseed);
      return weighted_sum(t, f(t, vars), w);
    };
    cases.push_back(std::move(c));
  };
  auto m = [&](std::size_t rows, std::size_t cols) { return uniform(rng, rows, cols, -1, 1); };

  add("add", {{"a", m(n, d)}, {"b", m(n, d)}}, [](Tape& t, auto& v) { return ops::add(t, v[0], v[1]); });
  add("sub", {{"a", m(n, d)}, {"b", m(n, d)}}, [](Tape& t, auto& v) { return ops::sub(t, v[0], v[1]); });
  add("mul", {{"a", m(n, d)}, {"b", m(n, d)}}, [](Tape& t, auto& v) { return ops::mul(t, v[0], v[1]); });
  add("affine", {{"a", m(n, d)}}, [](Tape& t, auto& v) { return ops::affine(t, v[0], -1.7, 0.3); });
  add("add_row", {{"a", m(n, d)}, {"row", m(1, d)}},
      [](Tape& t, auto& v) { return ops::add_row(t, v[0], v[1]); });
  add("broadcast_rows", {{"row", m(1, d)}},
      [n](Tape& t, auto& v) { return ops::broadcast_rows(t, v[0], n); });
  add("mul_col", {{"a", m(n, d)}, {"col", m(n, 1)}},
      [](Tape& t, auto& v) { return ops::mul_col(t, v[0], v[1]); });
  add("matmul", {{"a", m(n, d)}, {"b", m(d, r)}},
      [](Tape& t, auto& v) { return ops::matmul(t, v[0], v[1]); });
  add("matmul_nt", {{"a", m(n, d)}, {"b", m(n, d)}},
      [](Tape& t, auto& v) { return ops::matmul_nt(t, v[0], v[1]); });
  add("tanh", {{"a", m(n, d)}}, [](Tape& t, auto& v) { return ops::tanh(t, v[0]); });
  add("sigmoid", {{"a", m(n, d)}}, [](Tape& t, auto& v) { return ops::sigmoid(t, v[0]); });
  add("exp", {{"a", m(n, d)}}, [](Tape& t, auto& v) { return ops::exp(t, v[0]); });
  add("log", {{"a", uniform(rng, n, d, 0.5, 2.0)}}, [](Tape& t, auto& v) { return ops::log(t, v[0]); });
  add("concat_cols", {{"a", m(n, d)}, {"b", m(n, r)}},
      [](Tape& t, auto& v) { return ops::concat_cols(t, v[0], v[1]); });
  add("slice_cols", {{"a", m(n, d)}},
      [r](Tape& t, auto& v) { return ops::slice_cols(t, v[0], 1, 1 + r); });
  add("normalize_rows", {{"a", m(n, d)}}, [](Tape& t, auto& v) { return ops::normalize_rows(t, v[0]); });
  add("row_dot", {{"a", m(n, d)}, {"b", m(n, d)}},
      [](Tape& t, auto& v) { return ops::row_dot(t, v[0], v[1]); });
  add("clamp_arccos", {{"c", uniform(rng, n, 1, -0.9, 0.9)}},
      [](Tape& t, auto& v) { return ops::clamp_arccos(t, v[0]); });
  add("slerp_rows", {{"u", m(n, d)}, {"v", m(n, d)}, {"lambda", uniform(rng, n, 1, 0.05, 0.95)}},
      [](Tape& t, auto& v) {
        return ops::slerp_rows(t, ops::normalize_rows(t, v[0]), ops::normalize_rows(t, v[1]), v[2]);
      });
  add("rowvec_matmul", {{"x", m(n, d)}, {"mats", m(n, d * r)}},
      [r](Tape& t, auto& v) { return ops::rowvec_matmul(t, v[0], v[1], r); });
  add("ortho_penalty", {{"mats", m(n, d * r)}},
      [r](Tape& t, auto& v) { return ops::ortho_penalty(t, v[0], r); });
  add("sum_squares_rows", {{"a", m(n, d)}},
      [](Tape& t, auto& v) { return ops::sum_squares_rows(t, v[0]); });
  add("mean_all", {{"a", m(n, d)}}, [](Tape& t, auto& v) { return ops::mean_all(t, v[0]); });
  add("softmax_xent_diag", {{"logits", uniform(rng, n, n, -3, 3)}},
      [](Tape& t, auto& v) { return ops::softmax_xent_diag(t, v[0]); });
  return cases;
}

// A two-task toy benchmark just large enough for one batch per task.
Benchmark toy_benchmark(const GradcheckSuiteOptions& o) {
  BenchmarkSpec spec;
  spec.name = "gradcheck";
  spec.seed = derive_seed(o.seed, "benchmark");
  spec.latent_dim = 6;
  spec.batch_size = o.batch;
  spec.datasets.push_back({"identity", TaskFamily::kIdentity, o.batch, 1, 1, 4, 0.1, 0});
  spec.datasets.push_back({"rotation", TaskFamily::kRotation, o.batch, 1, 1, 4, 0.1, 0});
  return generate_benchmark(spec);
}

struct LossCase {
  std::string name;
  InterpMode interp;
  bool shared;
};

}  // namespace

std::vector<GradcheckCase> run_gradcheck_suite(const GradcheckSuiteOptions& options) {
  Rng rng(derive_seed(options.seed, "gradcheck"));
  std::vector<GradcheckCase> out;
  auto finish = [&](std::string name, GradCheckResult result) {
    const bool ok = result.max_rel_error < options.tolerance;
    out.push_back({std::move(name), std::move(result), ok});
  };

  for (OpCase& c : op_cases(options, rng)) {
    finish(c.name, finite_difference_check(c.params, c.build, options.h));
  }

  const Benchmark bench = toy_benchmark(options);
  const std::vector<LossCase> loss_cases = {
      {"loss/none", InterpMode::kNone, false},
      {"loss/slerp", InterpMode::kSlerp, false},
      {"loss/linear", InterpMode::kLinear, false},
      {"loss/proposal_only", InterpMode::kProposalOnly, false},
      {"loss/slerp-shared", InterpMode::kSlerp, true},
  };
  for (const LossCase& lc : loss_cases) {
    TrainConfig config;
    config.dim = options.dim;
    config.rank = options.rank;
    config.hidden = options.hidden;
    config.batch_size = options.batch;
    config.interp = lc.interp;
    config.shared_params = lc.shared;
    RetrievalModel model(bench.feature_dim(), bench.instruction_count(), config);
    Rng init(derive_seed(options.seed, "init"));
    model.initialize(init);
    // Move every weight off its structured initial value so no adjoint is
    // trivially zero.
    std::normal_distribution<double> jitter(0.0, 0.1);
    for (const auto& name : model.params().names())
      for (double& x : model.params().get_mut(name).values()) x += jitter(rng);

    const Batch batch = as_batch(bench.datasets[1].train, 0, options.batch);
    TapedObjective objective = [&](Tape& tape, const ParameterSet&) {
      return total_loss(tape, model, batch, config).total;
    };
    finish(lc.name, finite_difference_check(model.params(), objective, options.h));
  }
  return out;
}

}  // namespace mtr
