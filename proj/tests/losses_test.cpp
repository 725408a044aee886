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

#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mtr/losses.hpp"
#include "mtr/ops.hpp"
#include "test_util.hpp"

namespace mtr {
namespace {

using testing::random_unit;

// Direct softmax cross-entropy without log-sum-exp tricks.
double naive_info_nce(const std::vector<UnitVector>& q, const std::vector<UnitVector>& t,
                      double tau) {
  double loss = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) z += std::exp(dot(q[i].values(), t[j].values()) / tau);
    loss -= std::log(std::exp(dot(q[i].values(), t[i].values()) / tau) / z);
  }
  return loss / static_cast<double>(q.size());
}

DenseArray stack(const std::vector<UnitVector>& v) {
  DenseArray a = DenseArray::matrix(v.size(), v.front().dim());
  for (std::size_t i = 0; i < v.size(); ++i)
    std::copy(v[i].values().begin(), v[i].values().end(), a.row(i).begin());
  return a;
}

TEST(InfoNce, MatchesDirectSoftmaxCrossEntropy) {
  Rng rng(41);
  std::vector<UnitVector> q, t;
  for (int i = 0; i < 32; ++i) {
    q.push_back(random_unit(rng, 16));
    t.push_back(random_unit(rng, 16));
  }
  for (double tau : {0.05, 0.2, 1.0}) {
    const double want = naive_info_nce(q, t, tau);
    EXPECT_NEAR(info_nce(q, t, tau), want, 1e-9);
    Tape tape(false);
    const Var l = info_nce(tape, tape.constant(stack(q)), tape.constant(stack(t)), tau);
    EXPECT_NEAR(tape.value(l)[0], want, 1e-9);
  }
}

TEST(InfoNce, UniformSimilaritiesGiveLogN) {
  Rng rng(42);
  const UnitVector u = random_unit(rng, 8);
  for (std::size_t n : {2u, 7u, 64u}) {
    const std::vector<UnitVector> v(n, u);
    EXPECT_NEAR(info_nce(v, v, 0.05), std::log(static_cast<double>(n)), 1e-12);
  }
}

TEST(InfoNce, TwoOrthogonalPairs) {
  // Each query matches its target (cos 1) against an orthogonal negative
  // (cos 0): loss = log(1 + e^{-1/tau}).
  const UnitVector e1 = UnitVector::checked({1, 0}), e2 = UnitVector::checked({0, 1});
  EXPECT_NEAR(info_nce({e1, e2}, {e1, e2}, 1.0), 0.313262, 1e-6);
  EXPECT_NEAR(info_nce({e1, e2}, {e1, e2}, 0.05), std::log1p(std::exp(-20.0)), 1e-15);
}

TEST(InfoNce, StableAtSmallTemperature) {
  const UnitVector e1 = UnitVector::checked({1, 0}), e2 = UnitVector::checked({0, 1});
  // Swapped targets: loss = log(1 + e^{1/tau}) ~ 1/tau.
  EXPECT_NEAR(info_nce({e1, e2}, {e2, e1}, 1e-3), 1000.0, 1e-9);
}

struct LossFixture : ::testing::Test {
  LossFixture() : bench(generate_benchmark(testing::toy_spec())) {}
  Benchmark bench;
  Batch batch() const { return as_batch(bench.datasets[1].train, 0, 8); }
};

TEST_F(LossFixture, TotalIsWeightedSumOfComponents) {
  TrainConfig cfg = testing::toy_config();
  RetrievalModel model(bench.feature_dim(), bench.instruction_count(), cfg);
  Rng rng(43);
  model.initialize(rng);
  for (const auto& name : model.params().names())
    for (double& x : model.params().get_mut(name).values())
      x += 0.1 * std::normal_distribution<>(0, 1)(rng);
  Tape tape;
  const LossBreakdown b = breakdown(tape, total_loss(tape, model, batch(), cfg));
  EXPECT_NEAR(b.total, b.ret + cfg.beta_ortho * b.ortho + cfg.beta_reg * b.reg, 1e-12);
  EXPECT_GT(b.ortho, 0.0);
  EXPECT_GT(b.reg, 0.0);
}

TEST_F(LossFixture, RegularizersAtInitialization) {
  const TrainConfig cfg = testing::toy_config();
  RetrievalModel zero(bench.feature_dim(), bench.instruction_count(), cfg);
  Rng rng(44);
  zero.initialize(rng, FinalLayerInit::kZero);
  Tape t1;
  const LossBreakdown bz = breakdown(t1, total_loss(t1, zero, batch(), cfg));
  // A = 0: ||0 - I||^2 = d and ||A||^2 + ||B||^2 = 0.
  EXPECT_NEAR(bz.ortho, static_cast<double>(cfg.rank), 1e-12);
  EXPECT_EQ(bz.reg, 0.0);

  RetrievalModel adapter(bench.feature_dim(), bench.instruction_count(), cfg);
  adapter.initialize(rng, FinalLayerInit::kLowRankAdapter);
  Tape t2;
  const LossBreakdown ba = breakdown(t2, total_loss(t2, adapter, batch(), cfg));
  // Orthonormal A: no orthogonality penalty, ||A||^2 = d.
  EXPECT_NEAR(ba.ortho, 0.0, 1e-12);
  EXPECT_NEAR(ba.reg, static_cast<double>(cfg.rank), 1e-12);
}

TEST_F(LossFixture, ReferenceDualEncoderHasOnlyRetrievalLoss) {
  const TrainConfig cfg = testing::toy_config(InterpMode::kNone);
  RetrievalModel model(bench.feature_dim(), bench.instruction_count(), cfg);
  Rng rng(45);
  model.initialize(rng);
  EXPECT_EQ(model.calibrator(), nullptr);
  EXPECT_FALSE(model.params().contains(HyperNetwork::kHeadWeight));
  Tape tape;
  const LossVars v = total_loss(tape, model, batch(), cfg);
  EXPECT_FALSE(v.ortho.valid());
  const LossBreakdown b = breakdown(tape, v);
  EXPECT_EQ(b.total, b.ret);

  // The retrieval term equals InfoNCE on the embedded vectors.
  const Batch bt = batch();
  std::vector<Sample> samples;
  for (const Sample* s : bt) samples.push_back(*s);
  EXPECT_NEAR(b.ret,
              info_nce(model.embed_queries(samples).vectors, model.embed_targets(samples), cfg.tau),
              1e-10);
}

}  // namespace
}  // namespace mtr
