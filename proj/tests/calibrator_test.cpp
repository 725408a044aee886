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
#include <random>

#include "mtr/calibrator.hpp"
#include "mtr/error.hpp"
#include "mtr/gradcheck.hpp"
#include "mtr/ops.hpp"
#include "test_util.hpp"

namespace mtr {
namespace {

using testing::naive_matmul;
using testing::random_matrix;
using testing::random_unit;

double dist(const UnitVector& a, const UnitVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

CalibratorConfig small_config() {
  CalibratorConfig c;
  c.dim = 16;
  c.rank = 4;
  c.hidden = 32;
  return c;
}

// Hypernetwork with every weight random so outputs depend on q0.
ParameterSet random_net(const HyperNetwork& net, Rng& rng, double scale = 0.3) {
  ParameterSet p;
  net.register_parameters(p, rng);
  for (const auto& name : p.names())
    for (double& x : p.get_mut(name).values()) x += scale * std::normal_distribution<>(0, 1)(rng);
  return p;
}

TEST(HyperNetwork, ZeroInitGivesIdentityAdaptation) {
  const HyperNetwork net(small_config());
  Rng rng(21);
  ParameterSet p;
  net.register_parameters(p, rng, FinalLayerInit::kZero);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const UnitVector q0 = random_unit(rng, 16);
    const AdaptationParams a = net.predict_params(q0, p);
    EXPECT_EQ(a.down, DenseArray::matrix(16, 4));
    EXPECT_EQ(a.up, DenseArray::matrix(4, 16));
    EXPECT_EQ(a.lambda, 0.5);
    worst = std::max(worst, dist(calibrate(q0, net, p).query, q0));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(HyperNetwork, AdapterInitIsStillIdentityWithOrthonormalDown) {
  const HyperNetwork net(small_config());
  Rng rng(22);
  ParameterSet p;
  net.register_parameters(p, rng, FinalLayerInit::kLowRankAdapter);
  const UnitVector q0 = random_unit(rng, 16);
  const AdaptationParams a = net.predict_params(q0, p);
  EXPECT_EQ(a.up, DenseArray::matrix(4, 16));
  EXPECT_NEAR(ortho_loss(a.down), 0.0, 1e-20);
  EXPECT_LT(dist(calibrate(q0, net, p).query, q0), 1e-12);
}

TEST(HyperNetwork, BatchedPredictionEqualsSingleCalls) {
  const HyperNetwork net(small_config());
  Rng rng(23);
  const ParameterSet p = random_net(net, rng);
  std::vector<UnitVector> q0;
  for (int i = 0; i < 8; ++i) q0.push_back(random_unit(rng, 16));
  const auto batch = net.predict_params(q0, p);
  ASSERT_EQ(batch.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    const AdaptationParams one = net.predict_params(q0[i], p);
    EXPECT_EQ(batch[i].down, one.down);
    EXPECT_EQ(batch[i].up, one.up);
    EXPECT_EQ(batch[i].lambda, one.lambda);
  }
  EXPECT_NE(batch[0].lambda, batch[1].lambda);
}

TEST(HyperNetwork, LambdaStaysStrictlyInsideUnitInterval) {
  const HyperNetwork net(small_config());
  Rng rng(24);
  const ParameterSet p = random_net(net, rng, 3.0);
  for (int i = 0; i < 200; ++i) {
    const double l = net.predict_params(random_unit(rng, 16), p).lambda;
    EXPECT_GT(l, 0.0);
    EXPECT_LT(l, 1.0);
  }
}

TEST(HyperNetwork, RejectsWrongInputWidth) {
  const HyperNetwork net(small_config());
  Rng rng(25);
  ParameterSet p;
  net.register_parameters(p, rng);
  EXPECT_THROW(net.predict_params(random_unit(rng, 8), p), ShapeMismatch);
}

TEST(Proposal, ZeroAdapterIsResidualIdentity) {
  Rng rng(26);
  const UnitVector q0 = random_unit(rng, 16);
  AdaptationParams a{random_matrix(rng, 16, 4), DenseArray::matrix(4, 16), 0.5};
  EXPECT_LT(dist(make_proposal(q0, a), q0), 1e-15);
  a = {DenseArray::matrix(16, 4), random_matrix(rng, 4, 16), 0.5};
  EXPECT_LT(dist(make_proposal(q0, a), q0), 1e-15);
}

TEST(Proposal, AnalyticNormalization) {
  // q0 = e1, (q0 A) B = e2 so q0 + q0AB = e1 + e2.
  const UnitVector e1 = UnitVector::checked({1, 0, 0});
  AdaptationParams a{DenseArray::matrix(3, 1), DenseArray::matrix(1, 3), 0.5};
  a.down(0, 0) = 1.0;
  a.up(0, 1) = 1.0;
  const UnitVector qp = make_proposal(e1, a);
  EXPECT_NEAR(qp[0], 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(qp[1], 1 / std::sqrt(2.0), 1e-15);
}

TEST(Proposal, MatchesDenseProductOracle) {
  Rng rng(27);
  for (int trial = 0; trial < 20; ++trial) {
    const UnitVector q0 = random_unit(rng, 16);
    const AdaptationParams a{random_matrix(rng, 16, 4), random_matrix(rng, 4, 16), 0.5};
    DenseArray row = DenseArray::row_vector(q0.vector());
    const auto qa = naive_matmul(row, a.down);
    DenseArray qa_arr = DenseArray::row_vector(qa[0]);
    const auto qab = naive_matmul(qa_arr, a.up);
    std::vector<double> sum(16);
    for (std::size_t i = 0; i < 16; ++i) sum[i] = q0[i] + qab[0][i];
    const double n = testing::norm(sum);
    const UnitVector got = make_proposal(q0, a);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(got[i], sum[i] / n, 1e-12);
  }
}

TEST(Proposal, VanishingSumIsSurfaced) {
  const UnitVector e1 = UnitVector::checked({1, 0});
  AdaptationParams a{DenseArray::matrix(2, 1), DenseArray::matrix(1, 2), 0.5};
  a.down(0, 0) = 1.0;
  a.up(0, 0) = -1.0;
  EXPECT_THROW(make_proposal(e1, a), ZeroNorm);
}

TEST(Calibrate, SymmetricMidpointForOrthogonalProposal) {
  // q0 A B = e2 - e1, so q_p = e2 and q = (e1 + e2) / sqrt 2 at lambda 0.5.
  const UnitVector e1 = UnitVector::checked({1, 0, 0});
  AdaptationParams a{DenseArray::matrix(3, 1), DenseArray::matrix(1, 3), 0.5};
  a.down(0, 0) = 1.0;
  a.up(0, 0) = -1.0;
  a.up(0, 1) = 1.0;
  const CalibrationOutput out = calibrate(e1, a);
  EXPECT_NEAR(out.omega, M_PI / 2, 1e-12);
  EXPECT_NEAR(out.query[0], 1 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(out.query[1], 1 / std::sqrt(2.0), 1e-12);
}

TEST(Calibrate, AngleToQueryIsLambdaTimesOmega) {
  const HyperNetwork net(small_config());
  Rng rng(28);
  const ParameterSet p = random_net(net, rng);
  for (int i = 0; i < 200; ++i) {
    const UnitVector q0 = random_unit(rng, 16);
    const CalibrationOutput out = calibrate(q0, net, p);
    EXPECT_NEAR(std::abs(l2_norm(out.query.values()) - 1.0), 0.0, 1e-6);
    EXPECT_NEAR(angle(q0, out.query), out.lambda * out.omega, 1e-5);
    EXPECT_NEAR(out.omega, angle(q0, out.proposal), 1e-9);
  }
}

TEST(Calibrate, InterpolationModes) {
  Rng rng(29);
  const UnitVector q0 = random_unit(rng, 16);
  const AdaptationParams a{random_matrix(rng, 16, 4, 0.3), random_matrix(rng, 4, 16, 0.3), 0.3};
  const UnitVector qp = make_proposal(q0, a);
  EXPECT_EQ(calibrate(q0, a, InterpMode::kNone).query, q0);
  EXPECT_EQ(calibrate(q0, a, InterpMode::kProposalOnly).query, qp);
  std::vector<double> mix(16);
  for (std::size_t i = 0; i < 16; ++i) mix[i] = 0.7 * q0[i] + 0.3 * qp[i];
  EXPECT_LT(dist(calibrate(q0, a, InterpMode::kLinear).query, UnitVector::normalize(mix)), 1e-12);
}

TEST(Regularizers, OrthoLossOracles) {
  Rng rng(30);
  const DenseArray q = random_orthonormal_columns(rng, 16, 4);
  EXPECT_NEAR(ortho_loss(q), 0.0, 1e-24);
  DenseArray scaled = q;
  for (double& x : scaled.values()) x *= std::sqrt(2.0);
  // A^T A = 2 I, so ||(2 - 1) I||^2 = d
  EXPECT_NEAR(ortho_loss(scaled), 4.0, 1e-12);
  EXPECT_DOUBLE_EQ(ortho_loss(DenseArray::matrix(16, 4)), 4.0);
  const DenseArray r = random_matrix(rng, 16, 4);
  const auto ata = naive_matmul(r.transposed(), r);
  double want = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) want += std::pow(ata[i][j] - (i == j), 2);
  EXPECT_NEAR(ortho_loss(r), want, 1e-12);
}

TEST(Regularizers, FrobeniusLossOracles) {
  EXPECT_EQ(frob_loss(DenseArray::matrix(8, 4), DenseArray::matrix(4, 8)), 0.0);
  DenseArray a = DenseArray::matrix(8, 4);
  for (std::size_t i = 0; i < 3; ++i) a(i, i) = 1.0;
  EXPECT_EQ(frob_loss(a, DenseArray::matrix(4, 8)), 3.0);
  Rng rng(31);
  const DenseArray x = random_matrix(rng, 8, 4), y = random_matrix(rng, 4, 8);
  double want = 0.0;
  for (double v : x.values()) want += v * v;
  for (double v : y.values()) want += v * v;
  EXPECT_NEAR(frob_loss(x, y), want, 1e-12);
}

TEST(Regularizers, BatchMeanEqualsMeanOfInstances) {
  const HyperNetwork net(small_config());
  Rng rng(32);
  const ParameterSet p = random_net(net, rng);
  std::vector<UnitVector> q0;
  DenseArray batch = DenseArray::matrix(8, 16);
  for (std::size_t i = 0; i < 8; ++i) {
    q0.push_back(random_unit(rng, 16));
    std::copy(q0[i].values().begin(), q0[i].values().end(), batch.row(i).begin());
  }
  Tape t(false);
  const CalibratedBatch b = net.calibrate(t, p, t.constant(batch), InterpMode::kSlerp);
  const double ortho_batch = t.value(ops::mean_all(t, b.ortho))[0];
  const double reg_batch = t.value(ops::mean_all(t, b.reg))[0];
  double ortho_mean = 0.0, reg_mean = 0.0;
  for (const auto& a : net.predict_params(q0, p)) {
    ortho_mean += ortho_loss(a.down) / 8.0;
    reg_mean += frob_loss(a.down, a.up) / 8.0;
  }
  EXPECT_NEAR(ortho_batch, ortho_mean, 1e-9);
  EXPECT_NEAR(reg_batch, reg_mean, 1e-9);
}

TEST(Calibrate, GradientsWrtHypernetworkPassFiniteDifferences) {
  const HyperNetwork net(small_config());
  Rng rng(33);
  ParameterSet p = random_net(net, rng, 0.1);
  DenseArray batch = DenseArray::matrix(8, 16);
  for (std::size_t i = 0; i < 8; ++i) {
    const UnitVector u = random_unit(rng, 16);
    std::copy(u.values().begin(), u.values().end(), batch.row(i).begin());
  }
  const DenseArray weights = random_matrix(rng, 8, 16);
  TapedObjective f = [&](Tape& t, const ParameterSet& ps) {
    const CalibratedBatch b = net.calibrate(t, ps, t.constant(batch), InterpMode::kSlerp);
    Var s = ops::sum_all(t, ops::mul(t, b.query, t.constant(weights)));
    s = ops::add(t, s, ops::scale(t, ops::mean_all(t, b.ortho), 0.01));
    return ops::add(t, s, ops::scale(t, ops::mean_all(t, b.reg), 0.01));
  };
  const GradCheckResult r = finite_difference_check(p, f, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst().parameter;
}

}  // namespace
}  // namespace mtr
