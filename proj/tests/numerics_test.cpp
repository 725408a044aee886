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

#include "mtr/dense_array.hpp"
#include "mtr/error.hpp"
#include "mtr/gradcheck.hpp"
#include "mtr/ops.hpp"
#include "mtr/parameters.hpp"
#include "mtr/tape.hpp"
#include "test_util.hpp"

namespace mtr {
namespace {

using testing::naive_matmul;
using testing::random_matrix;

TEST(DenseArray, ShapesAndAccess) {
  DenseArray a = DenseArray::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a.cols(), 3u);
  EXPECT_EQ(a(1, 2), 6.0);
  const DenseArray t = a.transposed();
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t(2, 1), 6.0);
  EXPECT_DOUBLE_EQ(a.squared_norm(), 91.0);
  DenseArray r = DenseArray::row_vector({1, 2});
  EXPECT_EQ(r.rows(), 1u);
  EXPECT_EQ(r.cols(), 2u);
  EXPECT_THROW(require_same_shape(a, t, "test"), ShapeMismatch);
}

TEST(DenseArray, IdentityAndFinite) {
  DenseArray id = DenseArray::identity(3);
  EXPECT_EQ(id(0, 0), 1.0);
  EXPECT_EQ(id(0, 1), 0.0);
  EXPECT_TRUE(id.all_finite());
  id(1, 1) = std::nan("");
  EXPECT_FALSE(id.all_finite());
}

TEST(ParameterSet, OrderAndLookup) {
  ParameterSet p;
  p.add("b", DenseArray::matrix(2, 2));
  p.add("a", DenseArray::matrix(1, 3));
  EXPECT_EQ(p.names(), (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(p.scalar_count(), 7u);
  EXPECT_THROW(p.add("a", DenseArray::matrix(1, 1)), ConfigError);
  EXPECT_THROW(p.get("missing"), ConfigError);
}

TEST(Tape, ChainRuleMatchesHandDerivative) {
  // f(x, y) = sum(tanh(x * y)) ; df/dx = (1 - tanh^2(xy)) y
  ParameterSet p;
  p.add("x", DenseArray::from_rows({{0.3, -1.2}}));
  p.add("y", DenseArray::from_rows({{0.7, 0.4}}));
  Tape t;
  const Var f = ops::sum_all(t, ops::tanh(t, ops::mul(t, t.parameter(p, "x"), t.parameter(p, "y"))));
  t.backward(f);
  const Gradients g = t.parameter_gradients(p);
  for (std::size_t i = 0; i < 2; ++i) {
    const double x = p.get("x")[i], y = p.get("y")[i];
    const double th = std::tanh(x * y);
    EXPECT_NEAR(g.at("x")[i], (1 - th * th) * y, 1e-14);
    EXPECT_NEAR(g.at("y")[i], (1 - th * th) * x, 1e-14);
  }
}

TEST(Tape, BackwardVisitsNodesInReverseOrder) {
  ParameterSet p;
  p.add("x", DenseArray::from_rows({{1.0, 2.0}}));
  Tape t;
  const Var x = t.parameter(p, "x");
  const Var y = ops::exp(t, x);
  const Var z = ops::sum_all(t, y);
  t.backward(z);
  const auto& order = t.backward_order();
  ASSERT_FALSE(order.empty());
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_GT(order[i - 1], order[i]);
}

TEST(Tape, ParameterIsBoundOnceAndUnusedGradIsZero) {
  ParameterSet p;
  p.add("x", DenseArray::from_rows({{2.0}}));
  p.add("unused", DenseArray::from_rows({{5.0, 6.0}}));
  Tape t;
  const Var a = t.parameter(p, "x");
  const Var b = t.parameter(p, "x");
  EXPECT_EQ(a.id, b.id);
  // f = x * x, df/dx = 2x
  t.backward(ops::sum_all(t, ops::mul(t, a, b)));
  const Gradients g = t.parameter_gradients(p);
  EXPECT_DOUBLE_EQ(g.at("x")[0], 4.0);
  EXPECT_EQ(g.at("unused"), DenseArray::matrix(1, 2));
}

TEST(Tape, RejectsNonFiniteValuesAndNonScalarRoot) {
  Tape t;
  const Var c = t.constant(DenseArray::from_rows({{-1.0}}));
  EXPECT_THROW(ops::log(t, c), NonFiniteValue);
  const Var m = t.constant(DenseArray::from_rows({{1.0, 2.0}}));
  EXPECT_THROW(t.backward(m), ShapeMismatch);
}

TEST(Ops, MatmulVariantsMatchNaiveProducts) {
  Rng rng(1);
  const DenseArray a = random_matrix(rng, 5, 7), b = random_matrix(rng, 7, 3),
                   c = random_matrix(rng, 4, 7);
  Tape t(false);
  const DenseArray& ab = t.value(ops::matmul(t, t.constant(a), t.constant(b)));
  const auto want = naive_matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(ab(i, j), want[i][j], 1e-12);
  const DenseArray& act = t.value(ops::matmul_nt(t, t.constant(a), t.constant(c)));
  const auto want_nt = naive_matmul(a, c.transposed());
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(act(i, j), want_nt[i][j], 1e-12);
  EXPECT_THROW(ops::matmul(t, t.constant(a), t.constant(c)), ShapeMismatch);
}

TEST(Ops, RowvecMatmulIsPerRowProduct) {
  Rng rng(2);
  const std::size_t n = 3, k = 4, m = 2;
  const DenseArray x = random_matrix(rng, n, k), mats = random_matrix(rng, n, k * m);
  Tape t(false);
  const DenseArray& out = t.value(ops::rowvec_matmul(t, t.constant(x), t.constant(mats), m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double want = 0.0;
      for (std::size_t l = 0; l < k; ++l) want += x(i, l) * mats(i, l * m + j);
      EXPECT_NEAR(out(i, j), want, 1e-12);
    }
  }
}

TEST(Ops, OrthoPenaltyMatchesDenseOracle) {
  Rng rng(3);
  const std::size_t d = 6, r = 3;
  const DenseArray mats = random_matrix(rng, 2, d * r);
  Tape t(false);
  const DenseArray& out = t.value(ops::ortho_penalty(t, t.constant(mats), r));
  for (std::size_t row = 0; row < 2; ++row) {
    DenseArray a = DenseArray::matrix(d, r);
    for (std::size_t i = 0; i < d * r; ++i) a[i] = mats(row, i);
    const auto ata = naive_matmul(a.transposed(), a);
    double want = 0.0;
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        const double e = ata[i][j] - (i == j ? 1.0 : 0.0);
        want += e * e;
      }
    EXPECT_NEAR(out(row, 0), want, 1e-12);
  }
}

TEST(Ops, SoftmaxCrossEntropyDiagonalMatchesDirectFormula) {
  Rng rng(4);
  const DenseArray logits = random_matrix(rng, 6, 6, 2.0);
  Tape t(false);
  const double got = t.value(ops::softmax_xent_diag(t, t.constant(logits)))[0];
  double want = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < 6; ++j) z += std::exp(logits(i, j));
    want += -std::log(std::exp(logits(i, i)) / z);
  }
  EXPECT_NEAR(got, want / 6.0, 1e-12);
}

TEST(Ops, SoftmaxCrossEntropyIsStableForLargeLogits) {
  DenseArray logits = DenseArray::from_rows({{1000.0, 0.0}, {0.0, 1000.0}});
  Tape t(false);
  EXPECT_NEAR(t.value(ops::softmax_xent_diag(t, t.constant(logits)))[0], 0.0, 1e-12);
}

TEST(Ops, NormalizeRowsRejectsZeroRow) {
  Tape t(false);
  EXPECT_THROW(ops::normalize_rows(t, t.constant(DenseArray::matrix(2, 3))), ZeroNorm);
}

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0), 0.1);  // floor of 1e-8 in the denominator
}

TEST(GradCheck, PolynomialPassesAndParametersAreRestored) {
  // f = sum(x^3), derivative 3x^2
  ParameterSet p;
  p.add("x", DenseArray::from_rows({{0.5, -1.5, 2.0}}));
  const ParameterSet before = p;
  TapedObjective f = [](Tape& t, const ParameterSet& ps) {
    const Var x = t.parameter(ps, "x");
    return ops::sum_all(t, ops::mul(t, x, ops::mul(t, x, x)));
  };
  const GradCheckResult r = finite_difference_check(p, f, 1e-5);
  EXPECT_LT(r.max_rel_error, 1e-8);
  EXPECT_EQ(r.probes, 6u);
  EXPECT_EQ(p, before);
}

TEST(GradCheck, CorruptedAdjointIsDetected) {
  ParameterSet p;
  p.add("x", DenseArray::from_rows({{0.5, -1.5, 2.0}}));
  TapedObjective f = [](Tape& t, const ParameterSet& ps) {
    return ops::sum_all(t, ops::tanh(t, t.parameter(ps, "x")));
  };
  set_adjoint_fault("tanh");
  const GradCheckResult bad = finite_difference_check(p, f);
  set_adjoint_fault("");
  EXPECT_NEAR(bad.max_rel_error, 1.0 / 3.0, 1e-6);  // |1.5g - g| / 1.5g
  EXPECT_LT(finite_difference_check(p, f).max_rel_error, 1e-8);
}

TEST(GradCheck, NonFiniteProbeThrows) {
  ParameterSet p;
  p.add("x", DenseArray::from_rows({{0.0}}));
  TapedObjective f = [](Tape& t, const ParameterSet& ps) {
    return ops::sum_all(t, ops::log(t, ops::affine(t, t.parameter(ps, "x"), 1.0, 1e-6)));
  };
  EXPECT_THROW(finite_difference_check(p, f, 1e-5), NonFiniteValue);
}

}  // namespace
}  // namespace mtr
