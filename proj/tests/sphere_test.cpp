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
#include <numbers>

#include "mtr/error.hpp"
#include "mtr/gradcheck.hpp"
#include "mtr/sphere.hpp"
#include "test_util.hpp"

namespace mtr {
namespace {

using testing::random_unit;
using testing::random_vector;

double dist(const UnitVector& a, const UnitVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(UnitVector, NormalizeAndChecked) {
  const UnitVector u = UnitVector::normalize(std::vector<double>{3.0, 4.0});
  EXPECT_DOUBLE_EQ(u[0], 0.6);
  EXPECT_DOUBLE_EQ(u[1], 0.8);
  EXPECT_THROW(UnitVector::normalize(std::vector<double>{0.0, 0.0}), ZeroNorm);
  EXPECT_THROW(UnitVector::checked({1.0, 1.0}), Error);
  EXPECT_NO_THROW(UnitVector::checked({0.0, 1.0}));
}

TEST(Slerp, UnitNormAndAngleInterpolationOverRandomPairs) {
  Rng rng(11);
  double worst_norm = 0.0, worst_angle = 0.0;
  for (int pair = 0; pair < 1000; ++pair) {
    const UnitVector u = random_unit(rng, 16), v = random_unit(rng, 16);
    const double omega = angle(u, v);
    for (int k = 1; k <= 9; ++k) {
      const double lambda = 0.1 * k;
      const UnitVector q = slerp(u, v, lambda);
      worst_norm = std::max(worst_norm, std::abs(l2_norm(q.values()) - 1.0));
      worst_angle = std::max(worst_angle, std::abs(angle(u, q) - lambda * omega));
    }
  }
  EXPECT_LT(worst_norm, 1e-6);
  EXPECT_LT(worst_angle, 1e-5);
}

TEST(Slerp, EndpointsRecoverInputs) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const UnitVector u = random_unit(rng, 8), v = random_unit(rng, 8);
    EXPECT_LT(dist(slerp(u, v, 0.0), u), 1e-6);
    EXPECT_LT(dist(slerp(u, v, 1.0), v), 1e-6);
  }
}

TEST(Slerp, OrthogonalMidpoint) {
  const UnitVector e1 = UnitVector::checked({1, 0, 0}), e2 = UnitVector::checked({0, 1, 0});
  const UnitVector q = slerp(e1, e2, 0.5);
  EXPECT_NEAR(q[0], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(q[1], std::sqrt(0.5), 1e-12);
  const UnitVector third = slerp(e1, e2, 1.0 / 3.0);
  EXPECT_NEAR(third[0], std::cos(std::numbers::pi / 6), 1e-12);
}

TEST(Slerp, SmallAngleFallsBackToNormalizedLerp) {
  const UnitVector u = UnitVector::checked({1, 0});
  const UnitVector v = UnitVector::normalize(std::vector<double>{1.0, 1e-6});
  ASSERT_LT(angle(u, v), 1e-4);
  const UnitVector q = slerp(u, v, 0.25);
  const std::vector<double> lerp = {0.75 * u[0] + 0.25 * v[0], 0.75 * u[1] + 0.25 * v[1]};
  const UnitVector want = UnitVector::normalize(lerp);
  EXPECT_LT(dist(q, want), 1e-15);
  EXPECT_TRUE(std::isfinite(q[1]));
  // Identical inputs: no division by sin(0).
  const UnitVector same = slerp(u, u, 0.7);
  EXPECT_LT(dist(same, u), 1e-15);
}

TEST(Slerp, RejectsLambdaOutsideUnitInterval) {
  const UnitVector u = UnitVector::checked({1, 0}), v = UnitVector::checked({0, 1});
  EXPECT_THROW(slerp(u, v, -0.1), Error);
  EXPECT_THROW(slerp(u, v, 1.1), Error);
}

TEST(ClampedArccos, ClampsAndZeroesDerivative) {
  EXPECT_NEAR(kernel::clamped_arccos(1.0 + 1e-7), std::acos(kCosClamp), 1e-15);
  EXPECT_NEAR(kernel::clamped_arccos(-2.0), std::acos(-kCosClamp), 1e-15);
  EXPECT_EQ(kernel::clamped_arccos_derivative(1.0), 0.0);
  EXPECT_EQ(kernel::clamped_arccos_derivative(-1.0), 0.0);
  EXPECT_NEAR(kernel::clamped_arccos_derivative(0.5), -1.0 / std::sqrt(0.75), 1e-15);
}

// Central differences of each output component against the analytic kernel
// backward, with respect to u, v and lambda.
TEST(SlerpKernel, BackwardMatchesFiniteDifferences) {
  Rng rng(13);
  const std::size_t n = 6;
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const UnitVector uu = random_unit(rng, n), vv = random_unit(rng, n);
    std::vector<double> u = uu.vector(), v = vv.vector();
    double lambda = 0.3;
    auto forward = [&](std::size_t j) {
      std::vector<double> out(n);
      kernel::slerp_forward(u, v, lambda, out);
      return out[j];
    };
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> out(n), gout(n, 0.0), gu(n, 0.0), gv(n, 0.0);
      double gl = 0.0;
      kernel::slerp_forward(u, v, lambda, out);
      gout[j] = 1.0;
      kernel::slerp_backward(u, v, lambda, out, gout, gu, gv, gl);
      auto probe = [&](double& x) {
        const double saved = x;
        x = saved + h;
        const double fp = forward(j);
        x = saved - h;
        const double fm = forward(j);
        x = saved;
        return (fp - fm) / (2 * h);
      };
      EXPECT_LT(relative_error(gl, probe(lambda)), 1e-4);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_LT(relative_error(gu[i], probe(u[i])), 1e-4);
        EXPECT_LT(relative_error(gv[i], probe(v[i])), 1e-4);
      }
    }
  }
}

}  // namespace
}  // namespace mtr
