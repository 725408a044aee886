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

#include "mtr/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtr/error.hpp"

namespace mtr {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeMismatch("dot: lengths " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

UnitVector UnitVector::normalize(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n >= kMinNorm)) throw ZeroNorm("cannot normalize a vector with norm " + std::to_string(n));
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return UnitVector(std::move(out));
}

UnitVector UnitVector::checked(std::vector<double> v, double tol) {
  const double n = l2_norm(v);
  if (std::abs(n - 1.0) > tol) {
    throw ShapeMismatch("expected a unit vector, norm is " + std::to_string(n));
  }
  return UnitVector(std::move(v));
}

UnitVector normalize(std::span<const double> v) { return UnitVector::normalize(v); }

double angle(const UnitVector& u, const UnitVector& v) {
  return kernel::clamped_arccos(dot(u.values(), v.values()));
}

UnitVector slerp(const UnitVector& u, const UnitVector& v, double lambda) {
  if (u.dim() != v.dim()) throw ShapeMismatch("slerp: dimension mismatch");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("slerp: lambda outside [0, 1]");
  std::vector<double> out(u.dim());
  kernel::slerp_forward(u.values(), v.values(), lambda, out);
  return UnitVector::checked(std::move(out), 1e-6);
}

namespace kernel {

double clamped_arccos(double c) { return std::acos(std::clamp(c, -kCosClamp, kCosClamp)); }

double clamped_arccos_derivative(double c) {
  if (c <= -kCosClamp || c >= kCosClamp) return 0.0;
  return -1.0 / std::sqrt(1.0 - c * c);
}

double slerp_forward(std::span<const double> u, std::span<const double> v, double lambda,
                     std::span<double> out) {
  const std::size_t n = u.size();
  const double omega = clamped_arccos(dot(u, v));
  if (omega < kSlerpSmallAngle) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = (1.0 - lambda) * u[i] + lambda * v[i];
      norm2 += out[i] * out[i];
    }
    const double norm = std::sqrt(norm2);
    if (!(norm >= kMinNorm)) throw ZeroNorm("slerp: degenerate interpolant");
    for (std::size_t i = 0; i < n; ++i) out[i] /= norm;
    return omega;
  }
  const double s = std::sin(omega);
  const double a = std::sin((1.0 - lambda) * omega) / s;
  const double b = std::sin(lambda * omega) / s;
  for (std::size_t i = 0; i < n; ++i) out[i] = a * u[i] + b * v[i];
  return omega;
}

void slerp_backward(std::span<const double> u, std::span<const double> v, double lambda,
                    std::span<const double> out, std::span<const double> grad_out,
                    std::span<double> grad_u, std::span<double> grad_v,
                    double& grad_lambda) {
  const std::size_t n = u.size();
  const double c = dot(u, v);
  const double omega = clamped_arccos(c);

  if (omega < kSlerpSmallAngle) {
    // out = w / |w| with w = (1 - lambda) u + lambda v.
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = (1.0 - lambda) * u[i] + lambda * v[i];
      norm2 += w * w;
    }
    const double norm = std::sqrt(norm2);
    const double yg = dot(out, grad_out);
    double gl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double gw = (grad_out[i] - out[i] * yg) / norm;
      grad_u[i] += (1.0 - lambda) * gw;
      grad_v[i] += lambda * gw;
      gl += gw * (v[i] - u[i]);
    }
    grad_lambda += gl;
    return;
  }

  const double s = std::sin(omega);
  const double co = std::cos(omega);
  const double s1 = std::sin((1.0 - lambda) * omega);
  const double c1 = std::cos((1.0 - lambda) * omega);
  const double s2 = std::sin(lambda * omega);
  const double c2 = std::cos(lambda * omega);
  const double a = s1 / s;
  const double b = s2 / s;
  const double da_domega = ((1.0 - lambda) * c1 * s - s1 * co) / (s * s);
  const double db_domega = (lambda * c2 * s - s2 * co) / (s * s);
  const double da_dlambda = -omega * c1 / s;
  const double db_dlambda = omega * c2 / s;

  const double gu_dot = dot(grad_out, u);
  const double gv_dot = dot(grad_out, v);
  const double g_omega = gu_dot * da_domega + gv_dot * db_domega;
  const double g_c = g_omega * clamped_arccos_derivative(c);

  for (std::size_t i = 0; i < n; ++i) {
    grad_u[i] += a * grad_out[i] + g_c * v[i];
    grad_v[i] += b * grad_out[i] + g_c * u[i];
  }
  grad_lambda += gu_dot * da_dlambda + gv_dot * db_dlambda;
}

}  // namespace kernel
}  // namespace mtr
