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
#include <span>
#include <vector>

namespace mtr {

// Dot products are clamped into this band before arccos so that angles and
// their derivatives stay finite for (anti)collinear pairs.
inline constexpr double kCosClamp = 1.0 - 1e-9;
// Below this angle slerp switches to normalized linear interpolation; both
// agree to O(angle^2) there.
inline constexpr double kSlerpSmallAngle = 1e-4;
// Norms below this are treated as zero by normalize.
inline constexpr double kMinNorm = 1e-12;

// An L2-normalized embedding. Only constructible through normalize() or an
// explicit unit-norm check.
class UnitVector {
 public:
  UnitVector() = default;
  // Throws ZeroNorm if ||v|| < kMinNorm.
  static UnitVector normalize(std::span<const double> v);
  // Wraps `v` after checking | ||v|| - 1 | <= tol; throws ShapeMismatch otherwise.
  static UnitVector checked(std::vector<double> v, double tol = 1e-9);

  std::size_t dim() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  std::span<const double> values() const { return v_; }
  const std::vector<double>& vector() const { return v_; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  explicit UnitVector(std::vector<double> v) : v_(std::move(v)) {}
  std::vector<double> v_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

UnitVector normalize(std::span<const double> v);
// Angle in [0, pi] between two unit vectors, via the clamped arccos.
double angle(const UnitVector& u, const UnitVector& v);
// Great-circle interpolation from u (lambda = 0) to v (lambda = 1).
UnitVector slerp(const UnitVector& u, const UnitVector& v, double lambda);

namespace kernel {

double clamped_arccos(double c);
// d arccos(clamp(c)) / dc; zero where the clamp is active.
double clamped_arccos_derivative(double c);

// Row kernels shared by the pure functions above and the taped ops. `out` must
// have the same length as u and v. Returns the angle between u and v.
double slerp_forward(std::span<const double> u, std::span<const double> v, double lambda,
                     std::span<double> out);
// Accumulates the adjoint of `grad_out` into grad_u, grad_v and grad_lambda.
// `out` is the value slerp_forward produced for the same inputs.
void slerp_backward(std::span<const double> u, std::span<const double> v, double lambda,
                    std::span<const double> out, std::span<const double> grad_out,
                    std::span<double> grad_u, std::span<double> grad_v,
                    double& grad_lambda);

}  // namespace kernel
}  // namespace mtr
