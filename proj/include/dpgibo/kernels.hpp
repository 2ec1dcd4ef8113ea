// Copyright 2026 The dpgibo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpgibo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ConstVectorRef = Eigen::Ref<const Eigen::VectorXd>;
using ConstMatrixRef = Eigen::Ref<const Eigen::MatrixXd>;

// Raised when a Gram matrix cannot be factorized even at the maximum
// jitter level. Carries the diagnostics needed to understand why.
class IllConditionedGramError : public std::runtime_error {
 public:
  IllConditionedGramError(std::string what, double jitter_tried, double min_diag,
                          double mean_diag)
      : std::runtime_error(std::move(what)),
        jitter_tried(jitter_tried),
        min_diag(min_diag),
        mean_diag(mean_diag) {}

  double jitter_tried;
  double min_diag;
  double mean_diag;
};

enum class KernelFamily { kRbf, kMatern52, kMatern72, kPolynomialDeg2 };

std::string kernel_family_name(KernelFamily family);

// A covariance function with evaluable first derivatives and cross-Hessian.
// RBF and Matern(nu >= 5/2) are stationary and at least four times
// differentiable; the degree-2 polynomial kernel is non-stationary and only
// intended for quadratic objectives. Lengthscales are per-dimension (ARD);
// the isotropic case is a constant lengthscale vector.
class Kernel {
 public:
  Kernel(KernelFamily family, Vector lengthscales, double output_scale = 1.0);

  static Kernel rbf(int dim, double lengthscale = 1.0, double output_scale = 1.0);
  static Kernel matern52(int dim, double lengthscale = 1.0, double output_scale = 1.0);
  static Kernel matern72(int dim, double lengthscale = 1.0, double output_scale = 1.0);
  static Kernel polynomial_deg2(int dim, double lengthscale = 1.0,
                                double output_scale = 1.0);

  KernelFamily family() const { return family_; }
  const Vector& lengthscales() const { return lengthscales_; }
  double output_scale() const { return output_scale_; }
  int dimension() const { return static_cast<int>(lengthscales_.size()); }
  bool stationary() const { return family_ != KernelFamily::kPolynomialDeg2; }

 private:
  KernelFamily family_;
  Vector lengthscales_;
  double output_scale_;
};

// k(u, v)
double kernel_eval(const Kernel& k, const ConstVectorRef& u, const ConstVectorRef& v);

// Gradient of k(u, v) with respect to the first argument; component j is
// d/du_j k(u, v). Zero at u = v for stationary families.
Vector kernel_grad_first(const Kernel& k, const ConstVectorRef& u,
                         const ConstVectorRef& v);

// Cross-Hessian of k; entry (i, j) is d^2 k / du_i dv_j. At u = v this is
// the prior covariance of the gradient of a draw from GP(0, k).
Matrix kernel_cross_hessian(const Kernel& k, const ConstVectorRef& u,
                            const ConstVectorRef& v);

// K(A, B) with A as rows of the result.
Matrix kernel_matrix(const Kernel& k, const std::vector<Vector>& a,
                     const std::vector<Vector>& b);
Matrix kernel_matrix(const Kernel& k, const std::vector<Vector>& pts);

// k(pts, z) as a column vector.
Vector kernel_vector(const Kernel& k, const std::vector<Vector>& pts,
                     const ConstVectorRef& z);

// grad k(theta, D): d x |D| matrix whose column i is kernel_grad_first(theta, D_i).
Matrix kernel_grad_cross(const Kernel& k, const ConstVectorRef& theta,
                         const std::vector<Vector>& pts);

// Drops points that lie within `tol` (Euclidean) of an earlier point.
std::vector<Vector> dedup_points(const std::vector<Vector>& pts, double tol = 1e-10);

// Cholesky factorization of K(D, D) + (sigma2 + jitter) I over deduplicated
// points. Jitter starts at 1e-14 x mean diagonal and escalates by factors of
// 10 up to 1e-4 x mean diagonal until the factorization succeeds. The small
// start matters: clustered designs around the current iterate are the whole
// point of gradient conditioning, and a large floor caps how much of the
// gradient variance they can explain.
struct GramFactorization {
  std::vector<Vector> points;
  Matrix matrix;          // K + (sigma2 + jitter) I
  double noise_variance;  // sigma2
  double jitter;          // the jitter actually added
  Matrix factor;          // lower-triangular L with L L^T = matrix

  template <typename Derived>
  Matrix solve(const Eigen::MatrixBase<Derived>& rhs) const {
    Matrix y = factor.triangularView<Eigen::Lower>().solve(rhs.derived());
    return factor.triangularView<Eigen::Lower>().transpose().solve(y);
  }
};

GramFactorization gram_factorize(const Kernel& k, const std::vector<Vector>& points,
                                 double sigma2);

namespace detail {

// Stationary profiles as functions of t = squared scaled distance:
// g(t) together with dg/dt and d^2g/dt^2. All three are smooth at t = 0
// for the families admitted here.
struct ProfileDerivs {
  double g;
  double g1;
  double g2;
};

ProfileDerivs stationary_profile(KernelFamily family, double t);

constexpr double kJitterRelStart = 1e-14;
constexpr double kJitterRelMax = 1e-4;
constexpr double kDedupTol = 1e-10;

}  // namespace detail

}  // namespace dpgibo
