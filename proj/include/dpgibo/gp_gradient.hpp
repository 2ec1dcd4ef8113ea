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

#include <vector>

#include "dpgibo/kernels.hpp"

namespace dpgibo {

// The accumulated design D_t plus the n x |D_t| per-user observation matrix.
// Points are append-only across iterations and pairwise distinct after dedup;
// appending a point that duplicates an existing one drops the point together
// with its observation column.
class EvaluationSet {
 public:
  EvaluationSet(int user_count, double noise_variance);

  // Appends the non-duplicate subset of `pts` with the matching columns of
  // `observations` (user_count x |pts|). Returns the number kept.
  int append(const std::vector<Vector>& pts, const ConstMatrixRef& observations);

  // True if z would be dropped as a duplicate of an existing design point.
  bool is_duplicate(const ConstVectorRef& z) const;

  const std::vector<Vector>& points() const { return points_; }
  const Matrix& observations() const { return observations_; }
  double noise_variance() const { return noise_variance_; }
  int user_count() const { return user_count_; }
  int size() const { return static_cast<int>(points_.size()); }
  bool empty() const { return points_.empty(); }

 private:
  int user_count_;
  double noise_variance_;
  std::vector<Vector> points_;
  Matrix observations_;  // user_count x |points|
};

// Incrementally maintained Cholesky factor of K(D, D) + (sigma2 + jitter) I.
// Appends are O(|D|^2) rank-one border updates; if a border pivot degenerates
// the whole matrix is refactorized at an escalated jitter. This is what makes
// the append-only design of the optimizer affordable: the factor is never
// rebuilt from scratch on the happy path.
class ConditionedGram {
 public:
  ConditionedGram(Kernel kernel, double sigma2);
  ConditionedGram(Kernel kernel, double sigma2, const std::vector<Vector>& pts);

  // Appends z unless it duplicates an existing point; returns true if kept.
  bool append(const ConstVectorRef& z);
  int append_all(const std::vector<Vector>& pts);

  const Kernel& kernel() const { return kernel_; }
  const std::vector<Vector>& points() const { return points_; }
  int size() const { return static_cast<int>(points_.size()); }
  double sigma2() const { return sigma2_; }
  double jitter() const { return jitter_; }

  // Lower-triangular factor L with L L^T = K + (sigma2 + jitter) I.
  const Matrix& chol() const { return chol_; }

  template <typename Derived>
  Matrix solve(const Eigen::MatrixBase<Derived>& rhs) const {
    Matrix y = chol_.triangularView<Eigen::Lower>().solve(rhs.derived());
    return chol_.triangularView<Eigen::Lower>().transpose().solve(y);
  }

  // L^{-1} rhs only.
  template <typename Derived>
  Matrix half_solve(const Eigen::MatrixBase<Derived>& rhs) const {
    return chol_.triangularView<Eigen::Lower>().solve(rhs.derived());
  }

 private:
  void refactorize(double jitter_rel_start);

  Kernel kernel_;
  double sigma2_;
  std::vector<Vector> points_;
  Matrix chol_;
  double jitter_ = 0.0;
  double jitter_rel_ = detail::kJitterRelStart;
  double mean_diag_ = 1.0;
};

// Posterior of the gradient of the surrogate at a fixed location.
struct GradientPosterior {
  Vector location;
  Matrix per_user_means;  // n x d
  Matrix covariance;      // d x d
  double covariance_trace;
};

// Row i is the posterior mean gradient of user i's surrogate at theta:
// grad k(theta, D) (K + sigma2 I)^{-1} y_i, all users sharing one
// factorization.
Matrix posterior_gradient_means(const Kernel& k, const EvaluationSet& ev,
                                const ConstVectorRef& theta);
Matrix posterior_gradient_means(const ConditionedGram& gram, const EvaluationSet& ev,
                                const ConstVectorRef& theta);

// Posterior covariance of the gradient at theta given evaluations at
// `points` with noise sigma2. A function of the design only; observations
// are deliberately not an input.
Matrix posterior_gradient_covariance(const Kernel& k, const std::vector<Vector>& points,
                                     double sigma2, const ConstVectorRef& theta);

GradientPosterior gradient_posterior(const Kernel& k, const EvaluationSet& ev,
                                     const ConstVectorRef& theta);

// Column mean of an n x d matrix of per-user gradients.
Vector aggregate_mean_gradient(const ConstMatrixRef& per_user);

}  // namespace dpgibo
