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

#include "dpgibo/gp_gradient.hpp"

#include <cmath>

namespace dpgibo {

EvaluationSet::EvaluationSet(int user_count, double noise_variance)
    : user_count_(user_count), noise_variance_(noise_variance) {
  if (user_count < 1) {
    throw std::invalid_argument("EvaluationSet: user count must be >= 1");
  }
  if (noise_variance < 0.0) {
    throw std::invalid_argument("EvaluationSet: noise variance must be >= 0");
  }
  observations_.resize(user_count, 0);
}

bool EvaluationSet::is_duplicate(const ConstVectorRef& z) const {
  for (const auto& p : points_) {
    if ((p - z).norm() <= detail::kDedupTol) return true;
  }
  return false;
}

int EvaluationSet::append(const std::vector<Vector>& pts, const ConstMatrixRef& observations) {
  if (observations.rows() != user_count_ ||
      observations.cols() != static_cast<Eigen::Index>(pts.size())) {
    throw std::invalid_argument(
        "EvaluationSet::append: observation matrix must be user_count x |points|");
  }
  int kept = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (is_duplicate(pts[i])) continue;
    points_.push_back(pts[i]);
    observations_.conservativeResize(Eigen::NoChange, observations_.cols() + 1);
    observations_.col(observations_.cols() - 1) = observations.col(static_cast<Eigen::Index>(i));
    ++kept;
  }
  return kept;
}

ConditionedGram::ConditionedGram(Kernel kernel, double sigma2)
    : kernel_(std::move(kernel)), sigma2_(sigma2) {
  if (sigma2 < 0.0 || !std::isfinite(sigma2)) {
    throw std::invalid_argument("ConditionedGram: noise variance must be >= 0");
  }
  chol_.resize(0, 0);
}

ConditionedGram::ConditionedGram(Kernel kernel, double sigma2, const std::vector<Vector>& pts)
    : ConditionedGram(std::move(kernel), sigma2) {
  append_all(pts);
}

void ConditionedGram::refactorize(double jitter_rel_start) {
  const auto n = static_cast<Eigen::Index>(points_.size());
  const Matrix kmat = kernel_matrix(kernel_, points_);
  mean_diag_ = n > 0 ? kmat.diagonal().mean() + sigma2_ : 1.0;
  for (double rel = jitter_rel_start; rel <= detail::kJitterRelMax * 1.0001; rel *= 10.0) {
    Matrix m = kmat;
    m.diagonal().array() += sigma2_ + rel * mean_diag_;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      jitter_ = rel * mean_diag_;
      jitter_rel_ = rel;
      return;
    }
  }
  throw IllConditionedGramError(
      "ConditionedGram: Cholesky failed at maximum jitter (|D|=" +
          std::to_string(points_.size()) + ")",
      detail::kJitterRelMax * mean_diag_, kmat.diagonal().minCoeff(), mean_diag_);
}

bool ConditionedGram::append(const ConstVectorRef& z) {
  for (const auto& p : points_) {
    if ((p - z).norm() <= detail::kDedupTol) return false;
  }
  const auto n = static_cast<Eigen::Index>(points_.size());
  if (n == 0) {
    points_.emplace_back(z);
    refactorize(jitter_rel_);
    return true;
  }
  const double kzz = kernel_eval(kernel_, z, z) + sigma2_ + jitter_;
  const Vector kz = kernel_vector(kernel_, points_, z);
  const Vector u = chol_.triangularView<Eigen::Lower>().solve(kz);
  const double s2 = kzz - u.squaredNorm();
  // Border pivot must stay clear of roundoff; otherwise rebuild with more jitter.
  if (s2 > 1e-14 * kzz) {
    points_.emplace_back(z);
    chol_.conservativeResize(n + 1, n + 1);
    chol_.row(n).head(n) = u.transpose();
    chol_.col(n).head(n).setZero();
    chol_(n, n) = std::sqrt(s2);
    return true;
  }
  points_.emplace_back(z);
  refactorize(jitter_rel_ * 10.0);
  return true;
}

int ConditionedGram::append_all(const std::vector<Vector>& pts) {
  int kept = 0;
  for (const auto& p : pts) kept += append(p) ? 1 : 0;
  return kept;
}

Matrix posterior_gradient_means(const ConditionedGram& gram, const EvaluationSet& ev,
                                const ConstVectorRef& theta) {
  if (ev.empty()) {
    throw std::invalid_argument("posterior_gradient_means: evaluation set is empty");
  }
  if (gram.size() != ev.size()) {
    throw std::invalid_argument(
        "posterior_gradient_means: factorization does not match evaluation set");
  }
  const Matrix grad_cross = kernel_grad_cross(gram.kernel(), theta, gram.points());
  // One shared factorization; per-user cost is a pair of triangular solves.
  const Matrix alpha = gram.solve(ev.observations().transpose());  // |D| x n
  return (grad_cross * alpha).transpose();                         // n x d
}

Matrix posterior_gradient_means(const Kernel& k, const EvaluationSet& ev,
                                const ConstVectorRef& theta) {
  ConditionedGram gram(k, ev.noise_variance(), ev.points());
  return posterior_gradient_means(gram, ev, theta);
}

Matrix posterior_gradient_covariance(const Kernel& k, const std::vector<Vector>& points,
                                     double sigma2, const ConstVectorRef& theta) {
  Matrix prior = kernel_cross_hessian(k, theta, theta);
  if (points.empty()) return prior;
  ConditionedGram gram(k, sigma2, points);
  const Matrix grad_cross = kernel_grad_cross(k, theta, gram.points());  // d x |D|
  const Matrix w = gram.half_solve(grad_cross.transpose());              // |D| x d
  Matrix cov = prior - w.transpose() * w;
  cov = 0.5 * (cov + cov.transpose()).eval();
  return cov;
}

GradientPosterior gradient_posterior(const Kernel& k, const EvaluationSet& ev,
                                     const ConstVectorRef& theta) {
  GradientPosterior post;
  post.location = theta;
  post.per_user_means = posterior_gradient_means(k, ev, theta);
  post.covariance = posterior_gradient_covariance(k, ev.points(), ev.noise_variance(), theta);
  post.covariance_trace = post.covariance.trace();
  return post;
}

Vector aggregate_mean_gradient(const ConstMatrixRef& per_user) {
  if (per_user.rows() < 1) {
    throw std::invalid_argument("aggregate_mean_gradient: need at least one user");
  }
  return per_user.colwise().mean().transpose();
}

}  // namespace dpgibo
