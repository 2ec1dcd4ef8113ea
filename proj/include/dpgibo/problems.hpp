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

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dpgibo/kernels.hpp"

namespace dpgibo {

// A per-user objective f_x(theta) = (1/n) sum_i L(theta, x_i) where only
// noisy per-user queries y_i = L(theta, x_i) + N(0, sigma^2) are observable.
// Evaluation noise is keyed by (problem seed, noise_key, user), so repeated
// queries at the same theta with distinct keys draw independent noise while
// a fixed key reproduces bit-identical values. The diagnostic oracles are
// never consulted by the optimization path.
struct Problem {
  std::string name;
  int dimension = 0;
  int user_count = 0;
  std::uint64_t seed = 0;
  double eval_noise_sigma = 0.0;  // declared sigma
  Vector domain_lo;
  Vector domain_hi;
  double gradient_bound = std::numeric_limits<double>::infinity();
  Vector planted_minimum;  // nonempty only for synthetic landscapes

  // All users' noisy evaluations at theta.
  std::function<Vector(const Vector& theta, std::uint64_t noise_key)> evaluate_users;
  // Single user's noisy evaluation; consistent with evaluate_users.
  std::function<double(const Vector& theta, int user, std::uint64_t noise_key)> per_user_eval;

  // Optional diagnostics (empty std::function when unavailable).
  std::function<double(const Vector& theta)> true_loss;
  std::function<Vector(const Vector& theta)> true_gradient;
  // n x d matrix of per-user analytic gradients; required by the DP-GD
  // baseline.
  std::function<Matrix(const Vector& theta)> per_user_gradients;

  bool has_true_loss() const { return static_cast<bool>(true_loss); }
  bool has_true_gradient() const { return static_cast<bool>(true_gradient); }
  bool has_per_user_gradients() const { return static_cast<bool>(per_user_gradients); }
};

// f(.) = sum_j alpha_j k(., c_j), a function with known RKHS norm
// ||f||_H^2 = alpha^T K_cc alpha. The workhorse of the bias-bound tests.
class SyntheticGPDraw {
 public:
  SyntheticGPDraw(Kernel kernel, std::vector<Vector> centers, Vector weights);

  double value(const ConstVectorRef& theta) const;
  Vector gradient(const ConstVectorRef& theta) const;
  double rkhs_norm_sq() const { return rkhs_norm_sq_; }
  const Kernel& kernel() const { return kernel_; }
  const std::vector<Vector>& centers() const { return centers_; }

 private:
  Kernel kernel_;
  std::vector<Vector> centers_;
  Vector weights_;
  double rkhs_norm_sq_;
};

// Location of the normal model: x_i ~ N(theta_star, I), per-user loss
// 0.5 ||x_i - theta||^2. The negative log-likelihood up to a constant;
// quadratic, so the degree-2 polynomial kernel contains it in its RKHS.
Problem normal_location_problem(int user_count, int dim, const Vector& theta_star,
                                std::uint64_t seed);

// Huber-loss linear regression: y_i = x_i^T theta_star + N(0,1),
// x_i ~ N(0, I); per-user loss rho_c(y_i - x_i^T theta) * min(1, 2/||x_i||^2).
// The weight caps the per-user gradient norm at c * sqrt(2).
Problem huber_regression_problem(int user_count, int dim, const Vector& theta_star,
                                 double huber_c, std::uint64_t seed);

// Lengthscale tuning for GP regression: data generated from a GP draw with
// unit-lengthscale RBF kernel, 50-50 train/validation split; theta holds the
// d log-lengthscales of the regression fit and the per-user loss is
// validation point i's squared prediction error.
Problem gp_lengthscale_tuning_problem(int dim, int n_total, double eval_noise_sigma,
                                      std::uint64_t seed);

// Adds independent N(0, lambda^2) to every per-user evaluation. The declared
// sigma of the result is lambda; optimizer configs may declare something else
// to study misspecification.
Problem noisy_wrapper(const Problem& p, double lambda);

// Scaled-down stand-in for the SVM hyperparameter landscape: a smooth
// synthetic validation loss over 3 regularization-like coordinates on the
// boxes [0.01,1], [0.1,3], [0.01,5] and d-3 lengthscale-like coordinates on
// [-2,2], with a planted local minimum and exact per-user decomposition.
// SURROGATE: this is not the real SVM pipeline.
Problem svm_surrogate_problem(int dim, std::uint64_t seed, int user_count = 100);

}  // namespace dpgibo
