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

#include "dpgibo/privacy.hpp"

#include <cmath>

namespace dpgibo {

double gdp_compose(const std::vector<double>& mu_list) {
  double sum_sq = 0.0;
  for (const double mu : mu_list) sum_sq += mu * mu;
  return std::sqrt(sum_sq);
}

Vector clip(const ConstVectorRef& v, double clip_bound) {
  if (!(clip_bound > 0.0)) {
    throw std::invalid_argument("clip: clipping bound must be > 0");
  }
  const double norm = v.norm();
  if (norm <= clip_bound) return v;  // includes the v = 0 case
  return v * (clip_bound / norm);
}

Vector clip_aggregate(const ConstMatrixRef& per_user, double clip_bound) {
  if (per_user.rows() < 1) {
    throw std::invalid_argument("clip_aggregate: need at least one user");
  }
  Vector sum = Vector::Zero(per_user.cols());
  for (Eigen::Index i = 0; i < per_user.rows(); ++i) {
    sum += clip(per_user.row(i).transpose(), clip_bound);
  }
  return sum / static_cast<double>(per_user.rows());
}

double gaussian_mechanism_scale(double global_sensitivity, double mu) {
  if (global_sensitivity < 0.0) {
    throw std::invalid_argument("gaussian_mechanism_scale: sensitivity must be >= 0");
  }
  if (!(mu > 0.0)) {
    throw std::invalid_argument("gaussian_mechanism_scale: mu must be > 0");
  }
  return global_sensitivity / mu;
}

double max_noise_envelope(int iterations, int dim, double delta) {
  if (iterations < 1 || dim < 1 || !(delta > 0.0) || delta > 1.0) {
    throw std::invalid_argument("max_noise_envelope: need T >= 1, d >= 1, delta in (0, 1]");
  }
  return 4.0 * std::sqrt(static_cast<double>(dim)) +
         2.0 * std::sqrt(2.0 * std::log(static_cast<double>(iterations) / delta));
}

PrivacyBudget::PrivacyBudget(double mu_total, int iterations, double clip_bound,
                             int user_count)
    : mu_total_(mu_total),
      iterations_(iterations),
      clip_bound_(clip_bound),
      user_count_(user_count) {
  if (mu_total < 0.0 || !std::isfinite(mu_total)) {
    throw std::invalid_argument("PrivacyBudget: mu must be >= 0 (0 = non-private)");
  }
  if (iterations < 1) throw std::invalid_argument("PrivacyBudget: T must be >= 1");
  if (!(clip_bound > 0.0)) throw std::invalid_argument("PrivacyBudget: B must be > 0");
  if (user_count < 1) throw std::invalid_argument("PrivacyBudget: n must be >= 1");
}

double PrivacyBudget::per_iteration_mu() const {
  if (non_private()) return 0.0;
  return mu_total_ / std::sqrt(static_cast<double>(iterations_));
}

double PrivacyBudget::noise_scale() const {
  if (non_private()) return 0.0;
  // 2B sqrt(T) / (n mu), i.e. the mechanism scale for sensitivity 2B/n at
  // the per-iteration budget mu/sqrt(T).
  return gaussian_mechanism_scale(2.0 * clip_bound_ / user_count_, per_iteration_mu());
}

bool PrivacyBudget::has_room(double mu_next) const {
  double sum_sq = mu_next * mu_next;
  for (const double mu : ledger_) sum_sq += mu * mu;
  return std::sqrt(sum_sq) <= mu_total_ + 1e-12;
}

void PrivacyBudget::record(double mu_spent) {
  if (!has_room(mu_spent)) {
    throw BudgetExhaustedError("PrivacyBudget: recording " + std::to_string(mu_spent) +
                               " would exceed the total budget " +
                               std::to_string(mu_total_));
  }
  ledger_.push_back(mu_spent);
}

NoisyGradient privatize_gradient(const ConstMatrixRef& per_user, PrivacyBudget& budget,
                                 RngStream& rng) {
  NoisyGradient out;
  const double clip_bound = budget.clip_bound();
  out.clipped_aggregate = clip_aggregate(per_user, clip_bound);
  int clipped = 0;
  for (Eigen::Index i = 0; i < per_user.rows(); ++i) {
    if (per_user.row(i).norm() > clip_bound) ++clipped;
  }
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(per_user.rows());
  if (budget.non_private()) {
    out.noise = Vector::Zero(per_user.cols());
    out.noise_scale = 0.0;
    out.value = out.clipped_aggregate;
    return out;
  }
  const double mu_step = budget.per_iteration_mu();
  if (!budget.has_room(mu_step)) {
    throw BudgetExhaustedError("privatize_gradient: no budget left for this release");
  }
  out.noise_scale = budget.noise_scale();
  out.noise = out.noise_scale * rng.normal_vector(per_user.cols());
  out.value = out.clipped_aggregate + out.noise;
  budget.record(mu_step);
  return out;
}

}  // namespace dpgibo
