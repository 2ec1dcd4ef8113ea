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

#include <stdexcept>
#include <vector>

#include "dpgibo/kernels.hpp"
#include "dpgibo/rng.hpp"

namespace dpgibo {

class BudgetExhaustedError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Euclidean composition of GDP parameters: a T-fold composition of
// mu_t-GDP mechanisms is sqrt(sum mu_t^2)-GDP.
double gdp_compose(const std::vector<double>& mu_list);

// v * min{1, B/||v||}; the radial projection onto the B-ball. clip(0) = 0.
Vector clip(const ConstVectorRef& v, double clip_bound);

// Mean of the per-row clipped vectors. Its global sensitivity over
// neighboring matrices (one row replaced) is exactly 2B/n.
Vector clip_aggregate(const ConstMatrixRef& per_user, double clip_bound);

// Standard deviation GS/mu of the Gaussian mechanism achieving mu-GDP for a
// statistic with global sensitivity GS.
double gaussian_mechanism_scale(double global_sensitivity, double mu);

// High-probability envelope for the largest of T standard normal d-vectors:
// 4 sqrt(d) + 2 sqrt(2 log(T/delta)).
double max_noise_envelope(int iterations, int dim, double delta);

// Total budget mu, its per-iteration split mu/sqrt(T), and the consumed
// ledger. mu_total = 0 encodes the non-private mode (mu = infinity): no
// noise, no ledger writes. Enforces gdp_compose(ledger) <= mu_total at all
// times.
class PrivacyBudget {
 public:
  PrivacyBudget(double mu_total, int iterations, double clip_bound, int user_count);

  bool non_private() const { return mu_total_ == 0.0; }
  double mu_total() const { return mu_total_; }
  int iterations() const { return iterations_; }
  double clip_bound() const { return clip_bound_; }
  int user_count() const { return user_count_; }

  // mu_total / sqrt(T); 0 in non-private mode.
  double per_iteration_mu() const;
  // Per-coordinate noise std 2 B sqrt(T) / (n mu); 0 in non-private mode.
  double noise_scale() const;

  const std::vector<double>& ledger() const { return ledger_; }
  double consumed() const { return gdp_compose(ledger_); }
  bool has_room(double mu_next) const;
  // Appends mu_spent; throws BudgetExhaustedError if composition would
  // exceed mu_total.
  void record(double mu_spent);

 private:
  double mu_total_;
  int iterations_;
  double clip_bound_;
  int user_count_;
  std::vector<double> ledger_;
};

struct NoisyGradient {
  Vector value;              // clipped_aggregate + noise, the released quantity
  Vector clipped_aggregate;  // g_t
  Vector noise;
  double noise_scale = 0.0;
  double clip_fraction = 0.0;  // fraction of users whose gradient was scaled down
};

// Clip-aggregate the per-user gradients, add N(0, noise_scale^2 I) and charge
// mu/sqrt(T) to the ledger. The only operation that releases data-dependent
// values per iteration.
NoisyGradient privatize_gradient(const ConstMatrixRef& per_user, PrivacyBudget& budget,
                                 RngStream& rng);

}  // namespace dpgibo
