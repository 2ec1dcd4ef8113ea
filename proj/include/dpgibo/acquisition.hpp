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

#include <optional>
#include <vector>

#include "dpgibo/gp_gradient.hpp"
#include "dpgibo/rng.hpp"

namespace dpgibo {

struct AcquisitionConfig {
  double epsilon = 1e-3;       // posterior-trace tolerance
  int b_max = 0;               // 0 -> 2(d+1) at the use site
  double search_radius = 1.0;  // candidate box half-width, in lengthscale units
  int restarts = 3;            // local descents started from the best seeds
  int local_steps = 10;        // coordinate-descent sweeps per descent
  int candidate_seed_count = 32;

  int resolved_b_max(int dim) const { return b_max > 0 ? b_max : 2 * (dim + 1); }
};

struct BatchProposal {
  std::vector<Vector> points;
  double achieved_trace = 0.0;
  int batch_size_used = 0;
  bool hit_cap = false;
};

// The gradient-uncertainty acquisition
//   alpha(z; D, theta) = -Tr( grad k(theta, A) (K_A + sigma2 I)^{-1} k(A, theta) grad^T ),
// A = D u z: the negated explained-variance trace of the gradient posterior.
// Tr(prior cross-Hessian) + alpha equals the posterior gradient trace.
// Observations are not an input; the acquisition reads the design only.
double acquisition_value(const Kernel& k, const std::vector<Vector>& design,
                         const std::vector<Vector>& batch, const ConstVectorRef& theta,
                         double sigma2);

// Theta-specific view of a conditioned design that supports cheap tentative
// extension: each push borders the base Cholesky factor with O(|D| b) work,
// so whole candidate batches can be scored and rolled back during search.
class GradientScratch {
 public:
  GradientScratch(const ConditionedGram& base, Vector theta);

  const Vector& theta() const { return theta_; }
  int dim() const { return static_cast<int>(theta_.size()); }
  const Kernel& base_kernel() const;
  double base_sigma2_jitter() const;
  double prior_trace() const { return prior_trace_; }
  double explained() const { return explained_base_ + explained_ext_; }
  double achieved_trace() const { return prior_trace_ - explained(); }
  int ext_size() const { return static_cast<int>(ext_pts_.size()); }
  const std::vector<Vector>& ext_points() const { return ext_pts_; }

  // Explained-variance gain of adding z on top of base + extension.
  // Returns 0 for points that are numerically indistinguishable from the
  // current design.
  double gain(const ConstVectorRef& z) const;

  // Tentatively adds z; returns false (no-op) if degenerate or duplicate.
  bool push(const Vector& z);
  void rollback(int size);

  // Diagonal of the residual gradient covariance, one entry per dimension.
  Vector axis_residual_variances() const;

 private:
  struct Extension1 {
    Vector u1;  // N
    Vector u2;  // m (rows above this one)
    double s;
    Vector w;  // d
  };
  std::optional<Extension1> extend_one(const ConstVectorRef& z) const;

  const ConditionedGram* base_;
  Vector theta_;
  double prior_trace_;
  Vector prior_diag_;
  Matrix w_base_;      // N x d
  double explained_base_;
  double explained_ext_ = 0.0;
  std::vector<Vector> ext_pts_;
  Matrix ext_cols_;  // N x m
  Matrix ext_tri_;   // m x m lower triangular
  Matrix ext_w_;     // m x d
};

// Finds b points inside the candidate box around theta minimizing the
// acquisition. Selection is the better of (a) greedy-sequential multistart
// local descent on the one-point gain and (b) constructive batches (axis
// +-h pairs with repetition, and a centered regular simplex once b > dim)
// with a deterministic line search over the cluster radius h. Deterministic
// given the rng seed.
std::vector<Vector> minimize_batch(const Kernel& k, const std::vector<Vector>& design,
                                   const ConstVectorRef& theta, int b,
                                   const AcquisitionConfig& cfg, double sigma2,
                                   RngStream& rng);

// Algorithm step: the smallest batch b = 1, 2, ... whose achieved posterior
// trace meets epsilon, capped at b_max. On a binding cap the best batch found
// is returned with hit_cap = true and the run continues with weaker bias
// control.
BatchProposal select_minimal_batch(const Kernel& k, const std::vector<Vector>& design,
                                   const ConstVectorRef& theta, const AcquisitionConfig& cfg,
                                   double sigma2, RngStream& rng);

namespace detail {

struct SearchBox {
  Vector lo;
  Vector hi;
};

SearchBox make_search_box(const ConstVectorRef& theta, const Vector& lengthscales,
                          double radius, const Vector* domain_lo, const Vector* domain_hi);

// Shared implementation working on a scratch whose extension is empty on
// entry and on exit. Used by both the public wrappers and the optimizer.
BatchProposal select_minimal_batch_impl(GradientScratch& scratch, const AcquisitionConfig& cfg,
                                        const SearchBox& box, RngStream& rng);

// Unit-radius centered regular simplex: d+1 rows in R^d.
Matrix simplex_directions(int dim);

}  // namespace detail

}  // namespace dpgibo
