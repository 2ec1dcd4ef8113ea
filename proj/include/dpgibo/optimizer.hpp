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
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dpgibo/acquisition.hpp"
#include "dpgibo/privacy.hpp"
#include "dpgibo/problems.hpp"

namespace dpgibo {

enum class StepRule { kPlainGd, kAdaGrad };

struct OptimizerConfig {
  OptimizerConfig(Kernel kernel, Vector theta0)
      : kernel(std::move(kernel)), theta0(std::move(theta0)) {}

  Kernel kernel;
  Vector theta0;  // non-data-dependent start
  int iterations = 100;
  double step_size = 0.1;
  StepRule step_rule = StepRule::kPlainGd;
  double adagrad_floor = 1e-8;
  double clip_bound = 1.0;
  double mu = 0.0;    // total GDP budget; 0 = non-private
  double sigma = 0.0; // declared evaluation noise std for the Gram solves
  AcquisitionConfig acquisition;
  std::uint64_t seed = 0;
};

// One completed iteration. theta is the post-step iterate theta^{(t)} (the
// quantity Algorithm 1 releases); the batch/gradient fields describe the
// step that produced it. Diagnostic-only columns (f_true, bias_norm) come
// from the problem's oracles and are NaN when unavailable.
struct IterationRow {
  int t = 0;
  Vector theta;
  double f_true = 0.0;
  int batch_size_used = 0;
  long long cumulative_evaluations = 0;
  double trace_achieved = 0.0;
  double grad_norm = 0.0;
  double noise_norm = 0.0;
  double bias_norm = 0.0;
  double mu_consumed_cum = 0.0;
};

struct RunRecord {
  std::vector<IterationRow> rows;
  Vector final_theta;
  bool failed = false;
  std::string failure_reason;
  std::vector<double> budget_ledger;
  long long total_evaluations = 0;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;  // sidecar metadata, never part of the CSV

  double final_mu_consumed() const;
};

// Fixed trace schema; columns after the theta block are
// f_true,batch_size_used,cumulative_evaluations,trace_achieved,grad_norm,
// noise_norm,bias_norm,mu_consumed_cum.
std::string run_record_csv_header(int dim);
void write_run_record_csv(const RunRecord& record, std::ostream& os);

// Plain or AdaGrad descent step on the privatized gradient. The AdaGrad
// accumulator sums the privatized (post-processing safe) gradients.
struct StepState {
  Vector adagrad_accumulator;
};
Vector step_update(const ConstVectorRef& theta, const ConstVectorRef& noisy_grad,
                   StepState& state, const OptimizerConfig& cfg);

// The main loop: per iteration, select the minimal batch meeting the bias
// tolerance, query every user at the new points, condition the gradient
// posterior, privatize the aggregated gradient, and step. Bit-reproducible
// for a fixed seed. Budget exhaustion or an unfactorizable Gram abort with
// a partial RunRecord flagged failed.
RunRecord dp_gibo_run(const Problem& problem, const OptimizerConfig& cfg);

// Baselines sharing the privacy machinery (problems-module operations).
//
// Uniform random search over the domain box at the same n-evaluations-per-
// configuration accounting as DP-GIBO; rows track the best-so-far.
RunRecord random_search_baseline(const Problem& problem, long long budget_configs,
                                 std::uint64_t seed);

// Noisy gradient descent on the problem's analytic per-user gradients with
// the same clip/noise/step path as DP-GIBO, isolating the cost of gradient
// estimation.
RunRecord dp_gd_baseline(const Problem& problem, const OptimizerConfig& cfg);

}  // namespace dpgibo
