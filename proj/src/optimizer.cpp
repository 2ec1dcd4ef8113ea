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

#include "dpgibo/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dpgibo/logging.hpp"

namespace dpgibo {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double posterior_trace_at(const ConditionedGram& gram, const ConstVectorRef& theta) {
  const double prior = kernel_cross_hessian(gram.kernel(), theta, theta).trace();
  if (gram.size() == 0) return prior;
  const Matrix grad_cross = kernel_grad_cross(gram.kernel(), theta, gram.points());
  const Matrix w = gram.half_solve(grad_cross.transpose());
  return prior - w.squaredNorm();
}

bool inside_box(const Vector& theta, const Vector& lo, const Vector& hi) {
  return (theta.array() >= lo.array()).all() && (theta.array() <= hi.array()).all();
}

}  // namespace

double RunRecord::final_mu_consumed() const {
  return rows.empty() ? 0.0 : rows.back().mu_consumed_cum;
}

std::string run_record_csv_header(int dim) {
  std::string h = "t";
  for (int j = 0; j < dim; ++j) h += ",theta_" + std::to_string(j);
  h += ",f_true,batch_size_used,cumulative_evaluations,trace_achieved,grad_norm,"
       "noise_norm,bias_norm,mu_consumed_cum";
  return h;
}

void write_run_record_csv(const RunRecord& record, std::ostream& os) {
  const int dim = record.final_theta.size() > 0
                      ? static_cast<int>(record.final_theta.size())
                      : (record.rows.empty() ? 0 : static_cast<int>(record.rows[0].theta.size()));
  os << run_record_csv_header(dim) << "\n";
  for (const auto& row : record.rows) {
    os << row.t;
    for (int j = 0; j < dim; ++j) os << "," << format_number(row.theta[j]);
    os << "," << format_number(row.f_true);
    os << "," << row.batch_size_used;
    os << "," << row.cumulative_evaluations;
    os << "," << format_number(row.trace_achieved);
    os << "," << format_number(row.grad_norm);
    os << "," << format_number(row.noise_norm);
    os << "," << format_number(row.bias_norm);
    os << "," << format_number(row.mu_consumed_cum);
    os << "\n";
  }
}

Vector step_update(const ConstVectorRef& theta, const ConstVectorRef& noisy_grad,
                   StepState& state, const OptimizerConfig& cfg) {
  if (!theta.allFinite() || !noisy_grad.allFinite()) {
    throw std::invalid_argument("step_update: inputs must be finite");
  }
  switch (cfg.step_rule) {
    case StepRule::kPlainGd:
      return theta - cfg.step_size * noisy_grad;
    case StepRule::kAdaGrad: {
      if (state.adagrad_accumulator.size() != theta.size()) {
        state.adagrad_accumulator = Vector::Zero(theta.size());
      }
      state.adagrad_accumulator.array() += noisy_grad.array().square();
      return theta.array() -
             cfg.step_size * noisy_grad.array() /
                 (state.adagrad_accumulator.array() + cfg.adagrad_floor).sqrt();
    }
  }
  throw std::logic_error("step_update: unknown step rule");
}

RunRecord dp_gibo_run(const Problem& problem, const OptimizerConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  const int d = problem.dimension;
  const int n = problem.user_count;
  if (cfg.theta0.size() != d) {
    throw std::invalid_argument("dp_gibo_run: theta0 dimension does not match the problem");
  }
  if (cfg.kernel.dimension() != d) {
    throw std::invalid_argument("dp_gibo_run: kernel dimension does not match the problem");
  }
  if (cfg.sigma != problem.eval_noise_sigma) {
    log_warning("dp_gibo_run: declared sigma " + std::to_string(cfg.sigma) +
                " differs from the problem's evaluation noise " +
                std::to_string(problem.eval_noise_sigma));
  }

  RunRecord record;
  const double sigma2 = cfg.sigma * cfg.sigma;
  ConditionedGram gram(cfg.kernel, sigma2);
  EvaluationSet ev(n, sigma2);
  PrivacyBudget budget(cfg.mu, cfg.iterations, cfg.clip_bound, n);
  Vector theta = cfg.theta0;
  StepState step_state;
  long long cumulative_evaluations = 0;
  std::uint64_t eval_key = 0;
  bool warned_outside = false;
  bool warned_cap = false;

  for (int t = 0; t < cfg.iterations; ++t) {
    IterationRow row;
    row.t = t + 1;
    try {
      RngStream acquisition_rng(cfg.seed, 0, static_cast<std::uint64_t>(t),
                                StreamPurpose::kAcquisition);
      GradientScratch scratch(gram, theta);
      const auto box =
          detail::make_search_box(theta, cfg.kernel.lengthscales(),
                                  cfg.acquisition.search_radius, &problem.domain_lo,
                                  &problem.domain_hi);
      BatchProposal proposal =
          detail::select_minimal_batch_impl(scratch, cfg.acquisition, box, acquisition_rng);
      if (proposal.hit_cap && !warned_cap) {
        log_warning("iteration " + std::to_string(t) + ": batch cap b_max=" +
                    std::to_string(cfg.acquisition.resolved_b_max(d)) +
                    " binds with trace " + std::to_string(proposal.achieved_trace) +
                    " > epsilon; continuing with weaker bias control");
        warned_cap = true;
      }

      if (proposal.batch_size_used > 0) {
        Matrix y_new(n, proposal.batch_size_used);
        std::vector<Vector> kept;
        kept.reserve(proposal.points.size());
        int col = 0;
        for (const auto& z : proposal.points) {
          if (ev.is_duplicate(z)) continue;
          y_new.col(col++) = problem.evaluate_users(z, eval_key++);
          kept.push_back(z);
        }
        ev.append(kept, y_new.leftCols(col));
        gram.append_all(kept);
        row.batch_size_used = col;
        cumulative_evaluations += static_cast<long long>(n) * col;
      }

      Matrix per_user = ev.empty() ? Matrix::Zero(n, d)
                                   : posterior_gradient_means(gram, ev, theta);
      RngStream noise_rng(cfg.seed, 0, static_cast<std::uint64_t>(t),
                          StreamPurpose::kPrivacyNoise);
      NoisyGradient noisy = privatize_gradient(per_user, budget, noise_rng);

      row.trace_achieved = std::max(0.0, posterior_trace_at(gram, theta));
      row.grad_norm = noisy.clipped_aggregate.norm();
      row.noise_norm = noisy.noise.norm();
      row.bias_norm = problem.has_true_gradient()
                          ? (noisy.clipped_aggregate - problem.true_gradient(theta)).norm()
                          : kNan;

      theta = step_update(theta, noisy.value, step_state, cfg);
      if (!warned_outside && !inside_box(theta, problem.domain_lo, problem.domain_hi)) {
        log_warning("iteration " + std::to_string(t) +
                    ": iterate left the domain box (no projection is applied)");
        warned_outside = true;
      }

      row.theta = theta;
      row.f_true = problem.has_true_loss() ? problem.true_loss(theta) : kNan;
      row.cumulative_evaluations = cumulative_evaluations;
      row.mu_consumed_cum = budget.consumed();
      record.rows.push_back(std::move(row));
    } catch (const BudgetExhaustedError& e) {
      record.failed = true;
      record.failure_reason = e.what();
      break;
    } catch (const IllConditionedGramError& e) {
      record.failed = true;
      record.failure_reason = e.what();
      break;
    }
  }

  record.final_theta = theta;
  record.budget_ledger = budget.ledger();
  record.total_evaluations = cumulative_evaluations;
  if (!record.rows.empty()) record.final_loss = record.rows.back().f_true;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return record;
}

RunRecord random_search_baseline(const Problem& problem, long long budget_configs,
                                 std::uint64_t seed) {
  if (budget_configs < 1) {
    throw std::invalid_argument("random_search_baseline: budget must be >= 1");
  }
  const auto t_start = std::chrono::steady_clock::now();
  RunRecord record;
  RngStream rng(seed, 1, 0, StreamPurpose::kInit);
  Vector best_theta;
  double best_observed = std::numeric_limits<double>::infinity();
  const int n = problem.user_count;
  for (long long t = 0; t < budget_configs; ++t) {
    const Vector candidate = rng.uniform_vector(problem.domain_lo, problem.domain_hi);
    const Vector values = problem.evaluate_users(candidate, static_cast<std::uint64_t>(t));
    const double observed = values.mean();
    if (observed < best_observed) {
      best_observed = observed;
      best_theta = candidate;
    }
    IterationRow row;
    row.t = static_cast<int>(t + 1);
    row.theta = best_theta;
    row.f_true = problem.has_true_loss() ? problem.true_loss(best_theta) : best_observed;
    row.batch_size_used = 1;
    row.cumulative_evaluations = static_cast<long long>(n) * (t + 1);
    row.trace_achieved = kNan;
    row.grad_norm = kNan;
    row.noise_norm = kNan;
    row.bias_norm = kNan;
    row.mu_consumed_cum = 0.0;
    record.rows.push_back(std::move(row));
  }
  record.final_theta = best_theta;
  record.total_evaluations = static_cast<long long>(n) * budget_configs;
  record.final_loss = record.rows.back().f_true;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return record;
}

RunRecord dp_gd_baseline(const Problem& problem, const OptimizerConfig& cfg) {
  if (!problem.has_per_user_gradients()) {
    throw std::invalid_argument("dp_gd_baseline: the problem must provide analytic "
                                "per-user gradients");
  }
  const auto t_start = std::chrono::steady_clock::now();
  RunRecord record;
  PrivacyBudget budget(cfg.mu, cfg.iterations, cfg.clip_bound, problem.user_count);
  Vector theta = cfg.theta0;
  StepState step_state;
  for (int t = 0; t < cfg.iterations; ++t) {
    IterationRow row;
    row.t = t + 1;
    try {
      const Matrix per_user = problem.per_user_gradients(theta);
      RngStream noise_rng(cfg.seed, 0, static_cast<std::uint64_t>(t),
                          StreamPurpose::kPrivacyNoise);
      NoisyGradient noisy = privatize_gradient(per_user, budget, noise_rng);
      row.grad_norm = noisy.clipped_aggregate.norm();
      row.noise_norm = noisy.noise.norm();
      row.bias_norm = problem.has_true_gradient()
                          ? (noisy.clipped_aggregate - problem.true_gradient(theta)).norm()
                          : kNan;
      theta = step_update(theta, noisy.value, step_state, cfg);
      row.theta = theta;
      row.f_true = problem.has_true_loss() ? problem.true_loss(theta) : kNan;
      row.batch_size_used = 0;
      row.cumulative_evaluations = 0;
      row.trace_achieved = kNan;
      row.mu_consumed_cum = budget.consumed();
      record.rows.push_back(std::move(row));
    } catch (const BudgetExhaustedError& e) {
      record.failed = true;
      record.failure_reason = e.what();
      break;
    }
  }
  record.final_theta = theta;
  record.budget_ledger = budget.ledger();
  record.total_evaluations = 0;
  if (!record.rows.empty()) record.final_loss = record.rows.back().f_true;
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return record;
}

}  // namespace dpgibo
