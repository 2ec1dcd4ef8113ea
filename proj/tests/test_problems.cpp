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

#include <doctest.h>

#include <cmath>

#include "dpgibo/optimizer.hpp"
#include "dpgibo/problems.hpp"

using namespace dpgibo;

namespace {

double fd_loss_grad(const Problem& p, const Vector& theta, int j, double h = 1e-5) {
  Vector up = theta, um = theta;
  up[j] += h;
  um[j] -= h;
  return (p.true_loss(up) - p.true_loss(um)) / (2.0 * h);
}

void check_per_user_decomposition(const Problem& p) {
  RngStream rng(71, 0, 0, StreamPurpose::kTest);
  const Vector theta = rng.uniform_vector(p.domain_lo, p.domain_hi);
  const Vector values = p.evaluate_users(theta, 0);
  // Per-user mean equals the diagnostic loss when evaluation noise is off.
  CHECK(values.mean() == doctest::Approx(p.true_loss(theta)).epsilon(1e-10));
}

void check_gradient_oracle(const Problem& p) {
  RngStream rng(72, 0, 0, StreamPurpose::kTest);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector theta = rng.uniform_vector(p.domain_lo, p.domain_hi);
    const Vector g = p.true_gradient(theta);
    for (int j = 0; j < p.dimension; ++j) {
      CHECK(std::abs(g[j] - fd_loss_grad(p, theta, j)) <= 1e-4 * (1.0 + std::abs(g[j])));
    }
  }
}

}  // namespace

TEST_CASE("normal location problem") {
  const Problem p = normal_location_problem(20, 5, Vector::Ones(5), 3);
  CHECK(p.dimension == 5);
  CHECK(p.user_count == 20);
  check_per_user_decomposition(p);
  check_gradient_oracle(p);

  // Per-user loss vanishes at the user's own data point.
  const Matrix grads = p.per_user_gradients(Vector::Zero(5));
  for (int i = 0; i < 3; ++i) {
    const Vector x_i = Vector::Zero(5) - grads.row(i).transpose();  // theta - grad = x_i
    CHECK(p.per_user_eval(x_i, i, 0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  // diagnostic gradient is theta - mean(x)
  const Vector g0 = p.true_gradient(Vector::Zero(5));
  const Vector g1 = p.true_gradient(Vector::Ones(5));
  CHECK((g1 - g0 - Vector::Ones(5)).norm() <= 1e-12);
}

TEST_CASE("huber regression problem") {
  const Problem p = huber_regression_problem(50, 4, Vector::Ones(4), 1.0, 4);
  check_per_user_decomposition(p);
  check_gradient_oracle(p);
  CHECK(p.gradient_bound == doctest::Approx(std::sqrt(2.0)));

  // Per-user gradient norms stay below c sqrt(2) everywhere.
  RngStream rng(73, 0, 0, StreamPurpose::kTest);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector theta = 3.0 * rng.normal_vector(4);
    const Matrix g = p.per_user_gradients(theta);
    for (int i = 0; i < g.rows(); ++i) {
      CHECK(g.row(i).norm() <= std::sqrt(2.0) + 1e-12);
    }
  }
}

TEST_CASE("gp lengthscale tuning problem") {
  const Problem p = gp_lengthscale_tuning_problem(4, 120, 0.0, 5);
  CHECK(p.user_count == 60);
  check_per_user_decomposition(p);

  // The generating lengthscales beat random ones in median over 5 seeds.
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Problem q = gp_lengthscale_tuning_problem(4, 120, 0.0, seed);
    RngStream rng(74, 0, seed, StreamPurpose::kTest);
    const double at_truth = q.true_loss(Vector::Zero(4));  // log-lengthscales of 1
    const double at_random = q.true_loss(rng.uniform_vector(q.domain_lo, q.domain_hi));
    if (at_truth <= at_random) ++wins;
  }
  CHECK(wins >= 3);
}

TEST_CASE("noisy wrapper") {
  const Problem base = normal_location_problem(10, 3, Vector::Ones(3), 6);

  SUBCASE("lambda zero is the identity") {
    const Problem same = noisy_wrapper(base, 0.0);
    RngStream rng(75, 0, 0, StreamPurpose::kTest);
    const Vector theta = rng.normal_vector(3);
    CHECK((same.evaluate_users(theta, 7) - base.evaluate_users(theta, 7)).norm() == 0.0);
  }

  SUBCASE("repeated evaluations have std lambda") {
    const double lambda = 0.01;
    const Problem noisy = noisy_wrapper(base, lambda);
    const Vector theta = Vector::Zero(3);
    const double clean = base.per_user_eval(theta, 2, 0);
    double sum = 0.0, sum_sq = 0.0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
      const double v = noisy.per_user_eval(theta, 2, static_cast<std::uint64_t>(r)) - clean;
      sum += v;
      sum_sq += v * v;
    }
    const double std_hat = std::sqrt(sum_sq / reps - (sum / reps) * (sum / reps));
    CHECK(std::abs(std_hat - lambda) <= 0.05 * lambda);
  }

  SUBCASE("noise streams are uncorrelated across users") {
    const Problem noisy = noisy_wrapper(base, 1.0);
    const Vector theta = Vector::Zero(3);
    const Vector clean = base.evaluate_users(theta, 0);
    double sum_xy = 0.0, sum_x = 0.0, sum_y = 0.0, sum_x2 = 0.0, sum_y2 = 0.0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
      const Vector v = noisy.evaluate_users(theta, static_cast<std::uint64_t>(r)) - clean;
      sum_x += v[0];
      sum_y += v[1];
      sum_xy += v[0] * v[1];
      sum_x2 += v[0] * v[0];
      sum_y2 += v[1] * v[1];
    }
    const double n = reps;
    const double corr = (sum_xy / n - sum_x * sum_y / (n * n)) /
                        std::sqrt((sum_x2 / n - sum_x * sum_x / (n * n)) *
                                  (sum_y2 / n - sum_y * sum_y / (n * n)));
    CHECK(std::abs(corr) <= 0.05);
  }
}

TEST_CASE("svm surrogate problem") {
  const Problem p = svm_surrogate_problem(8, 9);
  check_per_user_decomposition(p);
  check_gradient_oracle(p);

  // Quoted regularization boxes.
  CHECK(p.domain_lo[0] == doctest::Approx(0.01));
  CHECK(p.domain_hi[0] == doctest::Approx(1.0));
  CHECK(p.domain_lo[1] == doctest::Approx(0.1));
  CHECK(p.domain_hi[1] == doctest::Approx(3.0));
  CHECK(p.domain_lo[2] == doctest::Approx(0.01));
  CHECK(p.domain_hi[2] == doctest::Approx(5.0));
  CHECK(p.domain_lo[3] == doctest::Approx(-2.0));

  REQUIRE(p.planted_minimum.size() == 8);
  const Vector& star = p.planted_minimum;
  CHECK(p.true_gradient(star).norm() <= 1e-12);
  Vector fd(8);
  for (int j = 0; j < 8; ++j) fd[j] = fd_loss_grad(p, star, j);
  CHECK(fd.norm() <= 1e-6);

  RngStream rng(76, 0, 0, StreamPurpose::kTest);
  const double at_star = p.true_loss(star);
  for (int rep = 0; rep < 100; ++rep) {
    CHECK(at_star < p.true_loss(rng.uniform_vector(p.domain_lo, p.domain_hi)));
  }
}

TEST_CASE("random search baseline") {
  const Problem p = normal_location_problem(10, 2, Vector::Ones(2), 12);

  SUBCASE("budget one returns the single draw") {
    const RunRecord r = random_search_baseline(p, 1, 3);
    CHECK(r.rows.size() == 1);
    CHECK(r.total_evaluations == 10);
  }

  SUBCASE("best-so-far is nonincreasing") {
    const RunRecord r = random_search_baseline(p, 40, 3);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      CHECK(r.rows[i].f_true <= r.rows[i - 1].f_true + 1e-12);
    }
  }

  SUBCASE("more budget helps on a 2-d bowl in median") {
    std::vector<double> short_runs, long_runs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      short_runs.push_back(random_search_baseline(p, 5, seed).final_loss);
      long_runs.push_back(random_search_baseline(p, 80, seed).final_loss);
    }
    std::sort(short_runs.begin(), short_runs.end());
    std::sort(long_runs.begin(), long_runs.end());
    CHECK(long_runs[10] < short_runs[10]);
  }
}

TEST_CASE("dp_gd baseline") {
  const Problem p = normal_location_problem(40, 3, Vector::Ones(3), 14);
  const Vector x_bar = -p.true_gradient(Vector::Zero(3));

  SUBCASE("non-private descent converges at the quadratic rate") {
    OptimizerConfig cfg(Kernel::rbf(3), Vector::Zero(3));
    cfg.iterations = 60;
    cfg.step_size = 0.2;
    cfg.clip_bound = 10.0;
    cfg.mu = 0.0;
    const RunRecord r = dp_gd_baseline(p, cfg);
    CHECK((r.final_theta - x_bar).norm() <= 1e-4);
    for (std::size_t t = 1; t < 10; ++t) {
      const double prev = (r.rows[t - 1].theta - x_bar).norm();
      const double cur = (r.rows[t].theta - x_bar).norm();
      CHECK(cur <= (1.0 - cfg.step_size) * prev + 1e-12);
    }
  }

  SUBCASE("requires per-user gradients") {
    Problem no_grads = p;
    no_grads.per_user_gradients = nullptr;
    OptimizerConfig cfg(Kernel::rbf(3), Vector::Zero(3));
    CHECK_THROWS_AS(dp_gd_baseline(no_grads, cfg), std::invalid_argument);
  }
}
