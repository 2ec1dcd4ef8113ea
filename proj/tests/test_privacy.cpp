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

#include "dpgibo/privacy.hpp"

using namespace dpgibo;

TEST_CASE("clip") {
  Vector v(2);
  v << 0.3, 0.4;  // norm 0.5
  CHECK((clip(v, 1.0) - v).norm() == 0.0);

  Vector big(2);
  big << 1.2, 1.6;  // norm 2
  CHECK((clip(big, 1.0) - 0.5 * big).norm() <= 1e-15);

  CHECK(clip(Vector::Zero(3), 1.0).norm() == 0.0);
  CHECK_THROWS_AS(clip(v, 0.0), std::invalid_argument);
}

TEST_CASE("clip is non-expansive toward in-ball targets") {
  RngStream rng(51, 0, 0, StreamPurpose::kTest);
  const double clip_bound = 1.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 1 + static_cast<int>(rng.next_u64() % 4);
    const Vector v = 3.0 * rng.normal_vector(d);
    Vector u = rng.normal_vector(d);
    if (u.norm() > clip_bound) u *= rng.uniform() * clip_bound / u.norm();
    CHECK((clip(v, clip_bound) - u).norm() <= (v - u).norm() + 1e-12);
  }
}

TEST_CASE("clip_aggregate") {
  Matrix inside(2, 2);
  inside << 0.1, 0.2, -0.3, 0.1;
  CHECK((clip_aggregate(inside, 1.0) -
         Vector(inside.colwise().mean().transpose())).norm() <= 1e-15);

  Matrix opposite(2, 2);
  opposite.row(0) << 3.0, 0.0;
  opposite.row(1) << -3.0, 0.0;
  CHECK(clip_aggregate(opposite, 1.0).norm() == doctest::Approx(0.0));
}

TEST_CASE("neighboring-dataset sensitivity is 2B/n") {
  RngStream rng(52, 0, 0, StreamPurpose::kTest);
  const double clip_bound = 0.7;
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 20);
    const int d = 1 + static_cast<int>(rng.next_u64() % 4);
    Matrix y(n, d);
    for (int i = 0; i < n; ++i) {
      y.row(i) = (std::pow(10.0, rng.uniform(-1.0, 1.0)) * rng.normal_vector(d)).transpose();
    }
    Matrix y2 = y;
    y2.row(static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n))) =
        (std::pow(10.0, rng.uniform(-1.0, 1.0)) * rng.normal_vector(d)).transpose();
    const double diff =
        (clip_aggregate(y, clip_bound) - clip_aggregate(y2, clip_bound)).norm();
    CHECK(diff <= 2.0 * clip_bound / n + 1e-12);
  }
}

TEST_CASE("gaussian_mechanism_scale") {
  CHECK(gaussian_mechanism_scale(1.0, 1.0) == doctest::Approx(1.0));
  CHECK(gaussian_mechanism_scale(0.0, 2.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(gaussian_mechanism_scale(1.0, 0.0), std::invalid_argument);

  // The Algorithm 1 instantiation: both derivations give the same scale.
  const double clip_bound = 1.0;
  const int n = 50, iterations = 150;
  const double mu = 0.5;
  const double direct = 2.0 * clip_bound * std::sqrt(static_cast<double>(iterations)) / (n * mu);
  const double via_mechanism = gaussian_mechanism_scale(
      2.0 * clip_bound / n, mu / std::sqrt(static_cast<double>(iterations)));
  CHECK(direct == doctest::Approx(0.979796).epsilon(1e-6));
  CHECK(via_mechanism == doctest::Approx(direct).epsilon(1e-14));

  PrivacyBudget budget(mu, iterations, clip_bound, n);
  CHECK(budget.noise_scale() == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("gdp_compose") {
  CHECK(gdp_compose({0.7}) == doctest::Approx(0.7));
  CHECK(gdp_compose({1.0, 1.0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  const int iterations = 150;
  std::vector<double> ledger(iterations, 2.0 / std::sqrt(static_cast<double>(iterations)));
  CHECK(std::abs(gdp_compose(ledger) - 2.0) <= 1e-12);
}

TEST_CASE("max_noise_envelope") {
  CHECK(max_noise_envelope(1, 1, 1.0) == doctest::Approx(4.0));
  // 8 + 2 sqrt(2 ln 200), frozen from direct arithmetic
  CHECK(max_noise_envelope(10, 4, 0.05) == doctest::Approx(14.510487).epsilon(1e-5));
  CHECK_THROWS_AS(max_noise_envelope(0, 1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(max_noise_envelope(1, 1, 0.0), std::invalid_argument);

  // Monte-Carlo: the envelope holds with failure rate <= delta + slack.
  RngStream rng(53, 0, 0, StreamPurpose::kTest);
  const int trials = 10000, iterations = 20, d = 5;
  const double envelope = max_noise_envelope(iterations, d, 0.01);
  int violations = 0;
  for (int trial = 0; trial < trials; ++trial) {
    double max_norm = 0.0;
    for (int t = 0; t < iterations; ++t) {
      max_norm = std::max(max_norm, rng.normal_vector(d).norm());
    }
    if (max_norm > envelope) ++violations;
  }
  CHECK(static_cast<double>(violations) / trials <= 0.01 + 0.01);
}

TEST_CASE("privatize_gradient") {
  Matrix per_user(3, 2);
  per_user << 0.1, 0.2, -0.4, 0.3, 2.0, -2.0;

  SUBCASE("non-private mode releases the clipped aggregate exactly") {
    PrivacyBudget budget(0.0, 10, 1.0, 3);
    RngStream rng(54, 0, 0, StreamPurpose::kPrivacyNoise);
    const NoisyGradient g = privatize_gradient(per_user, budget, rng);
    CHECK((g.value - g.clipped_aggregate).norm() == 0.0);
    CHECK(g.noise.norm() == 0.0);
    CHECK(budget.ledger().empty());
    CHECK(g.clip_fraction == doctest::Approx(1.0 / 3.0));
  }

  SUBCASE("fixed seed reproduces the noise bit-for-bit") {
    PrivacyBudget b1(1.0, 10, 1.0, 3), b2(1.0, 10, 1.0, 3);
    RngStream r1(55, 0, 3, StreamPurpose::kPrivacyNoise);
    RngStream r2(55, 0, 3, StreamPurpose::kPrivacyNoise);
    const NoisyGradient g1 = privatize_gradient(per_user, b1, r1);
    const NoisyGradient g2 = privatize_gradient(per_user, b2, r2);
    CHECK((g1.noise - g2.noise).norm() == 0.0);
    CHECK((g1.value - (g1.clipped_aggregate + g1.noise)).norm() == 0.0);
    CHECK(g1.clipped_aggregate.norm() <= 1.0 + 1e-12);
  }

  SUBCASE("ledger fills to exactly mu and then refuses") {
    const int iterations = 7;
    PrivacyBudget budget(1.5, iterations, 1.0, 3);
    for (int t = 0; t < iterations; ++t) {
      RngStream rng(56, 0, static_cast<std::uint64_t>(t), StreamPurpose::kPrivacyNoise);
      privatize_gradient(per_user, budget, rng);
    }
    CHECK(std::abs(gdp_compose(budget.ledger()) - 1.5) <= 1e-12);
    RngStream rng(56, 0, 99, StreamPurpose::kPrivacyNoise);
    CHECK_THROWS_AS(privatize_gradient(per_user, budget, rng), BudgetExhaustedError);
  }
}
