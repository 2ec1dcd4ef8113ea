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

#include "dpgibo/acquisition.hpp"

using namespace dpgibo;

TEST_CASE("acquisition_value basics") {
  const Kernel k = Kernel::rbf(2);
  const Vector theta = Vector::Zero(2);
  CHECK(acquisition_value(k, {}, {}, theta, 0.0) == doctest::Approx(0.0));

  // Identity: prior trace + alpha equals the posterior trace, computed
  // through the independent covariance path.
  RngStream rng(31, 0, 0, StreamPurpose::kTest);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Vector> design;
    for (int i = 0; i < 3; ++i) design.push_back(rng.normal_vector(2));
    std::vector<Vector> batch;
    for (int i = 0; i < 2; ++i) batch.push_back(rng.normal_vector(2));
    const double alpha = acquisition_value(k, design, batch, theta, 0.01);
    std::vector<Vector> all = design;
    all.insert(all.end(), batch.begin(), batch.end());
    const double post = posterior_gradient_covariance(k, all, 0.01, theta).trace();
    const double prior = kernel_cross_hessian(k, theta, theta).trace();
    CHECK(prior + alpha == doctest::Approx(post).epsilon(1e-8));
  }
}

TEST_CASE("acquisition is monotone in added points") {
  RngStream rng(32, 0, 0, StreamPurpose::kTest);
  const Kernel k = Kernel::matern52(2);
  const Vector theta = Vector::Zero(2);
  std::vector<Vector> batch;
  double prev = 0.0;
  for (int i = 0; i < 6; ++i) {
    batch.push_back(rng.normal_vector(2));
    const double alpha = acquisition_value(k, {}, batch, theta, 0.05);
    CHECK(alpha <= prev + 1e-10);
    prev = alpha;
  }
}

TEST_CASE("minimize_batch brackets theta in one dimension") {
  const Kernel k = Kernel::rbf(1);
  Vector theta(1);
  theta << 0.3;
  AcquisitionConfig cfg;
  cfg.epsilon = 1e-6;
  RngStream rng(33, 0, 0, StreamPurpose::kAcquisition);
  const auto pts = minimize_batch(k, {}, theta, 2, cfg, 0.0, rng);
  REQUIRE(pts.size() == 2);
  const double a = pts[0][0], b = pts[1][0];
  CHECK(std::min(a, b) < theta[0]);
  CHECK(std::max(a, b) > theta[0]);
  CHECK(posterior_gradient_covariance(k, pts, 0.0, theta).trace() <= 1e-6);
}

TEST_CASE("greedy dominance: a batch beats copies of the single best point") {
  RngStream rng(34, 0, 0, StreamPurpose::kAcquisition);
  const Kernel k = Kernel::rbf(2);
  const Vector theta = Vector::Zero(2);
  AcquisitionConfig cfg;
  RngStream rng1(34, 0, 1, StreamPurpose::kAcquisition);
  const auto single = minimize_batch(k, {}, theta, 1, cfg, 0.0, rng1);
  RngStream rng2(34, 0, 1, StreamPurpose::kAcquisition);
  const auto batch = minimize_batch(k, {}, theta, 3, cfg, 0.0, rng2);
  std::vector<Vector> copies(3, single[0]);  // deduplicates to one point
  CHECK(acquisition_value(k, {}, batch, theta, 0.0) <=
        acquisition_value(k, {}, copies, theta, 0.0) + 1e-10);
}

TEST_CASE("noisy batch within x1.5 of the forward-difference bound") {
  const int d = 2;
  const double sigma2 = 0.5;
  const Kernel k = Kernel::rbf(d);
  const Vector theta = Vector::Zero(d);
  AcquisitionConfig cfg;
  cfg.epsilon = 1e-9;
  RngStream rng(35, 0, 0, StreamPurpose::kAcquisition);
  const auto pts = minimize_batch(k, {}, theta, 2 * d, cfg, sigma2, rng);
  const double achieved = posterior_gradient_covariance(k, pts, sigma2, theta).trace();
  const double h = std::pow(sigma2, 0.25);
  const double per_axis =
      1.0 - 2.0 * h * h * std::exp(-h * h) / (1.0 - std::exp(-2.0 * h * h) + sigma2);
  CHECK(achieved <= 1.5 * d * per_axis);
}

TEST_CASE("select_minimal_batch contracts") {
  const Kernel k = Kernel::rbf(2);
  const Vector theta = Vector::Zero(2);

  SUBCASE("already satisfied design yields an empty proposal") {
    AcquisitionConfig cfg;
    cfg.epsilon = 2.5;  // prior trace is 2 < epsilon
    RngStream rng(36, 0, 0, StreamPurpose::kAcquisition);
    const BatchProposal prop = select_minimal_batch(k, {}, theta, cfg, 0.0, rng);
    CHECK(prop.batch_size_used == 0);
    CHECK(prop.points.empty());
    CHECK_FALSE(prop.hit_cap);
  }

  SUBCASE("d+1 points suffice in the noiseless case") {
    AcquisitionConfig cfg;
    cfg.epsilon = 1e-6;
    RngStream rng(37, 0, 0, StreamPurpose::kAcquisition);
    const BatchProposal prop = select_minimal_batch(k, {}, theta, cfg, 0.0, rng);
    CHECK(prop.batch_size_used <= 3);
    CHECK(prop.achieved_trace <= 1e-6);
  }

  SUBCASE("tiny epsilon with a small cap reports hit_cap") {
    AcquisitionConfig cfg;
    cfg.epsilon = 1e-9;
    cfg.b_max = 2;
    RngStream rng(38, 0, 0, StreamPurpose::kAcquisition);
    const BatchProposal prop = select_minimal_batch(k, {}, theta, cfg, 1.0, rng);
    CHECK(prop.hit_cap);
    CHECK(prop.batch_size_used <= 2);
    CHECK(prop.achieved_trace > cfg.epsilon);
  }
}

TEST_CASE("carried-over designs need no larger batches at nearby iterates") {
  const Kernel k = Kernel::rbf(2);
  AcquisitionConfig cfg;
  cfg.epsilon = 0.05;
  RngStream seeds(39, 0, 0, StreamPurpose::kTest);
  for (int inst = 0; inst < 20; ++inst) {
    const Vector theta = seeds.normal_vector(2);
    RngStream rng_a(40, 0, static_cast<std::uint64_t>(inst), StreamPurpose::kAcquisition);
    const BatchProposal from_empty = select_minimal_batch(k, {}, theta, cfg, 0.01, rng_a);

    // Nearby iterate with the previous design carried over.
    Vector theta2 = theta;
    theta2[0] += 0.2;
    RngStream rng_b(41, 0, static_cast<std::uint64_t>(inst), StreamPurpose::kAcquisition);
    const BatchProposal carried =
        select_minimal_batch(k, from_empty.points, theta2, cfg, 0.01, rng_b);
    RngStream rng_c(41, 0, static_cast<std::uint64_t>(inst), StreamPurpose::kAcquisition);
    const BatchProposal fresh = select_minimal_batch(k, {}, theta2, cfg, 0.01, rng_c);
    CHECK(carried.batch_size_used <= fresh.batch_size_used);
  }
}

TEST_CASE("minimize_batch is deterministic given the rng seed") {
  const Kernel k = Kernel::rbf(3);
  const Vector theta = Vector::Ones(3);
  AcquisitionConfig cfg;
  RngStream rng1(42, 0, 5, StreamPurpose::kAcquisition);
  RngStream rng2(42, 0, 5, StreamPurpose::kAcquisition);
  const auto a = minimize_batch(k, {}, theta, 4, cfg, 0.1, rng1);
  const auto b = minimize_batch(k, {}, theta, 4, cfg, 0.1, rng2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0.0);
}

TEST_CASE("noisy design scaling in m stays bounded") {
  const int d = 2;
  const double sigma = 1.0;
  const Kernel k = Kernel::rbf(d);
  const Vector theta = Vector::Zero(d);
  double prev = std::numeric_limits<double>::infinity();
  for (const int m : {1, 4, 16, 64}) {
    const double h = std::pow(sigma * sigma / m, 0.25);
    std::vector<Vector> design;
    for (int rep = 0; rep < m; ++rep) {
      for (int j = 0; j < d; ++j) {
        for (const double sgn : {1.0, -1.0}) {
          Vector z = Vector::Zero(d);
          z[j] = sgn * h * (1.0 + 1e-3 * rep);
          design.push_back(std::move(z));
        }
      }
    }
    const double trace = posterior_gradient_covariance(k, design, sigma * sigma, theta).trace();
    CHECK(trace < prev);
    CHECK(trace * std::sqrt(static_cast<double>(m)) / (sigma * d) <= 1.5);
    prev = trace;
  }
}
