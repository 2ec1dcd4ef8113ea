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

#include "dpgibo/kernels.hpp"
#include "dpgibo/rng.hpp"

using namespace dpgibo;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Central-difference oracles for the derivative checks.
double fd_grad(const Kernel& k, const Vector& u, const Vector& v, int j, double h = 1e-5) {
  Vector up = u, um = u;
  up[j] += h;
  um[j] -= h;
  return (kernel_eval(k, up, v) - kernel_eval(k, um, v)) / (2.0 * h);
}

double fd_cross_hessian(const Kernel& k, const Vector& u, const Vector& v, int i, int j,
                        double h = 1e-5) {
  Vector up = u, um = u;
  up[i] += h;
  um[i] -= h;
  Vector vp = v, vm = v;
  vp[j] += h;
  vm[j] -= h;
  return (kernel_eval(k, up, vp) - kernel_eval(k, up, vm) - kernel_eval(k, um, vp) +
          kernel_eval(k, um, vm)) /
         (4.0 * h * h);
}

}  // namespace

TEST_CASE("kernel_eval basics") {
  const Kernel k = Kernel::rbf(2);
  CHECK(kernel_eval(k, vec2(0.3, -0.7), vec2(0.3, -0.7)) == doctest::Approx(1.0));
  // exp(-1/2) at unit separation, frozen from the scalar computation
  CHECK(kernel_eval(k, vec2(1, 0), vec2(0, 0)) ==
        doctest::Approx(0.6065306597126334).epsilon(1e-12));

  const Kernel poly = Kernel::polynomial_deg2(2);
  CHECK(kernel_eval(poly, vec2(0, 0), vec2(0, 0)) == doctest::Approx(1.0));

  CHECK_THROWS_AS(kernel_eval(k, Vector::Zero(3), Vector::Zero(2)), std::invalid_argument);
}

TEST_CASE("kernel construction rejects bad parameters") {
  Vector ell(2);
  ell << 1.0, -0.5;
  CHECK_THROWS_AS(Kernel(KernelFamily::kRbf, ell), std::invalid_argument);
  CHECK_THROWS_AS(Kernel::rbf(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Kernel(KernelFamily::kRbf, Vector::Ones(2), -1.0), std::invalid_argument);
}

TEST_CASE("kernel_grad_first examples") {
  const Kernel k = Kernel::rbf(2);
  CHECK(kernel_grad_first(k, vec2(0.5, 0.5), vec2(0.5, 0.5)).norm() == doctest::Approx(0.0));

  // u - v = (1, 0) gives (-exp(-1/2), 0)
  const Vector g = kernel_grad_first(k, vec2(1, 0), vec2(0, 0));
  CHECK(g[0] == doctest::Approx(-std::exp(-0.5)).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(g[0] == doctest::Approx(fd_grad(k, vec2(1, 0), vec2(0, 0), 0)).epsilon(1e-5));

  const Kernel m52 = Kernel::matern52(2);
  const Vector gm = kernel_grad_first(m52, vec2(0.3, 0), vec2(0, 0));
  CHECK(gm[0] == doctest::Approx(fd_grad(m52, vec2(0.3, 0), vec2(0, 0), 0)).epsilon(1e-5));
  CHECK(gm[1] == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("kernel_cross_hessian examples") {
  const Kernel k = Kernel::rbf(2);
  const Matrix h = kernel_cross_hessian(k, vec2(0.4, -0.2), vec2(0.4, -0.2));
  CHECK((h - Matrix::Identity(2, 2)).norm() == doctest::Approx(0.0).epsilon(1e-12));

  // Polynomial kernel at the origin against the finite-difference oracle.
  const Kernel poly = Kernel::polynomial_deg2(2);
  const Matrix hp = kernel_cross_hessian(poly, vec2(0, 0), vec2(0, 0));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(hp(i, j) ==
            doctest::Approx(fd_cross_hessian(poly, vec2(0, 0), vec2(0, 0), i, j)).epsilon(1e-4));
    }
  }

  // Stationarity: the cross-Hessian is shift invariant.
  const Vector shift = vec2(0.7, -1.3);
  const Matrix h1 = kernel_cross_hessian(k, vec2(0.2, 0.9), vec2(-0.4, 0.1));
  const Matrix h2 = kernel_cross_hessian(k, vec2(0.2, 0.9) + shift, vec2(-0.4, 0.1) + shift);
  CHECK((h1 - h2).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kernel symmetry properties") {
  RngStream rng(7, 0, 0, StreamPurpose::kTest);
  for (const KernelFamily family :
       {KernelFamily::kRbf, KernelFamily::kMatern52, KernelFamily::kMatern72}) {
    const Kernel k(family, Vector::Constant(3, 0.8), 1.3);
    for (int rep = 0; rep < 25; ++rep) {
      const Vector u = rng.normal_vector(3);
      const Vector v = rng.normal_vector(3);
      CHECK(kernel_eval(k, u, v) == doctest::Approx(kernel_eval(k, v, u)).epsilon(1e-15));
      CHECK((kernel_grad_first(k, u, v) + kernel_grad_first(k, v, u)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("kernel derivatives match finite differences on random points") {
  RngStream rng(8, 0, 0, StreamPurpose::kTest);
  for (const KernelFamily family :
       {KernelFamily::kRbf, KernelFamily::kMatern52, KernelFamily::kMatern72,
        KernelFamily::kPolynomialDeg2}) {
    for (int rep = 0; rep < 100; ++rep) {
      const int d = 1 + static_cast<int>(rng.next_u64() % 3);
      Vector ell(d);
      for (int j = 0; j < d; ++j) ell[j] = std::pow(10.0, rng.uniform(-0.3, 0.3));
      const Kernel k(family, ell);
      const Vector u = rng.normal_vector(d);
      const Vector v = rng.normal_vector(d);
      const Vector g = kernel_grad_first(k, u, v);
      const Matrix h = kernel_cross_hessian(k, u, v);
      for (int j = 0; j < d; ++j) {
        CHECK(std::abs(g[j] - fd_grad(k, u, v, j)) <= 1e-4 * (1.0 + std::abs(g[j])));
        for (int i = 0; i < d; ++i) {
          CHECK(std::abs(h(i, j) - fd_cross_hessian(k, u, v, i, j)) <=
                1e-4 * (1.0 + std::abs(h(i, j))));
        }
      }
    }
  }
}

TEST_CASE("prior gradient covariance is PSD") {
  RngStream rng(9, 0, 0, StreamPurpose::kTest);
  for (const KernelFamily family :
       {KernelFamily::kRbf, KernelFamily::kMatern52, KernelFamily::kMatern72,
        KernelFamily::kPolynomialDeg2}) {
    const Kernel k(family, Vector::Constant(4, 1.2));
    for (int rep = 0; rep < 10; ++rep) {
      const Vector u = rng.normal_vector(4);
      const Matrix h = kernel_cross_hessian(k, u, u);
      const Eigen::SelfAdjointEigenSolver<Matrix> es(h);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }
}

TEST_CASE("gram_factorize basics") {
  const Kernel k = Kernel::rbf(1);
  SUBCASE("single point") {
    const GramFactorization f = gram_factorize(k, {Vector::Zero(1)}, 0.0);
    CHECK(f.points.size() == 1);
    CHECK(f.matrix(0, 0) == doctest::Approx(1.0 + f.jitter));
    CHECK(f.jitter > 0.0);
  }
  SUBCASE("duplicate points are merged") {
    const GramFactorization f = gram_factorize(k, {Vector::Zero(1), Vector::Zero(1)}, 0.0);
    CHECK(f.points.size() == 1);
  }
  SUBCASE("factor reproduces the matrix") {
    RngStream rng(10, 0, 0, StreamPurpose::kTest);
    const Kernel k3 = Kernel::matern52(3);
    std::vector<Vector> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(rng.normal_vector(3));
    const GramFactorization f = gram_factorize(k3, pts, 0.02);
    const Matrix recon = f.factor * f.factor.transpose();
    CHECK((recon - f.matrix).norm() <= 1e-8 * f.matrix.norm());
    CHECK((f.matrix - f.matrix.transpose()).norm() <= 1e-12);
  }
}

TEST_CASE("gram solve matches an independent dense solver") {
  RngStream rng(11, 0, 0, StreamPurpose::kTest);
  const Kernel k = Kernel::rbf(3);
  std::vector<Vector> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(rng.normal_vector(3));
  const GramFactorization f = gram_factorize(k, pts, 0.01);
  const Vector rhs = rng.normal_vector(5);
  const Vector x = f.solve(rhs);
  const Vector x_ref = f.matrix.fullPivLu().solve(rhs);
  CHECK((x - x_ref).norm() <= 1e-8 * x_ref.norm());
}

TEST_CASE("batch kernel evaluations match the scalar paths") {
  RngStream rng(13, 0, 0, StreamPurpose::kTest);
  for (const KernelFamily family :
       {KernelFamily::kRbf, KernelFamily::kMatern52, KernelFamily::kMatern72,
        KernelFamily::kPolynomialDeg2}) {
    const int d = 3;
    Vector ell(d);
    for (int j = 0; j < d; ++j) ell[j] = std::pow(10.0, rng.uniform(-0.3, 0.3));
    const Kernel k(family, ell, 1.4);
    std::vector<Vector> a, b;
    for (int i = 0; i < 7; ++i) a.push_back(rng.normal_vector(d));
    for (int i = 0; i < 5; ++i) b.push_back(rng.normal_vector(d));
    const Vector z = rng.normal_vector(d);
    const Vector theta = rng.normal_vector(d);

    const Matrix m = kernel_matrix(k, a, b);
    const Matrix sym = kernel_matrix(k, a);
    const Vector kv = kernel_vector(k, a, z);
    const Matrix gc = kernel_grad_cross(k, theta, a);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      CHECK(kv[ii] == doctest::Approx(kernel_eval(k, a[i], z)).epsilon(1e-14));
      CHECK((gc.col(ii) - kernel_grad_first(k, theta, a[i])).norm() <= 1e-13);
      for (std::size_t j = 0; j < b.size(); ++j) {
        CHECK(m(ii, static_cast<Eigen::Index>(j)) ==
              doctest::Approx(kernel_eval(k, a[i], b[j])).epsilon(1e-14));
      }
      for (std::size_t j = 0; j < a.size(); ++j) {
        CHECK(sym(ii, static_cast<Eigen::Index>(j)) ==
              doctest::Approx(kernel_eval(k, a[i], a[j])).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("gram matrices stay factorizable for clustered points") {
  RngStream rng(12, 0, 0, StreamPurpose::kTest);
  const Kernel k = Kernel::rbf(2);
  std::vector<Vector> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(0.05 * rng.normal_vector(2));
  const GramFactorization f = gram_factorize(k, pts, 0.0);
  // All Cholesky pivots positive.
  CHECK(f.factor.diagonal().minCoeff() > 0.0);
}
