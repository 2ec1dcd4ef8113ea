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

#include "dpgibo/kernels.hpp"

#include <cmath>

namespace dpgibo {

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::kRbf:
      return "rbf";
    case KernelFamily::kMatern52:
      return "matern52";
    case KernelFamily::kMatern72:
      return "matern72";
    case KernelFamily::kPolynomialDeg2:
      return "poly2";
  }
  return "unknown";
}

Kernel::Kernel(KernelFamily family, Vector lengthscales, double output_scale)
    : family_(family), lengthscales_(std::move(lengthscales)), output_scale_(output_scale) {
  if (lengthscales_.size() == 0) {
    throw std::invalid_argument("Kernel: lengthscale vector must be nonempty");
  }
  if (!(lengthscales_.array() > 0.0).all() || !lengthscales_.allFinite()) {
    throw std::invalid_argument("Kernel: lengthscales must be strictly positive");
  }
  if (!(output_scale_ > 0.0) || !std::isfinite(output_scale_)) {
    throw std::invalid_argument("Kernel: output scale must be strictly positive");
  }
}

Kernel Kernel::rbf(int dim, double lengthscale, double output_scale) {
  return Kernel(KernelFamily::kRbf, Vector::Constant(dim, lengthscale), output_scale);
}

Kernel Kernel::matern52(int dim, double lengthscale, double output_scale) {
  return Kernel(KernelFamily::kMatern52, Vector::Constant(dim, lengthscale), output_scale);
}

Kernel Kernel::matern72(int dim, double lengthscale, double output_scale) {
  return Kernel(KernelFamily::kMatern72, Vector::Constant(dim, lengthscale), output_scale);
}

Kernel Kernel::polynomial_deg2(int dim, double lengthscale, double output_scale) {
  return Kernel(KernelFamily::kPolynomialDeg2, Vector::Constant(dim, lengthscale),
                output_scale);
}

namespace detail {

ProfileDerivs stationary_profile(KernelFamily family, double t) {
  const double r = std::sqrt(t);
  switch (family) {
    case KernelFamily::kRbf: {
      const double g = std::exp(-0.5 * t);
      return {g, -0.5 * g, 0.25 * g};
    }
    case KernelFamily::kMatern52: {
      const double s5 = std::sqrt(5.0);
      const double e = std::exp(-s5 * r);
      return {(1.0 + s5 * r + (5.0 / 3.0) * t) * e, -(5.0 / 6.0) * (1.0 + s5 * r) * e,
              (25.0 / 12.0) * e};
    }
    case KernelFamily::kMatern72: {
      const double s7 = std::sqrt(7.0);
      const double e = std::exp(-s7 * r);
      return {(1.0 + s7 * r + (14.0 / 5.0) * t + (7.0 * s7 / 15.0) * t * r) * e,
              -(7.0 / 30.0) * (3.0 + 3.0 * s7 * r + 7.0 * t) * e,
              (49.0 / 60.0) * (1.0 + s7 * r) * e};
    }
    case KernelFamily::kPolynomialDeg2:
      break;
  }
  throw std::logic_error("stationary_profile: kernel family is not stationary");
}

void check_dims(const Kernel& k, const ConstVectorRef& u, const ConstVectorRef& v) {
  if (u.size() != k.dimension() || v.size() != k.dimension()) {
    throw std::invalid_argument("kernel: point dimension does not match kernel dimension");
  }
  if (!u.allFinite() || !v.allFinite()) {
    throw std::invalid_argument("kernel: points must be finite");
  }
}

}  // namespace detail

double kernel_eval(const Kernel& k, const ConstVectorRef& u, const ConstVectorRef& v) {
  detail::check_dims(k, u, v);
  const Vector& ell = k.lengthscales();
  if (k.family() == KernelFamily::kPolynomialDeg2) {
    const double w = (u.array() * v.array() / ell.array().square()).sum();
    return k.output_scale() * (w + 1.0) * (w + 1.0);
  }
  const double t = ((u - v).array() / ell.array()).square().sum();
  return k.output_scale() * detail::stationary_profile(k.family(), t).g;
}

Vector kernel_grad_first(const Kernel& k, const ConstVectorRef& u, const ConstVectorRef& v) {
  detail::check_dims(k, u, v);
  const Vector& ell = k.lengthscales();
  if (k.family() == KernelFamily::kPolynomialDeg2) {
    const double w = (u.array() * v.array() / ell.array().square()).sum();
    return 2.0 * k.output_scale() * (w + 1.0) * (v.array() / ell.array().square()).matrix();
  }
  const Eigen::ArrayXd z = (u - v).array() / ell.array();
  const double t = z.square().sum();
  const auto p = detail::stationary_profile(k.family(), t);
  return (2.0 * k.output_scale() * p.g1 * z / ell.array()).matrix();
}

Matrix kernel_cross_hessian(const Kernel& k, const ConstVectorRef& u, const ConstVectorRef& v) {
  detail::check_dims(k, u, v);
  const Vector& ell = k.lengthscales();
  if (k.family() == KernelFamily::kPolynomialDeg2) {
    const Eigen::ArrayXd us = u.array() / ell.array().square();
    const Eigen::ArrayXd vs = v.array() / ell.array().square();
    const double w = (u.array() * v.array() / ell.array().square()).sum();
    Matrix h = 2.0 * k.output_scale() * (vs.matrix() * us.matrix().transpose());
    h.diagonal().array() +=
        2.0 * k.output_scale() * (w + 1.0) / ell.array().square();
    return h;
  }
  const Eigen::ArrayXd z = (u - v).array() / ell.array();
  const double t = z.square().sum();
  const auto p = detail::stationary_profile(k.family(), t);
  const Eigen::ArrayXd zl = z / ell.array();
  Matrix h = -4.0 * k.output_scale() * p.g2 * (zl.matrix() * zl.matrix().transpose());
  h.diagonal().array() -= 2.0 * k.output_scale() * p.g1 / ell.array().square();
  return h;
}

namespace {

// Points stacked as rows and pre-divided by the lengthscales. All batch
// kernel evaluations run on this layout; distances are computed
// difference-first so clustered designs keep full precision.
Matrix scaled_rows(const Kernel& k, const std::vector<Vector>& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  const int d = k.dimension();
  Matrix m(n, d);
  const Eigen::ArrayXd inv_ell = k.lengthscales().array().inverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pts[static_cast<std::size_t>(i)].size() != d) {
      throw std::invalid_argument("kernel: point dimension does not match kernel dimension");
    }
    m.row(i) = (pts[static_cast<std::size_t>(i)].array() * inv_ell).transpose();
  }
  return m;
}

Eigen::ArrayXd profile_g_array(KernelFamily family, const Eigen::ArrayXd& t) {
  switch (family) {
    case KernelFamily::kRbf:
      return (-0.5 * t).exp();
    case KernelFamily::kMatern52: {
      const double s5 = std::sqrt(5.0);
      const Eigen::ArrayXd r = t.sqrt();
      return (1.0 + s5 * r + (5.0 / 3.0) * t) * (-s5 * r).exp();
    }
    case KernelFamily::kMatern72: {
      const double s7 = std::sqrt(7.0);
      const Eigen::ArrayXd r = t.sqrt();
      return (1.0 + s7 * r + (14.0 / 5.0) * t + (7.0 * s7 / 15.0) * t * r) * (-s7 * r).exp();
    }
    case KernelFamily::kPolynomialDeg2:
      break;
  }
  throw std::logic_error("profile_g_array: kernel family is not stationary");
}

Eigen::ArrayXd profile_g1_array(KernelFamily family, const Eigen::ArrayXd& t) {
  switch (family) {
    case KernelFamily::kRbf:
      return -0.5 * (-0.5 * t).exp();
    case KernelFamily::kMatern52: {
      const double s5 = std::sqrt(5.0);
      const Eigen::ArrayXd r = t.sqrt();
      return -(5.0 / 6.0) * (1.0 + s5 * r) * (-s5 * r).exp();
    }
    case KernelFamily::kMatern72: {
      const double s7 = std::sqrt(7.0);
      const Eigen::ArrayXd r = t.sqrt();
      return -(7.0 / 30.0) * (3.0 + 3.0 * s7 * r + 7.0 * t) * (-s7 * r).exp();
    }
    case KernelFamily::kPolynomialDeg2:
      break;
  }
  throw std::logic_error("profile_g1_array: kernel family is not stationary");
}

}  // namespace

Matrix kernel_matrix(const Kernel& k, const std::vector<Vector>& a,
                     const std::vector<Vector>& b) {
  const auto na = static_cast<Eigen::Index>(a.size());
  const auto nb = static_cast<Eigen::Index>(b.size());
  const Matrix sa = scaled_rows(k, a);
  const Matrix sb = scaled_rows(k, b);
  Matrix m(na, nb);
  if (k.family() == KernelFamily::kPolynomialDeg2) {
    // w = sum u v / ell^2 on the already once-scaled rows.
    m = sa * sb.transpose();
    m = (k.output_scale() * (m.array() + 1.0).square()).matrix();
    return m;
  }
  for (Eigen::Index i = 0; i < na; ++i) {
    const Eigen::ArrayXd t = (sb.rowwise() - sa.row(i)).rowwise().squaredNorm();
    m.row(i) = (k.output_scale() * profile_g_array(k.family(), t)).matrix().transpose();
  }
  return m;
}

Matrix kernel_matrix(const Kernel& k, const std::vector<Vector>& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  if (k.family() == KernelFamily::kPolynomialDeg2) {
    return kernel_matrix(k, pts, pts);
  }
  const Matrix s = scaled_rows(k, pts);
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, i) = k.output_scale();
    if (i == 0) continue;
    const Eigen::ArrayXd t = (s.topRows(i).rowwise() - s.row(i)).rowwise().squaredNorm();
    const Vector row = (k.output_scale() * profile_g_array(k.family(), t)).matrix();
    m.row(i).head(i) = row.transpose();
    m.col(i).head(i) = row;
  }
  return m;
}

Vector kernel_vector(const Kernel& k, const std::vector<Vector>& pts, const ConstVectorRef& z) {
  const Matrix s = scaled_rows(k, pts);
  const Vector zs = (z.array() / k.lengthscales().array()).matrix();
  if (k.family() == KernelFamily::kPolynomialDeg2) {
    const Eigen::ArrayXd w = s * zs;
    return (k.output_scale() * (w + 1.0).square()).matrix();
  }
  const Eigen::ArrayXd t = (s.rowwise() - zs.transpose()).rowwise().squaredNorm();
  return (k.output_scale() * profile_g_array(k.family(), t)).matrix();
}

Matrix kernel_grad_cross(const Kernel& k, const ConstVectorRef& theta,
                         const std::vector<Vector>& pts) {
  const Matrix s = scaled_rows(k, pts);
  const Eigen::ArrayXd inv_ell = k.lengthscales().array().inverse();
  if (k.family() == KernelFamily::kPolynomialDeg2) {
    const Eigen::ArrayXd w = s * (theta.array() * inv_ell).matrix();
    const Eigen::ArrayXd coeff = 2.0 * k.output_scale() * (w + 1.0);
    // column i = coeff_i * p_i / ell^2
    Matrix g = (s.array().colwise() * coeff).matrix().transpose();
    g.array().colwise() *= inv_ell;
    return g;
  }
  // rows of diff are (theta - p_i)/ell
  Matrix diff = (-s).rowwise() + (theta.array() * inv_ell).matrix().transpose();
  const Eigen::ArrayXd t = diff.rowwise().squaredNorm();
  const Eigen::ArrayXd coeff = 2.0 * k.output_scale() * profile_g1_array(k.family(), t);
  Matrix g = (diff.array().colwise() * coeff).matrix().transpose();
  g.array().colwise() *= inv_ell;
  return g;
}

std::vector<Vector> dedup_points(const std::vector<Vector>& pts, double tol) {
  std::vector<Vector> out;
  out.reserve(pts.size());
  for (const auto& p : pts) {
    bool dup = false;
    for (const auto& q : out) {
      if ((p - q).norm() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p);
  }
  return out;
}

GramFactorization gram_factorize(const Kernel& k, const std::vector<Vector>& points,
                                 double sigma2) {
  if (sigma2 < 0.0 || !std::isfinite(sigma2)) {
    throw std::invalid_argument("gram_factorize: noise variance must be >= 0");
  }
  GramFactorization f;
  f.points = dedup_points(points, detail::kDedupTol);
  f.noise_variance = sigma2;
  const auto n = static_cast<Eigen::Index>(f.points.size());
  if (n == 0) {
    f.matrix.resize(0, 0);
    f.factor.resize(0, 0);
    f.jitter = 0.0;
    return f;
  }
  const Matrix kmat = kernel_matrix(k, f.points);
  const double mean_diag = kmat.diagonal().mean() + sigma2;
  for (double rel = detail::kJitterRelStart; rel <= detail::kJitterRelMax * 1.0001;
       rel *= 10.0) {
    const double jitter = rel * mean_diag;
    Matrix m = kmat;
    m.diagonal().array() += sigma2 + jitter;
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
      f.matrix = std::move(m);
      f.jitter = jitter;
      f.factor = llt.matrixL();
      return f;
    }
  }
  throw IllConditionedGramError(
      "gram_factorize: Cholesky failed at maximum jitter " +
          std::to_string(detail::kJitterRelMax * mean_diag) + " (|D|=" +
          std::to_string(f.points.size()) + ", min diag=" +
          std::to_string(kmat.diagonal().minCoeff()) + ")",
      detail::kJitterRelMax * mean_diag, kmat.diagonal().minCoeff(), mean_diag);
}

}  // namespace dpgibo
