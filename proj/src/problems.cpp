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

#include "dpgibo/problems.hpp"

#include <cmath>
#include <memory>
#include <mutex>

#include "dpgibo/rng.hpp"

namespace dpgibo {

namespace {

Vector eval_noise(std::uint64_t seed, std::uint64_t key, int n, double sigma) {
  Vector v = Vector::Zero(n);
  if (sigma <= 0.0) return v;
  RngStream stream(seed, key, 0, StreamPurpose::kEvalNoise);
  for (int i = 0; i < n; ++i) v[i] = sigma * stream.normal();
  return v;
}

}  // namespace

SyntheticGPDraw::SyntheticGPDraw(Kernel kernel, std::vector<Vector> centers, Vector weights)
    : kernel_(std::move(kernel)), centers_(std::move(centers)), weights_(std::move(weights)) {
  if (centers_.empty() || weights_.size() != static_cast<Eigen::Index>(centers_.size())) {
    throw std::invalid_argument("SyntheticGPDraw: need one weight per center");
  }
  const Matrix k_cc = kernel_matrix(kernel_, centers_);
  rkhs_norm_sq_ = weights_.dot(k_cc * weights_);
}

double SyntheticGPDraw::value(const ConstVectorRef& theta) const {
  double v = 0.0;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    v += weights_[static_cast<Eigen::Index>(j)] * kernel_eval(kernel_, theta, centers_[j]);
  }
  return v;
}

Vector SyntheticGPDraw::gradient(const ConstVectorRef& theta) const {
  Vector g = Vector::Zero(theta.size());
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    g += weights_[static_cast<Eigen::Index>(j)] * kernel_grad_first(kernel_, theta, centers_[j]);
  }
  return g;
}

Problem normal_location_problem(int user_count, int dim, const Vector& theta_star,
                                std::uint64_t seed) {
  if (user_count < 1) throw std::invalid_argument("normal_location_problem: n must be >= 1");
  if (theta_star.size() != dim) {
    throw std::invalid_argument("normal_location_problem: theta_star dimension mismatch");
  }
  RngStream data_rng(seed, 0, 0, StreamPurpose::kProblemData);
  auto xs = std::make_shared<Matrix>(user_count, dim);
  for (int i = 0; i < user_count; ++i) {
    xs->row(i) = (theta_star + data_rng.normal_vector(dim)).transpose();
  }
  const Vector x_bar = xs->colwise().mean().transpose();

  Problem p;
  p.name = "normal_location";
  p.dimension = dim;
  p.user_count = user_count;
  p.seed = seed;
  p.eval_noise_sigma = 0.0;
  p.domain_lo = theta_star.cwiseMin(Vector::Zero(dim)).array() - 2.0;
  p.domain_hi = theta_star.cwiseMax(Vector::Zero(dim)).array() + 2.0;

  p.evaluate_users = [xs, user_count](const Vector& theta, std::uint64_t) {
    Vector v(user_count);
    for (int i = 0; i < user_count; ++i) {
      v[i] = 0.5 * (xs->row(i).transpose() - theta).squaredNorm();
    }
    return v;
  };
  p.per_user_eval = [xs](const Vector& theta, int i, std::uint64_t) {
    return 0.5 * (xs->row(i).transpose() - theta).squaredNorm();
  };
  p.true_loss = [xs, user_count](const Vector& theta) {
    double s = 0.0;
    for (int i = 0; i < user_count; ++i) {
      s += 0.5 * (xs->row(i).transpose() - theta).squaredNorm();
    }
    return s / user_count;
  };
  p.true_gradient = [x_bar](const Vector& theta) { return (theta - x_bar).eval(); };
  p.per_user_gradients = [xs, user_count, dim](const Vector& theta) {
    Matrix g(user_count, dim);
    for (int i = 0; i < user_count; ++i) {
      g.row(i) = (theta - xs->row(i).transpose()).transpose();
    }
    return g;
  };
  return p;
}

Problem huber_regression_problem(int user_count, int dim, const Vector& theta_star,
                                 double huber_c, std::uint64_t seed) {
  if (user_count < 1) throw std::invalid_argument("huber_regression_problem: n must be >= 1");
  if (theta_star.size() != dim) {
    throw std::invalid_argument("huber_regression_problem: theta_star dimension mismatch");
  }
  if (!(huber_c > 0.0)) throw std::invalid_argument("huber_regression_problem: c must be > 0");
  RngStream data_rng(seed, 0, 0, StreamPurpose::kProblemData);
  auto xs = std::make_shared<Matrix>(user_count, dim);
  auto ys = std::make_shared<Vector>(user_count);
  auto ws = std::make_shared<Vector>(user_count);
  for (int i = 0; i < user_count; ++i) {
    xs->row(i) = data_rng.normal_vector(dim).transpose();
    (*ys)[i] = xs->row(i).dot(theta_star) + data_rng.normal();
    (*ws)[i] = std::min(1.0, 2.0 / xs->row(i).squaredNorm());
  }

  const auto rho = [huber_c](double r) {
    return std::abs(r) <= huber_c ? 0.5 * r * r : huber_c * (std::abs(r) - 0.5 * huber_c);
  };
  const auto psi = [huber_c](double r) { return std::clamp(r, -huber_c, huber_c); };

  Problem p;
  p.name = "huber_regression";
  p.dimension = dim;
  p.user_count = user_count;
  p.seed = seed;
  p.eval_noise_sigma = 0.0;
  p.gradient_bound = huber_c * std::sqrt(2.0);
  p.domain_lo = theta_star.cwiseMin(Vector::Zero(dim)).array() - 1.5;
  p.domain_hi = theta_star.cwiseMax(Vector::Zero(dim)).array() + 1.5;

  const auto loss_i = [xs, ys, ws, rho](const Vector& theta, int i) {
    return rho((*ys)[i] - xs->row(i).dot(theta)) * (*ws)[i];
  };
  p.evaluate_users = [loss_i, user_count](const Vector& theta, std::uint64_t) {
    Vector v(user_count);
    for (int i = 0; i < user_count; ++i) v[i] = loss_i(theta, i);
    return v;
  };
  p.per_user_eval = [loss_i](const Vector& theta, int i, std::uint64_t) {
    return loss_i(theta, i);
  };
  p.true_loss = [loss_i, user_count](const Vector& theta) {
    double s = 0.0;
    for (int i = 0; i < user_count; ++i) s += loss_i(theta, i);
    return s / user_count;
  };
  p.per_user_gradients = [xs, ys, ws, psi, user_count, dim](const Vector& theta) {
    Matrix g(user_count, dim);
    for (int i = 0; i < user_count; ++i) {
      const double r = (*ys)[i] - xs->row(i).dot(theta);
      g.row(i) = -psi(r) * (*ws)[i] * xs->row(i);
    }
    return g;
  };
  p.true_gradient = [p_user = p.per_user_gradients](const Vector& theta) {
    return Vector(p_user(theta).colwise().mean().transpose());
  };
  return p;
}

namespace {

// GP regression state for the lengthscale-tuning objective. One fit per
// distinct theta; the optimizer evaluates all users at a point, so a
// single-entry cache removes nearly all duplicate factorizations.
struct GpTuneState {
  std::vector<Vector> x_train;
  std::vector<Vector> x_val;
  Vector y_train;
  Vector y_val;
  double fit_noise_var = 0.01;

  mutable std::mutex mutex;
  mutable Vector cached_theta;
  mutable Vector cached_pred;

  Vector predictions(const Vector& theta) const {
    std::lock_guard<std::mutex> lock(mutex);
    if (cached_theta.size() == theta.size() && cached_theta == theta) return cached_pred;
    Vector ell = theta.array().min(6.9).max(-6.9).exp();
    const Kernel k(KernelFamily::kRbf, ell);
    Matrix k_tt = kernel_matrix(k, x_train);
    k_tt.diagonal().array() += fit_noise_var;
    const Eigen::LLT<Matrix> llt(k_tt);
    const Vector alpha = llt.solve(y_train);
    const Matrix k_vt = kernel_matrix(k, x_val, x_train);
    cached_theta = theta;
    cached_pred = k_vt * alpha;
    return cached_pred;
  }
};

}  // namespace

Problem gp_lengthscale_tuning_problem(int dim, int n_total, double eval_noise_sigma,
                                      std::uint64_t seed) {
  if (dim < 1 || n_total < 4) {
    throw std::invalid_argument("gp_lengthscale_tuning_problem: need d >= 1, n_total >= 4");
  }
  RngStream data_rng(seed, 0, 0, StreamPurpose::kProblemData);
  auto st = std::make_shared<GpTuneState>();
  const int n_train = n_total / 2;
  const int n_val = n_total - n_train;

  // Inputs close enough for unit lengthscales to correlate neighbours, then
  // an exact GP draw over all points.
  std::vector<Vector> all_x(static_cast<std::size_t>(n_total));
  for (auto& x : all_x) {
    x = Vector::NullaryExpr(dim, [&](Eigen::Index) { return data_rng.uniform(0.0, 1.0); });
  }
  const Kernel gen_kernel = Kernel::rbf(dim, 1.0);
  Matrix k_all = kernel_matrix(gen_kernel, all_x);
  k_all.diagonal().array() += 1e-8;
  const Eigen::LLT<Matrix> llt(k_all);
  const Vector f_all = Matrix(llt.matrixL()) * data_rng.normal_vector(n_total);
  const double gen_noise = 0.1;
  Vector y_all = f_all;
  for (int i = 0; i < n_total; ++i) y_all[i] += gen_noise * data_rng.normal();

  st->x_train.assign(all_x.begin(), all_x.begin() + n_train);
  st->x_val.assign(all_x.begin() + n_train, all_x.end());
  st->y_train = y_all.head(n_train);
  st->y_val = y_all.tail(n_val);

  Problem p;
  p.name = "gp_lengthscale_tuning";
  p.dimension = dim;
  p.user_count = n_val;
  p.seed = seed;
  p.eval_noise_sigma = eval_noise_sigma;
  p.domain_lo = Vector::Constant(dim, -2.0);
  p.domain_hi = Vector::Constant(dim, 2.0);

  p.evaluate_users = [st, n_val, seed, eval_noise_sigma](const Vector& theta,
                                                         std::uint64_t key) {
    const Vector pred = st->predictions(theta);
    Vector v = (pred - st->y_val).array().square();
    v += eval_noise(seed, key, n_val, eval_noise_sigma);
    return v;
  };
  p.per_user_eval = [st, n_val, seed, eval_noise_sigma](const Vector& theta, int i,
                                                        std::uint64_t key) {
    const Vector pred = st->predictions(theta);
    const double clean = (pred[i] - st->y_val[i]) * (pred[i] - st->y_val[i]);
    return clean + eval_noise(seed, key, n_val, eval_noise_sigma)[i];
  };
  p.true_loss = [st](const Vector& theta) {
    const Vector pred = st->predictions(theta);
    return (pred - st->y_val).array().square().mean();
  };
  return p;
}

Problem noisy_wrapper(const Problem& p, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("noisy_wrapper: lambda must be >= 0");
  Problem q = p;
  q.name = p.name + "+lambda_noise";
  q.eval_noise_sigma = lambda;
  const std::uint64_t wrapper_seed = detail::mix(p.seed, 0x6e6f697379ULL);
  const int n = p.user_count;
  q.evaluate_users = [inner = p.evaluate_users, lambda, wrapper_seed, n](
                         const Vector& theta, std::uint64_t key) {
    Vector v = inner(theta, key);
    v += eval_noise(wrapper_seed, key, n, lambda);
    return v;
  };
  q.per_user_eval = [inner = p.per_user_eval, lambda, wrapper_seed, n](
                        const Vector& theta, int i, std::uint64_t key) {
    return inner(theta, i, key) + eval_noise(wrapper_seed, key, n, lambda)[i];
  };
  return q;
}

Problem svm_surrogate_problem(int dim, std::uint64_t seed, int user_count) {
  if (dim < 4) throw std::invalid_argument("svm_surrogate_problem: need d >= 4");
  if (user_count < 1) throw std::invalid_argument("svm_surrogate_problem: n must be >= 1");
  RngStream data_rng(seed, 0, 0, StreamPurpose::kProblemData);

  Vector lo(dim), hi(dim);
  lo[0] = 0.01; hi[0] = 1.0;   // epsilon-like
  lo[1] = 0.1;  hi[1] = 3.0;   // C-like
  lo[2] = 0.01; hi[2] = 5.0;   // gamma-like
  for (int j = 3; j < dim; ++j) {
    lo[j] = -2.0;
    hi[j] = 2.0;
  }
  const Vector scale = hi - lo;

  Vector theta_star(dim);
  for (int j = 0; j < 3; ++j) {
    theta_star[j] = lo[j] + (0.25 + 0.5 * data_rng.uniform()) * scale[j];
  }
  for (int j = 3; j < dim; ++j) theta_star[j] = data_rng.uniform(-1.5, 1.5);

  Vector weights(dim);
  for (int j = 0; j < dim; ++j) {
    weights[j] = (0.5 + data_rng.uniform()) * (j < 3 ? 2.0 : 1.0);
  }

  // Per-user heterogeneity with exactly zero mean, so the mean loss is the
  // planted landscape itself and its gradient vanishes at theta_star.
  const double gamma = 0.3;
  const double kappa = 0.02;
  auto level = std::make_shared<Vector>(user_count);
  auto tilt = std::make_shared<Matrix>(user_count, dim);
  for (int i = 0; i < user_count; ++i) {
    (*level)[i] = data_rng.normal();
    tilt->row(i) = data_rng.normal_vector(dim).transpose();
  }
  *level = (level->array() - level->mean()).matrix();
  *tilt = (tilt->rowwise() - tilt->colwise().mean()).eval();

  const Vector half_scale = 0.4 * scale;
  auto base = [theta_star, half_scale, weights, dim](const Vector& theta) {
    double v = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double x = (theta[j] - theta_star[j]) / half_scale[j];
      v += weights[j] * (std::sqrt(1.0 + x * x) - 1.0);
    }
    return v;
  };
  auto base_grad = [theta_star, half_scale, weights, dim](const Vector& theta) {
    Vector g(dim);
    for (int j = 0; j < dim; ++j) {
      const double x = (theta[j] - theta_star[j]) / half_scale[j];
      g[j] = weights[j] * x / (std::sqrt(1.0 + x * x) * half_scale[j]);
    }
    return g;
  };
  auto tilt_features = [theta_star, scale, dim](const Vector& theta) {
    Vector f(dim);
    for (int j = 0; j < dim; ++j) {
      f[j] = std::tanh(2.0 * (theta[j] - theta_star[j]) / scale[j]);
    }
    return f;
  };

  Problem p;
  p.name = "svm_surrogate";
  p.dimension = dim;
  p.user_count = user_count;
  p.seed = seed;
  p.eval_noise_sigma = 0.0;
  p.domain_lo = lo;
  p.domain_hi = hi;
  p.planted_minimum = theta_star;
  {
    double sq = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double per_coord = weights[j] / half_scale[j] + kappa * 3.0 * 2.0 / scale[j];
      sq += per_coord * per_coord;
    }
    p.gradient_bound = (1.0 + gamma * 3.0) * std::sqrt(sq);
  }

  auto loss_i = [base, tilt_features, level, tilt, gamma, kappa](const Vector& theta, int i) {
    return base(theta) * (1.0 + gamma * (*level)[i]) + kappa * tilt->row(i).dot(tilt_features(theta));
  };
  p.evaluate_users = [loss_i, user_count](const Vector& theta, std::uint64_t) {
    Vector v(user_count);
    for (int i = 0; i < user_count; ++i) v[i] = loss_i(theta, i);
    return v;
  };
  p.per_user_eval = [loss_i](const Vector& theta, int i, std::uint64_t) {
    return loss_i(theta, i);
  };
  p.true_loss = base;
  p.true_gradient = base_grad;
  p.per_user_gradients = [base_grad, theta_star, scale, level, tilt, gamma, kappa, user_count,
                          dim](const Vector& theta) {
    const Vector bg = base_grad(theta);
    Vector dfeat(dim);
    for (int j = 0; j < dim; ++j) {
      const double u = std::tanh(2.0 * (theta[j] - theta_star[j]) / scale[j]);
      dfeat[j] = (1.0 - u * u) * 2.0 / scale[j];
    }
    Matrix g(user_count, dim);
    for (int i = 0; i < user_count; ++i) {
      g.row(i) = ((1.0 + gamma * (*level)[i]) * bg).transpose() +
                 (kappa * tilt->row(i).array() * dfeat.transpose().array()).matrix();
    }
    return g;
  };
  return p;
}

}  // namespace dpgibo
