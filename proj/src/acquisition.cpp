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

#include "dpgibo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace dpgibo {

double acquisition_value(const Kernel& k, const std::vector<Vector>& design,
                         const std::vector<Vector>& batch, const ConstVectorRef& theta,
                         double sigma2) {
  std::vector<Vector> all = design;
  all.insert(all.end(), batch.begin(), batch.end());
  if (all.empty()) return 0.0;
  ConditionedGram gram(k, sigma2, all);
  const Matrix grad_cross = kernel_grad_cross(k, theta, gram.points());
  const Matrix w = gram.half_solve(grad_cross.transpose());
  return -w.squaredNorm();
}

const Kernel& GradientScratch::base_kernel() const { return base_->kernel(); }

double GradientScratch::base_sigma2_jitter() const {
  return base_->sigma2() + base_->jitter();
}

GradientScratch::GradientScratch(const ConditionedGram& base, Vector theta)
    : base_(&base), theta_(std::move(theta)) {
  const Matrix prior = kernel_cross_hessian(base.kernel(), theta_, theta_);
  prior_trace_ = prior.trace();
  prior_diag_ = prior.diagonal();
  const int d = dim();
  if (base.size() > 0) {
    const Matrix grad_cross = kernel_grad_cross(base.kernel(), theta_, base.points());
    w_base_ = base.half_solve(grad_cross.transpose());  // N x d
    explained_base_ = w_base_.squaredNorm();
  } else {
    w_base_.resize(0, d);
    explained_base_ = 0.0;
  }
  ext_cols_.resize(base.size(), 0);
  ext_tri_.resize(0, 0);
  ext_w_.resize(0, d);
}

std::optional<GradientScratch::Extension1> GradientScratch::extend_one(
    const ConstVectorRef& z) const {
  const Kernel& k = base_->kernel();
  // An empty base has no factorization jitter yet; apply the same floor a
  // fresh factorization of the extension would get, or certified traces
  // would disagree with the committed design's.
  const double raw = kernel_eval(k, z, z) + base_->sigma2();
  const double kzz = raw + std::max(base_->jitter(), detail::kJitterRelStart * raw);
  Extension1 e;
  double used = 0.0;
  if (base_->size() > 0) {
    e.u1 = base_->half_solve(kernel_vector(k, base_->points(), z));
    used += e.u1.squaredNorm();
  } else {
    e.u1.resize(0);
  }
  const auto m = static_cast<Eigen::Index>(ext_pts_.size());
  if (m > 0) {
    Vector r(m);
    for (Eigen::Index i = 0; i < m; ++i) r[i] = kernel_eval(k, ext_pts_[static_cast<std::size_t>(i)], z);
    if (e.u1.size() > 0) r.noalias() -= ext_cols_.transpose() * e.u1;
    e.u2 = ext_tri_.triangularView<Eigen::Lower>().solve(r);
    used += e.u2.squaredNorm();
  } else {
    e.u2.resize(0);
  }
  const double s2 = kzz - used;
  // Same pivot rule as ConditionedGram::append: a point the commit path would
  // reject is never proposed.
  if (!(s2 > 1e-14 * kzz)) return std::nullopt;
  e.s = std::sqrt(s2);
  Vector c = kernel_grad_first(k, theta_, z);
  if (e.u1.size() > 0) c.noalias() -= w_base_.transpose() * e.u1;
  if (m > 0) c.noalias() -= ext_w_.transpose() * e.u2;
  e.w = c / e.s;
  return e;
}

double GradientScratch::gain(const ConstVectorRef& z) const {
  const auto e = extend_one(z);
  return e ? e->w.squaredNorm() : 0.0;
}

bool GradientScratch::push(const Vector& z) {
  for (const auto& p : base_->points()) {
    if ((p - z).norm() <= detail::kDedupTol) return false;
  }
  for (const auto& p : ext_pts_) {
    if ((p - z).norm() <= detail::kDedupTol) return false;
  }
  auto e = extend_one(z);
  if (!e) return false;
  const auto m = static_cast<Eigen::Index>(ext_pts_.size());
  ext_pts_.push_back(z);
  ext_cols_.conservativeResize(Eigen::NoChange, m + 1);
  if (e->u1.size() > 0) ext_cols_.col(m) = e->u1;
  ext_tri_.conservativeResize(m + 1, m + 1);
  if (m > 0) ext_tri_.row(m).head(m) = e->u2.transpose();
  ext_tri_.col(m).head(m).setZero();
  ext_tri_(m, m) = e->s;
  ext_w_.conservativeResize(m + 1, Eigen::NoChange);
  ext_w_.row(m) = e->w.transpose();
  explained_ext_ += e->w.squaredNorm();
  return true;
}

void GradientScratch::rollback(int size) {
  const int m = static_cast<int>(ext_pts_.size());
  if (size >= m) return;
  for (int i = size; i < m; ++i) {
    explained_ext_ -= ext_w_.row(i).squaredNorm();
  }
  if (explained_ext_ < 0.0) explained_ext_ = 0.0;
  ext_pts_.resize(static_cast<std::size_t>(size));
  ext_cols_.conservativeResize(Eigen::NoChange, size);
  ext_tri_.conservativeResize(size, size);
  ext_w_.conservativeResize(size, Eigen::NoChange);
}

Vector GradientScratch::axis_residual_variances() const {
  Vector v = prior_diag_;
  for (int j = 0; j < dim(); ++j) {
    if (w_base_.rows() > 0) v[j] -= w_base_.col(j).squaredNorm();
    if (ext_w_.rows() > 0) v[j] -= ext_w_.col(j).squaredNorm();
  }
  return v;
}

namespace detail {

SearchBox make_search_box(const ConstVectorRef& theta, const Vector& ell, double radius,
                          const Vector* domain_lo, const Vector* domain_hi) {
  SearchBox box;
  box.lo = theta - radius * ell;
  box.hi = theta + radius * ell;
  if (domain_lo != nullptr && domain_hi != nullptr) {
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      const double lo = std::max(box.lo[j], (*domain_lo)[j]);
      const double hi = std::min(box.hi[j], (*domain_hi)[j]);
      if (lo < hi) {
        box.lo[j] = lo;
        box.hi[j] = hi;
      }
    }
  }
  return box;
}

Matrix simplex_directions(int dim) {
  const Matrix ones = Matrix::Ones(dim + 1, 1);
  Eigen::HouseholderQR<Matrix> qr(ones);
  const Matrix q = qr.householderQ();
  Matrix b = q.rightCols(dim);  // centered rows with squared norm d/(d+1)
  b *= std::sqrt((dim + 1.0) / dim);
  return b;
}

namespace {

Vector clamp_to(const Vector& z, const SearchBox& box) {
  return z.cwiseMax(box.lo).cwiseMin(box.hi);
}

// Multistart derivative-free descent on the one-point gain given the points
// already pushed onto the scratch.
Vector greedy_point(const GradientScratch& scratch, const Kernel& kernel,
                    const SearchBox& box, const AcquisitionConfig& cfg, RngStream& rng) {
  const Vector& theta = scratch.theta();
  const int d = scratch.dim();
  const Vector& ell = kernel.lengthscales();

  std::vector<Vector> seeds;
  seeds.reserve(static_cast<std::size_t>(cfg.candidate_seed_count + 2 * d));
  for (int i = 0; i < cfg.candidate_seed_count; ++i) {
    seeds.push_back(rng.uniform_vector(box.lo, box.hi));
  }
  // Axis-offset seeds theta +- h e_j at the noise-floor scale h: the
  // constructive forward-difference designs start the descent close to their
  // own optima.
  const double h0 = std::max(std::pow(scratch.base_sigma2_jitter(), 0.25), 3e-4);
  for (int j = 0; j < d; ++j) {
    for (const double sgn : {1.0, -1.0}) {
      Vector z = theta;
      z[j] += sgn * h0 * ell[j];
      seeds.push_back(clamp_to(z, box));
    }
  }

  std::vector<std::pair<double, int>> scored(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    scored[i] = {scratch.gain(seeds[i]), static_cast<int>(i)};
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  Vector best_point = seeds[static_cast<std::size_t>(scored.front().second)];
  double best_gain = scored.front().first;

  const int descents = std::min<int>(cfg.restarts, static_cast<int>(scored.size()));
  for (int r = 0; r < descents; ++r) {
    Vector x = seeds[static_cast<std::size_t>(scored[static_cast<std::size_t>(r)].second)];
    double fx = scored[static_cast<std::size_t>(r)].first;
    Vector step = 0.25 * (box.hi - box.lo);
    for (int sweep = 0; sweep < cfg.local_steps; ++sweep) {
      bool improved = false;
      for (int j = 0; j < d; ++j) {
        for (const double sgn : {1.0, -1.0}) {
          Vector y = x;
          y[j] = std::clamp(x[j] + sgn * step[j], box.lo[j], box.hi[j]);
          const double fy = scratch.gain(y);
          if (fy > fx) {
            x = y;
            fx = fy;
            improved = true;
          }
        }
      }
      if (!improved) {
        step *= 0.5;
        if (step.maxCoeff() < 1e-5 * (box.hi - box.lo).maxCoeff()) break;
      }
    }
    if (fx > best_gain) {
      best_gain = fx;
      best_point = x;
    }
  }
  return best_point;
}

std::vector<int> axes_by_residual(const GradientScratch& scratch) {
  const Vector v = scratch.axis_residual_variances();
  std::vector<int> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return v[a] > v[b]; });
  return order;
}

// b points of +-h axis pairs cycling through the axes with the most residual
// gradient variance. Repetitions get a small radial offset so they stay
// distinct under dedup while acting as repeated measurements.
std::vector<Vector> axis_pair_batch(const GradientScratch& scratch, const Vector& ell,
                                    const std::vector<int>& axis_order, int b, double h,
                                    const SearchBox& box) {
  const Vector& theta = scratch.theta();
  const int d = scratch.dim();
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(b));
  int pair = 0;
  while (static_cast<int>(pts.size()) < b) {
    const int axis = axis_order[static_cast<std::size_t>(pair % d)];
    const double hh = h * (1.0 + 1e-3 * (pair / d));
    for (const double sgn : {1.0, -1.0}) {
      if (static_cast<int>(pts.size()) >= b) break;
      Vector z = theta;
      z[axis] += sgn * hh * ell[axis];
      pts.push_back(clamp_to(z, box));
    }
    ++pair;
  }
  return pts;
}

// Centered regular simplex of d+1 points at radius h, then axis pairs for
// any remainder.
std::vector<Vector> simplex_batch(const GradientScratch& scratch, const Vector& ell,
                                  const Matrix& directions, const std::vector<int>& axis_order,
                                  int b, double h, const SearchBox& box) {
  const Vector& theta = scratch.theta();
  const int d = scratch.dim();
  std::vector<Vector> pts;
  pts.reserve(static_cast<std::size_t>(b));
  for (int i = 0; i <= d && static_cast<int>(pts.size()) < b; ++i) {
    Vector z = theta + h * (ell.array() * directions.row(i).transpose().array()).matrix();
    pts.push_back(clamp_to(z, box));
  }
  if (static_cast<int>(pts.size()) < b) {
    const auto extra =
        axis_pair_batch(scratch, ell, axis_order, b - static_cast<int>(pts.size()), h, box);
    pts.insert(pts.end(), extra.begin(), extra.end());
  }
  return pts;
}

struct BatchCandidate {
  std::vector<Vector> points;  // points that actually extend the design
  double trace = std::numeric_limits<double>::infinity();
};

BatchCandidate try_batch(GradientScratch& scratch, const std::vector<Vector>& pts) {
  BatchCandidate c;
  const int mark = scratch.ext_size();
  for (const auto& p : pts) {
    if (scratch.push(p)) c.points.push_back(p);
  }
  c.trace = scratch.achieved_trace();
  scratch.rollback(mark);
  return c;
}

std::vector<double> radius_grid(double lo, double hi, int n) {
  std::vector<double> g;
  if (!(hi > lo) || n < 2) {
    g.push_back(lo);
    return g;
  }
  const double ratio = std::pow(hi / lo, 1.0 / (n - 1));
  double h = lo;
  for (int i = 0; i < n; ++i, h *= ratio) g.push_back(h);
  return g;
}

// The better of the greedy-sequential batch and the constructive cluster
// batches at size b. `greedy_prefix` carries the greedy track across calls,
// so the b-loop extends it one point at a time.
BatchCandidate minimize_batch_at(GradientScratch& scratch, const Kernel& kernel,
                                 const SearchBox& box, const AcquisitionConfig& cfg,
                                 RngStream& rng, int b, std::vector<Vector>& greedy_prefix) {
  BatchCandidate best;

  {
    const int mark = scratch.ext_size();
    std::vector<Vector> kept;
    for (const auto& p : greedy_prefix) {
      if (scratch.push(p)) kept.push_back(p);
    }
    while (static_cast<int>(greedy_prefix.size()) < b) {
      Vector p = greedy_point(scratch, kernel, box, cfg, rng);
      const bool ok = scratch.push(p);
      greedy_prefix.push_back(p);
      if (ok) {
        kept.push_back(std::move(p));
      } else {
        break;  // design is saturated; no informative point remains
      }
    }
    best.points = std::move(kept);
    best.trace = scratch.achieved_trace();
    scratch.rollback(mark);
  }
  if (b < 2) return best;

  const Vector& ell = kernel.lengthscales();
  const auto axis_order = axes_by_residual(scratch);
  Matrix directions;
  if (b > scratch.dim()) directions = simplex_directions(scratch.dim());

  auto scan_family = [&](auto make) {
    double best_h = 0.0;
    double best_t = std::numeric_limits<double>::infinity();
    for (const double h : radius_grid(2e-4, cfg.search_radius, 12)) {
      const auto cand = try_batch(scratch, make(h));
      if (cand.trace < best_t) {
        best_t = cand.trace;
        best_h = h;
      }
      if (cand.trace < best.trace) best = cand;
    }
    if (best_h > 0.0) {
      for (const double h : radius_grid(best_h / 1.8, best_h * 1.8, 7)) {
        const auto cand = try_batch(scratch, make(h));
        if (cand.trace < best.trace) best = cand;
      }
    }
  };

  scan_family([&](double h) { return axis_pair_batch(scratch, ell, axis_order, b, h, box); });
  if (b > scratch.dim()) {
    scan_family(
        [&](double h) { return simplex_batch(scratch, ell, directions, axis_order, b, h, box); });
  }
  return best;
}

}  // namespace

BatchProposal select_minimal_batch_impl(GradientScratch& scratch, const AcquisitionConfig& cfg,
                                        const SearchBox& box, RngStream& rng) {
  BatchProposal prop;
  prop.achieved_trace = std::max(0.0, scratch.achieved_trace());
  if (prop.achieved_trace <= cfg.epsilon) {
    return prop;  // the carried-over design already certifies epsilon
  }
  const int b_max = cfg.resolved_b_max(scratch.dim());
  const Kernel& kernel = scratch.base_kernel();
  std::vector<Vector> greedy_prefix;

  // The achieved trace is nonincreasing in b (greedy prefixes and the
  // constructive families are nested), so the minimal satisfying b can be
  // found by doubling followed by binary refinement instead of a linear
  // scan. Results are cached per b; the greedy prefix only ever grows.
  std::map<int, BatchCandidate> evaluated;
  const auto eval_b = [&](int b) -> const BatchCandidate& {
    auto it = evaluated.find(b);
    if (it == evaluated.end()) {
      it = evaluated.emplace(b, minimize_batch_at(scratch, kernel, box, cfg, rng, b,
                                                  greedy_prefix))
               .first;
    }
    return it->second;
  };

  int below = 0;  // largest b known to miss epsilon
  int found = -1;
  for (int b = 1;; b = std::min(2 * b, b_max)) {
    if (eval_b(b).trace <= cfg.epsilon) {
      found = b;
      break;
    }
    below = b;
    if (b == b_max) break;
  }

  if (found < 0) {
    const BatchCandidate* best = nullptr;
    for (const auto& [b, cand] : evaluated) {
      if (best == nullptr || cand.trace < best->trace) best = &cand;
    }
    prop.points = best->points;
    prop.achieved_trace = std::max(0.0, best->trace);
    prop.batch_size_used = static_cast<int>(prop.points.size());
    prop.hit_cap = true;
    return prop;
  }

  int lo = below + 1, hi = found;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (eval_b(mid).trace <= cfg.epsilon) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  // Family line searches can produce sub-nested designs across b, so guard
  // against a refinement blip by falling back to the known-good batch.
  const BatchCandidate& winner =
      eval_b(lo).trace <= cfg.epsilon ? eval_b(lo) : eval_b(found);
  prop.points = winner.points;
  prop.achieved_trace = std::max(0.0, winner.trace);
  prop.batch_size_used = static_cast<int>(prop.points.size());
  prop.hit_cap = false;
  return prop;
}

}  // namespace detail

std::vector<Vector> minimize_batch(const Kernel& k, const std::vector<Vector>& design,
                                   const ConstVectorRef& theta, int b,
                                   const AcquisitionConfig& cfg, double sigma2,
                                   RngStream& rng) {
  if (b < 1) throw std::invalid_argument("minimize_batch: b must be >= 1");
  ConditionedGram gram(k, sigma2, design);
  GradientScratch scratch(gram, theta);
  const auto box =
      detail::make_search_box(theta, k.lengthscales(), cfg.search_radius, nullptr, nullptr);
  std::vector<Vector> greedy_prefix;
  return detail::minimize_batch_at(scratch, k, box, cfg, rng, b, greedy_prefix).points;
}

BatchProposal select_minimal_batch(const Kernel& k, const std::vector<Vector>& design,
                                   const ConstVectorRef& theta, const AcquisitionConfig& cfg,
                                   double sigma2, RngStream& rng) {
  ConditionedGram gram(k, sigma2, design);
  GradientScratch scratch(gram, theta);
  const auto box =
      detail::make_search_box(theta, k.lengthscales(), cfg.search_radius, nullptr, nullptr);
  return detail::select_minimal_batch_impl(scratch, cfg, box, rng);
}

}  // namespace dpgibo
