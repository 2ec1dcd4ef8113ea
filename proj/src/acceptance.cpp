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

#include "dpgibo/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "dpgibo/harness.hpp"
#include "dpgibo/logging.hpp"

namespace dpgibo {

namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "FAILED[" << what << "] ";
    }
  }
  void note(const std::string& s) { detail << s << " "; }
  std::string str() const { return detail.str(); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double median_of(std::vector<double> v) { return quantile(std::move(v), 0.5); }

// ---- C1: clip-aggregate sensitivity is exactly 2B/n -----------------------

Check criterion_sensitivity() {
  Check c;
  RngStream rng(101, 0, 0, StreamPurpose::kTest);
  const double clip_bound = 1.0;
  double worst = 0.0;
  int pairs = 0;
  for (const int n : {2, 10, 50}) {
    for (const int d : {2, 5}) {
      const int reps = 1000 / 6 + 1;
      for (int rep = 0; rep < reps; ++rep) {
        Matrix y(n, d);
        for (int i = 0; i < n; ++i) {
          y.row(i) = (std::pow(10.0, rng.uniform(-1.0, 1.0)) * rng.normal_vector(d)).transpose();
        }
        Matrix y2 = y;
        const int swap_row = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
        y2.row(swap_row) =
            (std::pow(10.0, rng.uniform(-1.0, 1.0)) * rng.normal_vector(d)).transpose();
        const double diff = (clip_aggregate(y, clip_bound) - clip_aggregate(y2, clip_bound)).norm();
        const double bound = 2.0 * clip_bound / n;
        c.expect(diff <= bound + 1e-12, "sensitivity bound n=" + std::to_string(n));
        worst = std::max(worst, diff / bound);
        ++pairs;
      }
    }
  }
  // Adversarial pair: one user flips a far-out gradient, achieving 2B/n.
  for (const int n : {2, 10, 50}) {
    Matrix y = Matrix::Zero(n, 2);
    y(0, 0) = 50.0;
    Matrix y2 = y;
    y2(0, 0) = -50.0;
    const double diff = (clip_aggregate(y, clip_bound) - clip_aggregate(y2, clip_bound)).norm();
    c.expect(diff >= 0.99 * 2.0 * clip_bound / n, "adversarial pair n=" + std::to_string(n));
  }
  c.note(std::to_string(pairs) + " random pairs, worst ratio " + num(worst));
  return c;
}

// ---- C2: accountant exactness and noise calibration ------------------------

Check criterion_accountant() {
  Check c;
  for (const int T : {1, 10, 150, 1000}) {
    for (const double mu : {0.1, 0.5, 1.0, 2.0}) {
      std::vector<double> ledger(static_cast<std::size_t>(T),
                                 mu / std::sqrt(static_cast<double>(T)));
      c.expect(std::abs(gdp_compose(ledger) - mu) <= 1e-12,
               "compose T=" + std::to_string(T) + " mu=" + num(mu));
    }
  }
  const double clip_bound = 1.0;
  const int n = 50, T = 150, d = 5;
  const double mu = 0.5;
  const double expected = 2.0 * clip_bound * std::sqrt(static_cast<double>(T)) / (n * mu);
  double sum_sq = 0.0;
  long long count = 0;
  const Matrix zeros = Matrix::Zero(n, d);
  for (int rep = 0; rep < 10000 / 5; ++rep) {
    PrivacyBudget budget(mu, T, clip_bound, n);
    RngStream rng(202, 0, static_cast<std::uint64_t>(rep), StreamPurpose::kTest);
    const NoisyGradient g = privatize_gradient(zeros, budget, rng);
    sum_sq += g.noise.squaredNorm();
    count += d;
  }
  const double std_hat = std::sqrt(sum_sq / static_cast<double>(count));
  c.expect(std::abs(std_hat - expected) <= 0.03 * expected, "noise std within 3%");
  c.note("std_hat=" + num(std_hat) + " expected=" + num(expected));
  return c;
}

// ---- C3: noiseless zero-trace designs of size <= d+1 -----------------------

Check criterion_zero_trace() {
  Check c;
  for (const int d : {1, 2, 3}) {
    const Kernel k = Kernel::rbf(d);
    AcquisitionConfig cfg;
    cfg.epsilon = 1e-6;
    cfg.b_max = 2 * (d + 1);
    RngStream rng(303, 0, static_cast<std::uint64_t>(d), StreamPurpose::kAcquisition);
    const Vector theta = Vector::Zero(d);
    const BatchProposal prop = select_minimal_batch(k, {}, theta, cfg, 0.0, rng);
    const double direct = posterior_gradient_covariance(k, prop.points, 0.0, theta).trace();
    c.expect(prop.batch_size_used <= d + 1, "batch size d=" + std::to_string(d));
    c.expect(prop.achieved_trace <= 1e-6, "certified trace d=" + std::to_string(d));
    c.expect(direct <= 1e-6, "direct trace d=" + std::to_string(d));
    c.note("d=" + std::to_string(d) + ": b=" + std::to_string(prop.batch_size_used) +
           " trace=" + num(direct));
  }
  return c;
}

// ---- C4: RKHS gradient bias bound ------------------------------------------

Check criterion_rkhs_bias() {
  Check c;
  RngStream rng(404, 0, 0, StreamPurpose::kTest);
  double worst_ratio = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int d = 1 + inst % 3;
    const Kernel k = (inst % 2 == 0) ? Kernel::rbf(d) : Kernel::matern52(d);
    const int n_centers = 3 + static_cast<int>(rng.next_u64() % 4);
    std::vector<Vector> centers;
    for (int j = 0; j < n_centers; ++j) {
      centers.push_back(rng.uniform_vector(Vector::Constant(d, -1.0), Vector::Constant(d, 1.0)));
    }
    const Vector alpha = 0.5 * rng.normal_vector(n_centers);
    const SyntheticGPDraw f(k, centers, alpha);

    const int n_design = 4 + static_cast<int>(rng.next_u64() % 7);
    std::vector<Vector> design;
    while (static_cast<int>(design.size()) < n_design) {
      Vector z = rng.uniform_vector(Vector::Constant(d, -1.5), Vector::Constant(d, 1.5));
      bool close = false;
      for (const auto& p : design) {
        if ((p - z).norm() < 0.05) close = true;
      }
      if (!close) design.push_back(std::move(z));
    }
    const Vector theta =
        rng.uniform_vector(Vector::Constant(d, -1.0), Vector::Constant(d, 1.0));

    EvaluationSet ev(1, 0.0);
    Matrix y(1, n_design);
    for (int j = 0; j < n_design; ++j) y(0, j) = f.value(design[static_cast<std::size_t>(j)]);
    ev.append(design, y);

    const Matrix means = posterior_gradient_means(k, ev, theta);
    const double err_sq = (f.gradient(theta) - means.row(0).transpose()).squaredNorm();
    const double trace = posterior_gradient_covariance(k, design, 0.0, theta).trace();
    const double bound = f.rkhs_norm_sq() * trace + 1e-8;
    c.expect(err_sq <= bound, "bias bound instance " + std::to_string(inst));
    if (bound > 0) worst_ratio = std::max(worst_ratio, err_sq / bound);
  }
  c.note("50 instances, worst err^2/bound=" + num(worst_ratio));
  return c;
}

// ---- C5: noisy 2md axis design scaling --------------------------------------

std::vector<Vector> axis_rep_design(int d, double h, int m) {
  std::vector<Vector> pts;
  for (int rep = 0; rep < m; ++rep) {
    const double hh = h * (1.0 + 1e-3 * rep);
    for (int j = 0; j < d; ++j) {
      for (const double sgn : {1.0, -1.0}) {
        Vector z = Vector::Zero(d);
        z[j] = sgn * hh;
        pts.push_back(std::move(z));
      }
    }
  }
  return pts;
}

Check criterion_noisy_scaling() {
  Check c;
  const int d = 3;
  const double sigma = 1.0;
  const Kernel k = Kernel::rbf(d);
  const Vector theta = Vector::Zero(d);
  double prev = std::numeric_limits<double>::infinity();
  for (const int m : {1, 4, 16, 64}) {
    const double h = std::pow(sigma * sigma / m, 0.25);
    const auto design = axis_rep_design(d, h, m);
    const double trace =
        posterior_gradient_covariance(k, design, sigma * sigma, theta).trace();
    const double ratio = trace * std::sqrt(static_cast<double>(m)) / (sigma * d);
    c.expect(trace < prev, "trace decreasing at m=" + std::to_string(m));
    c.expect(ratio <= 1.5, "trace*sqrt(m)/(sigma d) bounded at m=" + std::to_string(m));
    c.note("m=" + std::to_string(m) + ": trace=" + num(trace) + " ratio=" + num(ratio));
    prev = trace;
  }
  return c;
}

// ---- C6: normal-location decay and privacy floors ---------------------------

Check criterion_normal_location() {
  Check c;
  const ExperimentConfig cfg = preset("normal_location");
  const MethodSpec& mu05 = cfg.methods[0];
  const MethodSpec& mu2 = cfg.methods[1];
  const MethodSpec& nonprivate = cfg.methods[2];

  // (a) + (c): the non-private run converges to the MLE at the plain-GD rate.
  {
    const Problem p = build_problem(cfg.problem, 1);
    const Vector x_bar = -p.true_gradient(Vector::Zero(p.dimension));
    const double f_star = p.true_loss(x_bar);
    const RunRecord r = dp_gibo_run(p, build_optimizer_config(nonprivate, p, 1));
    c.expect(!r.failed, "non-private run ok");
    c.expect((r.final_theta - x_bar).norm() <= 1e-3, "final distance to MLE <= 1e-3");
    c.note("dist=" + num((r.final_theta - x_bar).norm()));

    const double eta = nonprivate.eta, tau = 1.0;
    double f_prev = p.true_loss(Vector::Zero(p.dimension)) - f_star;
    for (int t = 0; t < 10; ++t) {
      const double f_cur = r.rows[static_cast<std::size_t>(t)].f_true - f_star;
      c.expect(f_cur <= ((1.0 - eta * tau) + 0.05) * f_prev,
               "decay ratio at t=" + std::to_string(t));
      f_prev = f_cur;
    }
  }

  // (b) median floors over 10 seeds: mu=0.5 above mu=2 above non-private.
  std::vector<double> floor05, floor2, floor_np;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Problem p = build_problem(cfg.problem, seed);
    const Vector x_bar = -p.true_gradient(Vector::Zero(p.dimension));
    const double f_star = p.true_loss(x_bar);
    floor05.push_back(dp_gibo_run(p, build_optimizer_config(mu05, p, seed)).final_loss - f_star);
    floor2.push_back(dp_gibo_run(p, build_optimizer_config(mu2, p, seed)).final_loss - f_star);
    floor_np.push_back(dp_gibo_run(p, build_optimizer_config(nonprivate, p, seed)).final_loss -
                       f_star);
  }
  const double m05 = median_of(floor05), m2 = median_of(floor2), mnp = median_of(floor_np);
  c.expect(m05 > m2 && m2 > mnp, "floor ordering");
  c.note("floors: mu0.5=" + num(m05) + " mu2=" + num(m2) + " nonprivate=" + num(mnp));
  return c;
}

// ---- C7: DP-GIBO vs DP-GD on the Huber regression ---------------------------

Check criterion_huber() {
  Check c;
  const ExperimentConfig cfg = preset("huber_vs_dpgd");
  std::vector<double> gibo, gd, np;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    gibo.push_back(run_method(cfg.methods[0], cfg.problem, seed).final_loss);
    gd.push_back(run_method(cfg.methods[1], cfg.problem, seed).final_loss);
    np.push_back(run_method(cfg.methods[2], cfg.problem, seed).final_loss);
  }
  const double m_gibo = median_of(gibo), m_gd = median_of(gd), m_np = median_of(np);
  c.expect(std::abs(m_gibo - m_gd) <= 0.2 * m_gd, "DP-GIBO within 20% of DP-GD");
  c.expect(std::abs(m_gibo - m_np) <= 0.5 * m_np, "DP-GIBO within 50% of non-private");
  c.expect(std::abs(m_gd - m_np) <= 0.5 * m_np, "DP-GD within 50% of non-private");
  c.note("medians: gibo=" + num(m_gibo) + " gd=" + num(m_gd) + " np=" + num(m_np));
  return c;
}

// ---- C8: epsilon sweep on GP lengthscale tuning ------------------------------

Check criterion_eps_sweep() {
  Check c;
  const ExperimentConfig cfg = preset("gp_tuning_eps_sweep");
  std::vector<std::vector<double>> losses(3), evals(3);
  for (std::size_t mi = 0; mi < 3; ++mi) {
    for (const auto seed : cfg.seeds) {
      const RunRecord r = run_method(cfg.methods[mi], cfg.problem, seed);
      losses[mi].push_back(r.final_loss);
      evals[mi].push_back(static_cast<double>(r.total_evaluations));
    }
  }
  const double e03 = median_of(evals[0]), e05 = median_of(evals[1]), ehi = median_of(evals[2]);
  c.expect(ehi <= e05 && e05 <= e03 && ehi < e03, "higher epsilon uses fewer evaluations");
  const double l03 = median_of(losses[0]), l05 = median_of(losses[1]), lhi = median_of(losses[2]);
  const double lo03 = quantile(losses[0], 0.25), hi03 = quantile(losses[0], 0.75);
  const double lo05 = quantile(losses[1], 0.25), hi05 = quantile(losses[1], 0.75);
  c.expect(l03 >= lo05 && l03 <= hi05, "median(eps=0.3) inside IQR(eps=0.5)");
  c.expect(l05 >= lo03 && l05 <= hi03, "median(eps=0.5) inside IQR(eps=0.3)");
  c.expect(lhi > l03 && lhi > l05, "high epsilon loses in median");
  c.note("evals med: " + num(e03) + "/" + num(e05) + "/" + num(ehi) +
         "; losses med: " + num(l03) + "/" + num(l05) + "/" + num(lhi));
  return c;
}

// ---- C9: sigma misspecification ---------------------------------------------

Check criterion_sigma_misspec() {
  Check c;
  const ExperimentConfig cfg = preset("noisy_sigma_misspec");
  std::vector<double> correct, over, under;
  for (const auto seed : cfg.seeds) {
    correct.push_back(run_method(cfg.methods[0], cfg.problem, seed).final_loss);
    over.push_back(run_method(cfg.methods[1], cfg.problem, seed).final_loss);
    under.push_back(run_method(cfg.methods[2], cfg.problem, seed).final_loss);
  }
  const double mc = median_of(correct), mo = median_of(over), mu_ = median_of(under);
  c.expect(mc < mo, "correct sigma beats over-estimate");
  c.expect(mu_ > mo && mu_ > mc, "under-estimate is worst");
  c.note("medians: correct=" + num(mc) + " over=" + num(mo) + " under=" + num(mu_));
  return c;
}

// ---- C10: dimension-scaling gap ----------------------------------------------

Check criterion_dim_scaling(const std::string& scratch_dir) {
  Check c;
  ExperimentConfig base = preset("dim_scaling");
  base.output_dir = scratch_dir + "/dim_scaling";
  const SummaryTable table = dim_scaling_study({2, 5, 10, 15}, base);
  c.expect(!table.any_failed, "all runs ok");
  double prev = -std::numeric_limits<double>::infinity();
  for (const int d : {2, 5, 10, 15}) {
    const double gap = table.stats_for("gap_d" + std::to_string(d)).median_final_loss;
    c.expect(gap >= prev - 1e-9, "gap nondecreasing at d=" + std::to_string(d));
    c.note("gap_d" + std::to_string(d) + "=" + num(gap));
    prev = gap;
  }
  return c;
}

// ---- C11: determinism ----------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Check criterion_determinism(const std::string& scratch_dir) {
  Check c;
  ExperimentConfig cfg = preset("huber_vs_dpgd");
  cfg.seeds = {3};
  int compared = 0;
  cfg.output_dir = scratch_dir + "/det_a";
  run_experiment(cfg);
  cfg.output_dir = scratch_dir + "/det_b";
  run_experiment(cfg);
  for (auto it = fs::recursive_directory_iterator(scratch_dir + "/det_a");
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file() || it->path().extension() != ".csv") continue;
    const fs::path rel = fs::relative(it->path(), scratch_dir + "/det_a");
    const fs::path other = fs::path(scratch_dir + "/det_b") / rel;
    c.expect(fs::exists(other), "missing counterpart " + rel.string());
    if (fs::exists(other)) {
      c.expect(slurp(it->path()) == slurp(other), "byte-identical " + rel.string());
      ++compared;
    }
  }
  c.expect(compared >= 4, "found the expected CSV set");
  c.note(std::to_string(compared) + " CSVs byte-compared");
  return c;
}

// ---- C12: kernel derivatives vs finite differences -----------------------------

Check criterion_kernel_derivatives() {
  Check c;
  RngStream rng(1212, 0, 0, StreamPurpose::kTest);
  const double step = 1e-5;
  double worst = 0.0;
  for (const KernelFamily family :
       {KernelFamily::kRbf, KernelFamily::kMatern52, KernelFamily::kMatern72,
        KernelFamily::kPolynomialDeg2}) {
    for (int rep = 0; rep < 110; ++rep) {
      const int d = 1 + static_cast<int>(rng.next_u64() % 4);
      Vector ell(d);
      for (int j = 0; j < d; ++j) ell[j] = std::pow(10.0, rng.uniform(-0.3, 0.3));
      const Kernel k(family, ell, std::pow(10.0, rng.uniform(-0.3, 0.3)));
      const Vector u = rng.uniform_vector(Vector::Constant(d, -1.5), Vector::Constant(d, 1.5));
      const Vector v = rng.uniform_vector(Vector::Constant(d, -1.5), Vector::Constant(d, 1.5));

      const Vector grad = kernel_grad_first(k, u, v);
      for (int j = 0; j < d; ++j) {
        Vector up = u, um = u;
        up[j] += step;
        um[j] -= step;
        const double fd = (kernel_eval(k, up, v) - kernel_eval(k, um, v)) / (2.0 * step);
        const double err = std::abs(fd - grad[j]) / (1.0 + std::abs(grad[j]));
        worst = std::max(worst, err);
        c.expect(err <= 1e-4, "grad fd " + kernel_family_name(family));
      }
      const Matrix hess = kernel_cross_hessian(k, u, v);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          Vector upp = u, upm = u;
          upp[i] += step;
          upm[i] -= step;
          Vector vp = v, vm = v;
          vp[j] += step;
          vm[j] -= step;
          const double fd =
              (kernel_eval(k, upp, vp) - kernel_eval(k, upp, vm) - kernel_eval(k, upm, vp) +
               kernel_eval(k, upm, vm)) /
              (4.0 * step * step);
          const double err = std::abs(fd - hess(i, j)) / (1.0 + std::abs(hess(i, j)));
          worst = std::max(worst, err);
          c.expect(err <= 1e-4, "hessian fd " + kernel_family_name(family));
        }
      }
    }
  }
  c.note("440 random points, worst mixed-rel error " + num(worst));
  return c;
}

struct Criterion {
  int id;
  std::string name;
  std::function<Check()> fn;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids,
                                            const std::string& scratch_dir) {
  fs::create_directories(scratch_dir);
  const std::vector<Criterion> criteria = {
      {1, "privacy sensitivity 2B/n", criterion_sensitivity},
      {2, "accountant exactness and noise calibration", criterion_accountant},
      {3, "noiseless zero-trace design (<= d+1 points)", criterion_zero_trace},
      {4, "RKHS gradient bias bound", criterion_rkhs_bias},
      {5, "noisy 2md design scaling", criterion_noisy_scaling},
      {6, "normal-location decay and privacy floors", criterion_normal_location},
      {7, "DP-GIBO vs DP-GD on Huber regression", criterion_huber},
      {8, "epsilon sweep ordering", criterion_eps_sweep},
      {9, "sigma misspecification ordering", criterion_sigma_misspec},
      {10, "dimension-scaling gap", [&] { return criterion_dim_scaling(scratch_dir); }},
      {11, "byte-identical rerun", [&] { return criterion_determinism(scratch_dir); }},
      {12, "kernel derivatives vs finite differences", criterion_kernel_derivatives},
  };

  std::vector<CriterionResult> results;
  const bool was_logging = log_enabled().exchange(false);
  for (const auto& criterion : criteria) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), criterion.id) == ids.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    r.id = criterion.id;
    r.name = criterion.name;
    try {
      const Check c = criterion.fn();
      r.pass = c.ok;
      r.detail = c.str();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] C%-2d %s (%.1fs) %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.seconds, r.detail.c_str());
    std::fflush(stdout);
    results.push_back(std::move(r));
  }
  log_enabled().store(was_logging);
  return results;
}

}  // namespace dpgibo
