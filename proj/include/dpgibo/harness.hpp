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

#include <map>
#include <string>
#include <vector>

#include "dpgibo/config.hpp"
#include "dpgibo/optimizer.hpp"

namespace dpgibo {

struct SummaryRow {
  std::string method;
  std::uint64_t seed = 0;
  std::string status;  // ok | failed
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  long long total_evaluations = 0;
};

struct MethodStats {
  std::string method;
  double median_final_loss = std::numeric_limits<double>::quiet_NaN();
  double final_loss_iqr_lo = std::numeric_limits<double>::quiet_NaN();
  double final_loss_iqr_hi = std::numeric_limits<double>::quiet_NaN();
  double median_total_evaluations = 0.0;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;  // per-seed rows, configuration order
  std::vector<MethodStats> stats;
  bool any_failed = false;

  const MethodStats& stats_for(const std::string& method) const;
  std::vector<double> losses_for(const std::string& method) const;
};

Problem build_problem(const ProblemSpec& spec, std::uint64_t seed);
OptimizerConfig build_optimizer_config(const MethodSpec& m, const Problem& problem,
                                       std::uint64_t seed);

// Runs a single (method, seed) pair.
RunRecord run_method(const MethodSpec& m, const ProblemSpec& problem_spec,
                     std::uint64_t seed);

// Runs every (method, seed) pair, writes <out>/<method>/seed_<s>.csv traces,
// a .meta sidecar per run (full config, ledger, wall time), <out>/summary.csv
// and <out>/timing.txt. Identical configs reproduce identical CSV bytes;
// wall times live outside the CSVs for that reason.
SummaryTable run_experiment(const ExperimentConfig& cfg);

// Named experiment configurations carrying the published constants,
// desk-scaled where the README says so.
ExperimentConfig preset(const std::string& name, bool paper_scale = false);
std::vector<std::string> preset_names();

// DP-GIBO vs random search at matched evaluation budgets across dimensions.
// Summary rows carry per-dimension method results plus gap_d<d> rows with
// the per-seed (random search - DP-GIBO) final-loss gaps.
SummaryTable dim_scaling_study(const std::vector<int>& dims, const ExperimentConfig& base);

// Quartile helpers shared with the acceptance suite (linear interpolation).
double quantile(std::vector<double> values, double q);

}  // namespace dpgibo
