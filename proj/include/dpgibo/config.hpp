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

#include <cstdint>
#include <string>
#include <vector>

#include "dpgibo/kernels.hpp"

namespace dpgibo {

// Configuration problems (bad file, unknown preset, invalid values) map to
// CLI exit code 2.
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProblemSpec {
  std::string type;  // normal_location | huber_regression | gp_lengthscale_tuning | svm_surrogate
  int dim = 0;       // 0 -> type default
  int users = 0;     // 0 -> type default
  int n_total = 0;   // gp_lengthscale_tuning: total data size (0 -> 600; paper scale 2000)
  double eval_sigma = 0.0;  // actual evaluation noise of the problem
  double lambda = 0.0;      // > 0 wraps the problem in additive N(0, lambda^2) noise
  double huber_c = 1.0;
  std::vector<double> theta_star;  // empty -> type default (ones)
};

struct MethodSpec {
  std::string label;
  std::string algorithm = "dp_gibo";  // dp_gibo | dp_gd | random_search
  int iterations = 100;
  double eta = 0.1;
  std::string step_rule = "plain";  // plain | adagrad
  double clip_bound = 1.0;
  double mu = 0.0;  // 0 = non-private
  double sigma = 0.0;
  double epsilon = 1e-3;
  int b_max = 0;  // 0 -> 2(d+1)
  double search_radius = 1.0;
  int restarts = 3;
  int local_steps = 10;
  int candidate_seeds = 32;
  std::string kernel = "rbf";  // rbf | matern52 | matern72 | poly2
  double lengthscale = 1.0;
  long long budget_configs = 0;  // random_search: number of configurations
  std::string init = "zeros";    // zeros | uniform
  std::vector<double> theta0;    // explicit start overrides `init`
  // Per-method override of the problem's actual evaluation noise (NaN = no
  // override); used by the sigma sweep where the noise level itself varies.
  double problem_eval_sigma = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentConfig {
  std::string name;
  std::string output_dir;
  std::vector<std::uint64_t> seeds;
  ProblemSpec problem;
  std::vector<MethodSpec> methods;
  int jobs = 1;
};

// Flat key-value format with [experiment], [problem] and [method <label>]
// sections; '#' comments. The grammar is documented in the README.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Round-trips an ExperimentConfig back to the config grammar.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace dpgibo
