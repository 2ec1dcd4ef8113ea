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

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dpgibo/acceptance.hpp"
#include "dpgibo/harness.hpp"

namespace {

int finish_experiment(const dpgibo::SummaryTable& table) {
  for (const auto& s : table.stats) {
    std::printf("%-28s median final loss %.6g  IQR [%.6g, %.6g]  median evals %.0f\n",
                s.method.c_str(), s.median_final_loss, s.final_loss_iqr_lo,
                s.final_loss_iqr_hi, s.median_total_evaluations);
  }
  return table.any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DP-GIBO: differentially private gradient-informative Bayesian optimization"};
  app.require_subcommand(1);

  std::string seeds_arg;
  std::uint64_t single_seed = 0;
  bool seed_given = false;
  int jobs = 1;
  app.add_option("--seeds", seeds_arg, "comma-separated seed list override")->group("Common");
  app.add_option("--seed", single_seed, "single seed override")
      ->group("Common")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--jobs", jobs, "parallel (method, seed) runs")->group("Common");

  auto* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
  std::string config_path;
  run_cmd->add_option("config", config_path, "experiment config file")->required();
  std::string run_out;
  run_cmd->add_option("--out", run_out, "output directory override");

  auto* preset_cmd = app.add_subcommand("preset", "run a named preset experiment");
  std::string preset_name;
  preset_cmd->add_option("name", preset_name, "preset name (see README)")->required();
  std::string preset_out;
  preset_cmd->add_option("--out", preset_out, "output directory");
  bool paper_scale = false;
  preset_cmd->add_flag("--paper-scale", paper_scale, "restore published problem sizes");
  std::vector<int> dims;
  preset_cmd->add_option("--dims", dims, "dimensions for the dim_scaling preset");

  auto* accept_cmd = app.add_subcommand("accept", "run the acceptance suite");
  std::vector<int> criteria;
  accept_cmd->add_option("--criteria", criteria, "run only these criterion ids");
  std::string accept_out = "accept_out";
  accept_cmd->add_option("--out", accept_out, "scratch directory for file-producing criteria");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto apply_overrides = [&](dpgibo::ExperimentConfig& cfg) {
      if (!seeds_arg.empty()) {
        cfg.seeds.clear();
        std::string item;
        std::istringstream in(seeds_arg);
        while (std::getline(in, item, ',')) {
          if (!item.empty()) cfg.seeds.push_back(std::stoull(item));
        }
        if (cfg.seeds.empty()) throw dpgibo::ConfigError("--seeds: no seeds given");
      }
      if (seed_given) cfg.seeds = {single_seed};
      if (jobs > 1) cfg.jobs = jobs;
    };

    if (run_cmd->parsed()) {
      dpgibo::ExperimentConfig cfg = dpgibo::parse_config_file(config_path);
      if (!run_out.empty()) cfg.output_dir = run_out;
      apply_overrides(cfg);
      return finish_experiment(dpgibo::run_experiment(cfg));
    }

    if (preset_cmd->parsed()) {
      dpgibo::ExperimentConfig cfg = dpgibo::preset(preset_name, paper_scale);
      if (!preset_out.empty()) cfg.output_dir = preset_out;
      apply_overrides(cfg);
      if (preset_name == "dim_scaling") {
        const std::vector<int> study_dims = dims.empty() ? std::vector<int>{2, 5, 10, 15} : dims;
        return finish_experiment(dpgibo::dim_scaling_study(study_dims, cfg));
      }
      return finish_experiment(dpgibo::run_experiment(cfg));
    }

    if (accept_cmd->parsed()) {
      const auto results = dpgibo::run_acceptance(criteria, accept_out);
      int failed = 0;
      for (const auto& r : results) failed += r.pass ? 0 : 1;
      std::printf("%zu criteria run, %d failed\n", results.size(), failed);
      return failed == 0 ? 0 : 1;
    }
  } catch (const dpgibo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
