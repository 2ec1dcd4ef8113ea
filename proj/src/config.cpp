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

#include "dpgibo/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpgibo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char delim) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, delim)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: value '" + v + "' for key '" + key + "' is not a number");
  }
}

long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: value '" + v + "' for key '" + key + "' is not an integer");
  }
}

std::vector<double> parse_reals(const std::string& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) {
    if (!item.empty()) out.push_back(parse_double(item, key));
  }
  return out;
}

void apply_experiment_key(ExperimentConfig& cfg, const std::string& key,
                          const std::string& value) {
  if (key == "name") {
    cfg.name = value;
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& s : split(value, ',')) {
      if (!s.empty()) cfg.seeds.push_back(static_cast<std::uint64_t>(parse_int(s, key)));
    }
  } else if (key == "jobs") {
    cfg.jobs = static_cast<int>(parse_int(value, key));
  } else {
    throw ConfigError("config: unknown [experiment] key '" + key + "'");
  }
}

void apply_problem_key(ProblemSpec& p, const std::string& key, const std::string& value) {
  if (key == "type") {
    p.type = value;
  } else if (key == "d") {
    p.dim = static_cast<int>(parse_int(value, key));
  } else if (key == "n") {
    p.users = static_cast<int>(parse_int(value, key));
  } else if (key == "n_total") {
    p.n_total = static_cast<int>(parse_int(value, key));
  } else if (key == "eval_sigma") {
    p.eval_sigma = parse_double(value, key);
  } else if (key == "lambda") {
    p.lambda = parse_double(value, key);
  } else if (key == "huber_c") {
    p.huber_c = parse_double(value, key);
  } else if (key == "theta_star") {
    p.theta_star = parse_reals(value, key);
  } else {
    throw ConfigError("config: unknown [problem] key '" + key + "'");
  }
}

void apply_method_key(MethodSpec& m, const std::string& key, const std::string& value) {
  if (key == "algorithm") {
    m.algorithm = value;
  } else if (key == "T") {
    m.iterations = static_cast<int>(parse_int(value, key));
  } else if (key == "eta") {
    m.eta = parse_double(value, key);
  } else if (key == "step_rule") {
    m.step_rule = value;
  } else if (key == "B") {
    m.clip_bound = parse_double(value, key);
  } else if (key == "mu") {
    m.mu = parse_double(value, key);
  } else if (key == "sigma") {
    m.sigma = parse_double(value, key);
  } else if (key == "epsilon") {
    m.epsilon = parse_double(value, key);
  } else if (key == "b_max") {
    m.b_max = static_cast<int>(parse_int(value, key));
  } else if (key == "search_radius") {
    m.search_radius = parse_double(value, key);
  } else if (key == "restarts") {
    m.restarts = static_cast<int>(parse_int(value, key));
  } else if (key == "local_steps") {
    m.local_steps = static_cast<int>(parse_int(value, key));
  } else if (key == "candidate_seeds") {
    m.candidate_seeds = static_cast<int>(parse_int(value, key));
  } else if (key == "kernel") {
    m.kernel = value;
  } else if (key == "lengthscale") {
    m.lengthscale = parse_double(value, key);
  } else if (key == "budget_configs") {
    m.budget_configs = parse_int(value, key);
  } else if (key == "init") {
    m.init = value;
  } else if (key == "theta0") {
    m.theta0 = parse_reals(value, key);
  } else if (key == "problem_eval_sigma") {
    m.problem_eval_sigma = parse_double(value, key);
  } else {
    throw ConfigError("config: unknown [method] key '" + key + "'");
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  enum class Section { kNone, kExperiment, kProblem, kMethod };
  Section section = Section::kNone;
  MethodSpec* method = nullptr;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
      }
      const std::string inner = trim(line.substr(1, line.size() - 2));
      if (inner == "experiment") {
        section = Section::kExperiment;
      } else if (inner == "problem") {
        section = Section::kProblem;
      } else if (inner.rfind("method", 0) == 0) {
        const std::string label = trim(inner.substr(6));
        if (label.empty()) {
          throw ConfigError("config line " + std::to_string(line_no) +
                            ": [method] needs a label, e.g. [method dp-gibo]");
        }
        cfg.methods.emplace_back();
        cfg.methods.back().label = label;
        method = &cfg.methods.back();
        section = Section::kMethod;
      } else {
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" +
                          inner + "]");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    switch (section) {
      case Section::kExperiment:
        apply_experiment_key(cfg, key, value);
        break;
      case Section::kProblem:
        apply_problem_key(cfg.problem, key, value);
        break;
      case Section::kMethod:
        apply_method_key(*method, key, value);
        break;
      case Section::kNone:
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": key outside any section");
    }
  }

  if (cfg.seeds.empty()) throw ConfigError("config: [experiment] seeds must be nonempty");
  if (cfg.methods.empty()) throw ConfigError("config: at least one [method] is required");
  if (cfg.problem.type.empty()) throw ConfigError("config: [problem] type is required");
  if (cfg.output_dir.empty()) throw ConfigError("config: [experiment] output_dir is required");
  if (cfg.name.empty()) cfg.name = cfg.problem.type;
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_reals(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v[i]);
  }
  return s;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[experiment]\n";
  os << "name = " << cfg.name << "\n";
  os << "output_dir = " << cfg.output_dir << "\n";
  os << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i) os << ",";
    os << cfg.seeds[i];
  }
  os << "\n";
  os << "jobs = " << cfg.jobs << "\n\n";

  os << "[problem]\n";
  os << "type = " << cfg.problem.type << "\n";
  if (cfg.problem.dim > 0) os << "d = " << cfg.problem.dim << "\n";
  if (cfg.problem.users > 0) os << "n = " << cfg.problem.users << "\n";
  if (cfg.problem.n_total > 0) os << "n_total = " << cfg.problem.n_total << "\n";
  if (cfg.problem.eval_sigma != 0.0) os << "eval_sigma = " << fmt(cfg.problem.eval_sigma) << "\n";
  if (cfg.problem.lambda != 0.0) os << "lambda = " << fmt(cfg.problem.lambda) << "\n";
  if (cfg.problem.huber_c != 1.0) os << "huber_c = " << fmt(cfg.problem.huber_c) << "\n";
  if (!cfg.problem.theta_star.empty()) {
    os << "theta_star = " << join_reals(cfg.problem.theta_star) << "\n";
  }

  for (const auto& m : cfg.methods) {
    os << "\n[method " << m.label << "]\n";
    os << "algorithm = " << m.algorithm << "\n";
    if (m.algorithm == "random_search") {
      os << "budget_configs = " << m.budget_configs << "\n";
      continue;
    }
    os << "T = " << m.iterations << "\n";
    os << "eta = " << fmt(m.eta) << "\n";
    os << "step_rule = " << m.step_rule << "\n";
    os << "B = " << fmt(m.clip_bound) << "\n";
    os << "mu = " << fmt(m.mu) << "\n";
    os << "sigma = " << fmt(m.sigma) << "\n";
    os << "init = " << m.init << "\n";
    if (!m.theta0.empty()) os << "theta0 = " << join_reals(m.theta0) << "\n";
    if (!std::isnan(m.problem_eval_sigma)) {
      os << "problem_eval_sigma = " << fmt(m.problem_eval_sigma) << "\n";
    }
    if (m.algorithm == "dp_gibo") {
      os << "epsilon = " << fmt(m.epsilon) << "\n";
      os << "b_max = " << m.b_max << "\n";
      os << "search_radius = " << fmt(m.search_radius) << "\n";
      os << "restarts = " << m.restarts << "\n";
      os << "local_steps = " << m.local_steps << "\n";
      os << "candidate_seeds = " << m.candidate_seeds << "\n";
      os << "kernel = " << m.kernel << "\n";
      os << "lengthscale = " << fmt(m.lengthscale) << "\n";
    }
  }
  return os.str();
}

}  // namespace dpgibo
