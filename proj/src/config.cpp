// Copyright 2026 The prefbed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "prefbed/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace prefbed {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + value);
  }
}

int to_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: " + value);
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + value);
}

Vector to_vector(const std::string& key, const std::string& value) {
  const std::vector<std::string> items = split_list(value);
  Vector v(items.size());
  for (size_t i = 0; i < items.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = to_double(key, items[i]);
  return v;
}

}  // namespace

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ConfigMap map;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    map[key] = value;
  }
  return map;
}

void apply_overrides(ConfigMap& map, const std::vector<std::string>& sets) {
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value, got: " + s);
    map[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
  }
}

ExperimentConfig build_experiment_config(const ConfigMap& map) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : map) {
    if (key == "benchmark") {
      cfg.benchmark = benchmark_from_string(value);
    } else if (key == "methods") {
      cfg.methods.clear();
      for (const std::string& m : split_list(value))
        cfg.methods.push_back(method_from_string(m));
    } else if (key == "budget") {
      cfg.budget = to_int(key, value);
    } else if (key == "n_init") {
      cfg.n_init = to_int(key, value);
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const std::string& s : split_list(value))
        cfg.seeds.push_back(static_cast<uint64_t>(to_int(key, s)));
    } else if (key == "oracle.backend") {
      if (value != "synthetic" && value != "llm" && value != "interactive")
        throw ConfigError("oracle.backend must be synthetic|llm|interactive");
      cfg.oracle_backend = value;
    } else if (key == "oracle.weights") {
      cfg.oracle_weights = to_vector(key, value);
    } else if (key == "oracle.lambda") {
      cfg.oracle_lambda = to_double(key, value);
    } else if (key == "eval.weights") {
      cfg.eval_weights = to_vector(key, value);
    } else if (key == "acquisition.pool_size") {
      cfg.acquisition.pool_size = to_int(key, value);
    } else if (key == "acquisition.top_k") {
      cfg.acquisition.top_k = to_int(key, value);
    } else if (key == "acquisition.mc_samples") {
      cfg.acquisition.mc_samples = to_int(key, value);
    } else if (key == "acquisition.refine_steps") {
      cfg.acquisition.refine_steps = to_int(key, value);
    } else if (key == "acquisition.bald_samples") {
      cfg.acquisition.bald_samples = to_int(key, value);
    } else if (key == "gp.mode") {
      if (value == "exact")
        cfg.gp.mode = GpMode::kExact;
      else if (value == "svgp")
        cfg.gp.mode = GpMode::kSparseVariational;
      else
        throw ConfigError("gp.mode must be exact|svgp");
    } else if (key == "gp.inducing") {
      cfg.gp.inducing = to_int(key, value);
    } else if (key == "llm.url") {
      cfg.llm.url = value;
    } else if (key == "llm.model") {
      cfg.llm.model = value;
    } else if (key == "llm.temperature") {
      cfg.llm.temperature = to_double(key, value);
    } else if (key == "llm.api_key_env") {
      cfg.llm.api_key_env = value;
    } else if (key == "log_timings") {
      cfg.log_timings = to_bool(key, value);
    } else if (key == "snapshots") {
      cfg.snapshots = to_bool(key, value);
    } else if (key.rfind("rank.", 0) == 0) {
      // rank.* keys are consumed by the rank command.
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  try {
    cfg.validate();
  } catch (const ContractViolation& err) {
    throw ConfigError(err.what());
  }
  return cfg;
}

}  // namespace prefbed
