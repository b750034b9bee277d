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

#ifndef PREFBED_CONFIG_HPP_
#define PREFBED_CONFIG_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefbed/runner.hpp"

namespace prefbed {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

using ConfigMap = std::map<std::string, std::string>;

// key = value lines; '#' starts a comment; keys are dotted lowercase.
// Throws ConfigError with file:line diagnostics.
ConfigMap parse_config_file(const std::string& path);

// "key=value" strings from the command line; later entries win.
void apply_overrides(ConfigMap& map, const std::vector<std::string>& sets);

// Builds and validates the experiment configuration. Unknown keys are
// rejected so typos fail loudly.
ExperimentConfig build_experiment_config(const ConfigMap& map);

}  // namespace prefbed

#endif  // PREFBED_CONFIG_HPP_
