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

#include "prefbed/oracle.hpp"

#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "prefbed/preference_gp.hpp"  // normal_cdf

namespace prefbed {

PromptTemplate PromptTemplate::create(std::string task,
                                      std::vector<std::string> names,
                                      std::string criteria) {
  require(!task.empty(), "PromptTemplate: task description must not be empty");
  require(!names.empty(), "PromptTemplate: objective names must not be empty");
  require(!criteria.empty(), "PromptTemplate: criteria must not be empty");
  PromptTemplate tmpl;
  tmpl.task_description = std::move(task);
  tmpl.objective_names = std::move(names);
  tmpl.criteria = std::move(criteria);
  return tmpl;
}

namespace {

std::string format_sig4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void render_scenario(std::ostringstream& out, const PromptTemplate& tmpl,
                     int index, const Vector& y) {
  out << "Scenario " << index << ":\n";
  for (size_t i = 0; i < tmpl.objective_names.size(); ++i)
    out << "  - " << tmpl.objective_names[i] << ": "
        << format_sig4(y[static_cast<Eigen::Index>(i)]) << "\n";
}

}  // namespace

std::string build_prompt(const PromptTemplate& tmpl, const Vector& y1,
                         const Vector& y2) {
  require(static_cast<size_t>(y1.size()) == tmpl.objective_names.size() &&
              y1.size() == y2.size(),
          "build_prompt: observable dimension mismatch");
  std::ostringstream out;
  out << "Task: " << tmpl.task_description << "\n\n";
  render_scenario(out, tmpl, 1, y1);
  out << "\n";
  render_scenario(out, tmpl, 2, y2);
  out << "\nCriteria: " << tmpl.criteria << "\n\n"
      << tmpl.response_instruction << "\n";
  return out.str();
}

Verdict synthetic_compare(const SyntheticOracleSpec& spec, const Vector& y1,
                          const Vector& y2, Rng& rng) {
  require(spec.weights.size() == y1.size() && y1.size() == y2.size(),
          "synthetic_compare: dimension mismatch");
  require(spec.weights.allFinite(), "synthetic_compare: weights must be finite");
  require(spec.lambda_true >= 0.0,
          "synthetic_compare: lambda_true must be non-negative");
  const double s1 = spec.weights.dot(y1);
  const double s2 = spec.weights.dot(y2);
  Verdict verdict;
  if (spec.lambda_true == 0.0) {
    if (s1 > s2)
      verdict.choice = 1;
    else if (s2 > s1)
      verdict.choice = 2;
    else
      verdict.choice = rng.uniform() < 0.5 ? 1 : 2;  // tie: fair coin
  } else {
    const double p1 = normal_cdf((s1 - s2) /
                                 (std::numbers::sqrt2 * spec.lambda_true));
    verdict.choice = rng.uniform() < p1 ? 1 : 2;
  }
  return verdict;
}

Verdict interactive_compare(const PromptTemplate& tmpl, const Vector& y1,
                            const Vector& y2, std::istream& in,
                            std::ostream& out) {
  out << build_prompt(tmpl, y1, y2) << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    // Trim surrounding whitespace.
    const auto first = line.find_first_not_of(" \t\r\n");
    const auto last = line.find_last_not_of(" \t\r\n");
    const std::string token =
        first == std::string::npos ? "" : line.substr(first, last - first + 1);
    if (token == "1" || token == "2") {
      Verdict verdict;
      verdict.choice = token == "1" ? 1 : 2;
      verdict.raw_response = token;
      return verdict;
    }
    out << "Please answer 1 or 2: " << std::flush;
  }
  throw OracleError("interactive_compare: input stream closed");
}

namespace {

class SyntheticOracle final : public PairOracle {
 public:
  explicit SyntheticOracle(SyntheticOracleSpec spec) : spec_(std::move(spec)) {}
  Verdict compare(const Vector& y1, const Vector& y2, uint64_t seed) override {
    Rng rng(seed);
    return synthetic_compare(spec_, y1, y2, rng);
  }
  std::string backend_name() const override { return "synthetic"; }

 private:
  SyntheticOracleSpec spec_;
};

class LlmOracle final : public PairOracle {
 public:
  LlmOracle(LlmEndpointConfig cfg, PromptTemplate tmpl)
      : cfg_(std::move(cfg)), tmpl_(std::move(tmpl)) {}
  Verdict compare(const Vector& y1, const Vector& y2,
                  uint64_t /*seed*/) override {
    return llm_compare(cfg_, tmpl_, y1, y2);
  }
  std::string backend_name() const override { return "llm"; }

 private:
  LlmEndpointConfig cfg_;
  PromptTemplate tmpl_;
};

class InteractiveOracle final : public PairOracle {
 public:
  InteractiveOracle(PromptTemplate tmpl, std::istream& in, std::ostream& out)
      : tmpl_(std::move(tmpl)), in_(in), out_(out) {}
  Verdict compare(const Vector& y1, const Vector& y2,
                  uint64_t /*seed*/) override {
    return interactive_compare(tmpl_, y1, y2, in_, out_);
  }
  std::string backend_name() const override { return "interactive"; }

 private:
  PromptTemplate tmpl_;
  std::istream& in_;
  std::ostream& out_;
};

}  // namespace

std::unique_ptr<PairOracle> make_synthetic_oracle(SyntheticOracleSpec spec) {
  return std::make_unique<SyntheticOracle>(std::move(spec));
}

std::unique_ptr<PairOracle> make_llm_oracle(LlmEndpointConfig cfg,
                                            PromptTemplate tmpl) {
  return std::make_unique<LlmOracle>(std::move(cfg), std::move(tmpl));
}

std::unique_ptr<PairOracle> make_interactive_oracle(PromptTemplate tmpl,
                                                    std::istream& in,
                                                    std::ostream& out) {
  return std::make_unique<InteractiveOracle>(std::move(tmpl), in, out);
}

}  // namespace prefbed
