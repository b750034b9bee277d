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

#ifndef PREFBED_ORACLE_HPP_
#define PREFBED_ORACLE_HPP_

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prefbed/common.hpp"
#include "prefbed/rng.hpp"

namespace prefbed {

// A pairwise comparison outcome. choice 1 means the first candidate was
// preferred.
struct Verdict {
  int choice = 1;
  std::optional<std::string> raw_response;
  std::optional<double> latency_ms;
};

// Three-part comparison prompt: task context, named metric values for both
// candidates, and the judging criteria, followed by a reply instruction.
struct PromptTemplate {
  std::string task_description;
  std::vector<std::string> objective_names;  // labels with units
  std::string criteria;
  std::string response_instruction =
      "Reply with exactly one character: 1 if Scenario 1 is preferred, "
      "2 if Scenario 2 is preferred.";

  static PromptTemplate create(std::string task,
                               std::vector<std::string> names,
                               std::string criteria);
};

// Renders the comparison for (y1, y2); metric values at 4 significant digits.
std::string build_prompt(const PromptTemplate& tmpl, const Vector& y1,
                         const Vector& y2);

// Ground-truth latent utility w.y. lambda_true = 0 gives the deterministic
// comparator (ties by fair coin); otherwise verdicts are probit-noisy.
struct SyntheticOracleSpec {
  Vector weights;
  double lambda_true = 0.0;
};

Verdict synthetic_compare(const SyntheticOracleSpec& spec, const Vector& y1,
                          const Vector& y2, Rng& rng);

// Console-driven comparison: prints the rendered prompt, accepts "1" or "2",
// re-prompts on anything else, and fails on end of input.
Verdict interactive_compare(const PromptTemplate& tmpl, const Vector& y1,
                            const Vector& y2, std::istream& in,
                            std::ostream& out);

// Chat-completion endpoint in the generic JSON shape: {model, temperature,
// messages:[{role:"user", content}]}. The bearer token is read from the
// named environment variable: no credential ever sits in a config file.
struct LlmEndpointConfig {
  std::string url;  // scheme://host[:port]/path
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::string api_key_env = "PREFBED_API_KEY";
  int max_attempts = 3;
  std::vector<double> backoff_s = {0.5, 1.0, 2.0};
};

// One comparison through the endpoint. The reply must contain a standalone
// "1" or "2" (not part of a longer token); absence is always an error after
// the retry budget, never a default verdict.
Verdict llm_compare(const LlmEndpointConfig& cfg, const PromptTemplate& tmpl,
                    const Vector& y1, const Vector& y2);

// Extraction rule shared with tests: first standalone 1/2 token, or nullopt.
std::optional<int> parse_verdict_token(const std::string& reply);

// Backend-erased oracle used by the runner. `seed` feeds the synthetic
// backend's draws; other backends ignore it.
class PairOracle {
 public:
  virtual ~PairOracle() = default;
  virtual Verdict compare(const Vector& y1, const Vector& y2,
                          uint64_t seed) = 0;
  virtual std::string backend_name() const = 0;
};

std::unique_ptr<PairOracle> make_synthetic_oracle(SyntheticOracleSpec spec);
std::unique_ptr<PairOracle> make_llm_oracle(LlmEndpointConfig cfg,
                                            PromptTemplate tmpl);
std::unique_ptr<PairOracle> make_interactive_oracle(PromptTemplate tmpl,
                                                    std::istream& in,
                                                    std::ostream& out);

}  // namespace prefbed

#endif  // PREFBED_ORACLE_HPP_
