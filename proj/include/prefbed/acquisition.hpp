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

#ifndef PREFBED_ACQUISITION_HPP_
#define PREFBED_ACQUISITION_HPP_

#include <string>
#include <utility>

#include "prefbed/objective_gp.hpp"
#include "prefbed/preference_gp.hpp"
#include "prefbed/scenario.hpp"

namespace prefbed {

enum class AcquisitionMode { kFull, kMiOnly, kPrefOnly, kRandom };

std::string to_string(AcquisitionMode mode);
AcquisitionMode acquisition_mode_from_string(const std::string& name);

struct AcquisitionConfig {
  int pool_size = 512;
  int top_k = 16;
  int mc_samples = 32;  // S: observable draws per candidate
  AcquisitionMode mode = AcquisitionMode::kFull;
  int refine_steps = 20;
  int bald_samples = 64;  // inner draws for the pairwise MI estimate

  void validate() const;
};

// Candidate scores decompose into an information part and a utility part;
// every mode is a selection over the same two sums, so
// full == mi_terms + utility_terms holds exactly.
struct ScoreTerms {
  double mi = 0.0;
  double utility = 0.0;

  double combined(AcquisitionMode mode) const;
};

// Candidate sampling streams are derived from the candidate's content
// (hash of its coordinates), never from its argument slot, which makes every
// score swap-symmetric and independent of evaluation order.
ScoreTerms single_score_terms(const ObjectiveModel& obj,
                              const PreferenceModel& pref, const Vector& x,
                              const AcquisitionConfig& cfg, uint64_t seed);

double single_score(const ObjectiveModel& obj, const PreferenceModel& pref,
                    const Vector& x, const AcquisitionConfig& cfg,
                    uint64_t seed);

ScoreTerms pair_score_terms(const ObjectiveModel& obj,
                            const PreferenceModel& pref, const Vector& x1,
                            const Vector& x2, const AcquisitionConfig& cfg,
                            uint64_t seed);

double pair_score(const ObjectiveModel& obj, const PreferenceModel& pref,
                  const Vector& x1, const Vector& x2,
                  const AcquisitionConfig& cfg, uint64_t seed);

struct PairProposal {
  Vector x1, x2;
  double score = 0.0;
};

// Three-stage search: rank a uniform candidate pool by single score, score
// all pairs among the top k, then coordinate-perturbation hill climbing on
// the winning pair (improvements only). Random mode returns two uniform
// draws. obj/pref may be null only in Random mode.
PairProposal propose_pair(const ObjectiveModel* obj,
                          const PreferenceModel* pref,
                          const ScenarioSpace& space,
                          const AcquisitionConfig& cfg, uint64_t seed);

// Scenario-space search for the single-model baseline: the preference GP
// lives directly on x, candidates rank by predicted utility, and pairs add
// the pairwise outcome information term.
PairProposal propose_pair_scenario_utility(const PreferenceModel& pref,
                                           const ScenarioSpace& space,
                                           const AcquisitionConfig& cfg,
                                           uint64_t seed);

}  // namespace prefbed

#endif  // PREFBED_ACQUISITION_HPP_
