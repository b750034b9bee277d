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

#include "prefbed/acquisition.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

namespace prefbed {

namespace {
constexpr uint64_t kTagPool = 0xa001;
constexpr uint64_t kTagRandom = 0xa002;
constexpr uint64_t kTagRefine = 0xa003;
constexpr uint64_t kTagSamples = 0xa004;
constexpr uint64_t kTagBald = 0xa005;
}  // namespace

std::string to_string(AcquisitionMode mode) {
  switch (mode) {
    case AcquisitionMode::kFull:
      return "full";
    case AcquisitionMode::kMiOnly:
      return "mi_only";
    case AcquisitionMode::kPrefOnly:
      return "pref_only";
    case AcquisitionMode::kRandom:
      return "random";
  }
  return "unknown";
}

AcquisitionMode acquisition_mode_from_string(const std::string& name) {
  if (name == "full") return AcquisitionMode::kFull;
  if (name == "mi_only") return AcquisitionMode::kMiOnly;
  if (name == "pref_only") return AcquisitionMode::kPrefOnly;
  if (name == "random") return AcquisitionMode::kRandom;
  throw ContractViolation("unknown acquisition mode: " + name);
}

void AcquisitionConfig::validate() const {
  require(pool_size >= 2, "AcquisitionConfig: pool_size must be >= 2");
  require(top_k >= 2 && top_k <= pool_size,
          "AcquisitionConfig: need 2 <= top_k <= pool_size");
  require(mc_samples >= 1, "AcquisitionConfig: mc_samples must be >= 1");
  require(refine_steps >= 0, "AcquisitionConfig: refine_steps must be >= 0");
  require(bald_samples >= 2, "AcquisitionConfig: bald_samples must be >= 2");
}

double ScoreTerms::combined(AcquisitionMode mode) const {
  switch (mode) {
    case AcquisitionMode::kFull:
      return mi + utility;
    case AcquisitionMode::kMiOnly:
      return mi;
    case AcquisitionMode::kPrefOnly:
      return utility;
    case AcquisitionMode::kRandom:
      return 0.0;
  }
  return 0.0;
}

namespace {

// S observable draws for candidate x, stacked one per row. The stream is
// derived from the candidate's content so scores do not depend on argument
// slots or evaluation order.
Matrix draw_candidate_samples(const ObjectiveModel& obj, const Vector& x,
                              int count, uint64_t seed) {
  Rng rng(derive_seed(seed, kTagSamples, hash_vector(x)));
  const std::vector<Vector> samples = obj.sample_observables(x, count, rng);
  Matrix ys(count, samples[0].size());
  for (int s = 0; s < count; ++s) ys.row(s) = samples[s].transpose();
  return ys;
}

struct CandidateState {
  ScoreTerms terms;
  Matrix samples;  // S x d_y
};

CandidateState candidate_state(const ObjectiveModel& obj,
                               const PreferenceModel& pref, const Vector& x,
                               const AcquisitionConfig& cfg, uint64_t seed) {
  CandidateState state;
  state.terms.mi = obj.info_gain(x);
  state.samples = draw_candidate_samples(obj, x, cfg.mc_samples, seed);
  state.terms.utility = pref.utility_means(state.samples).mean();
  return state;
}

// (1/S) sum_s MI over the matched sample pairing. The generator seed is
// symmetric in the two candidates.
double pairwise_mi(const PreferenceModel& pref, const Vector& x1,
                   const Matrix& samples1, const Vector& x2,
                   const Matrix& samples2, const AcquisitionConfig& cfg,
                   uint64_t seed) {
  const PreferenceModel::Prepared prep1 = pref.prepare(samples1);
  const PreferenceModel::Prepared prep2 = pref.prepare(samples2);
  Rng rng(derive_seed(seed, kTagBald, hash_vector(x1) ^ hash_vector(x2)));
  double total = 0.0;
  for (int s = 0; s < cfg.mc_samples; ++s)
    total += bald_binary_mi(pref.joint_from_prepared(prep1, s, prep2, s),
                            pref.lambda(), cfg.bald_samples, rng);
  return total / cfg.mc_samples;
}

}  // namespace

ScoreTerms single_score_terms(const ObjectiveModel& obj,
                              const PreferenceModel& pref, const Vector& x,
                              const AcquisitionConfig& cfg, uint64_t seed) {
  cfg.validate();
  return candidate_state(obj, pref, x, cfg, seed).terms;
}

double single_score(const ObjectiveModel& obj, const PreferenceModel& pref,
                    const Vector& x, const AcquisitionConfig& cfg,
                    uint64_t seed) {
  return single_score_terms(obj, pref, x, cfg, seed).combined(cfg.mode);
}

ScoreTerms pair_score_terms(const ObjectiveModel& obj,
                            const PreferenceModel& pref, const Vector& x1,
                            const Vector& x2, const AcquisitionConfig& cfg,
                            uint64_t seed) {
  cfg.validate();
  require(x1 != x2, "pair_score: candidates must differ");
  const CandidateState s1 = candidate_state(obj, pref, x1, cfg, seed);
  const CandidateState s2 = candidate_state(obj, pref, x2, cfg, seed);
  ScoreTerms terms;
  terms.mi = s1.terms.mi + s2.terms.mi +
             pairwise_mi(pref, x1, s1.samples, x2, s2.samples, cfg, seed);
  terms.utility = s1.terms.utility + s2.terms.utility;
  return terms;
}

double pair_score(const ObjectiveModel& obj, const PreferenceModel& pref,
                  const Vector& x1, const Vector& x2,
                  const AcquisitionConfig& cfg, uint64_t seed) {
  return pair_score_terms(obj, pref, x1, x2, cfg, seed).combined(cfg.mode);
}

namespace {

std::vector<int> rank_descending(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[a] > scores[b];  // stable: index breaks ties
  });
  return order;
}

PairProposal random_pair(const ScenarioSpace& space, uint64_t seed) {
  Rng rng(derive_seed(seed, kTagRandom));
  PairProposal proposal;
  proposal.x1 = space.sample_uniform(rng);
  do {
    proposal.x2 = space.sample_uniform(rng);
  } while (proposal.x2 == proposal.x1);
  return proposal;
}

// Shared two-stage + refinement skeleton. score_pair(x1, x2) must be
// deterministic for a given pair.
template <typename SingleFn, typename PairFn>
PairProposal staged_search(const ScenarioSpace& space,
                           const AcquisitionConfig& cfg, uint64_t seed,
                           SingleFn&& single_fn, PairFn&& pair_fn) {
  Rng pool_rng(derive_seed(seed, kTagPool));
  std::vector<Vector> pool;
  pool.reserve(cfg.pool_size);
  for (int i = 0; i < cfg.pool_size; ++i)
    pool.push_back(space.sample_uniform(pool_rng));

  std::vector<double> scores(pool.size());
  for (size_t i = 0; i < pool.size(); ++i) scores[i] = single_fn(pool[i]);
  const std::vector<int> order = rank_descending(scores);
  const int k = std::min<int>(cfg.top_k, static_cast<int>(pool.size()));

  PairProposal best;
  bool have_best = false;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      const Vector& a = pool[order[i]];
      const Vector& b = pool[order[j]];
      if (a == b) continue;
      const double score = pair_fn(a, b);
      if (!have_best || score > best.score) {
        best = {a, b, score};
        have_best = true;
      }
    }
  if (!have_best) return random_pair(space, seed);

  // Local refinement: one coordinate of one member per step, both
  // directions probed, improvements only, so the refined score can never
  // drop below the stage-2 winner. The step magnitude adapts to the
  // success rate.
  Rng refine_rng(derive_seed(seed, kTagRefine));
  const Vector range = space.upper - space.lower;
  double magnitude[2] = {0.15, 0.15};
  for (int step = 0; step < cfg.refine_steps; ++step) {
    for (int member = 0; member < 2; ++member) {
      const int dim = static_cast<int>(refine_rng.uniform_int(space.dim()));
      const double delta =
          magnitude[member] * range[dim] * std::abs(refine_rng.normal());
      const Vector& other = member == 0 ? best.x2 : best.x1;
      bool improved = false;
      for (double sign : {1.0, -1.0}) {
        Vector cand = member == 0 ? best.x1 : best.x2;
        cand[dim] += sign * delta;
        cand = space.clip(cand);
        if (cand == other) continue;
        const double score =
            member == 0 ? pair_fn(cand, best.x2) : pair_fn(best.x1, cand);
        if (score > best.score) {
          (member == 0 ? best.x1 : best.x2) = cand;
          best.score = score;
          improved = true;
        }
      }
      magnitude[member] = improved ? std::min(0.5, magnitude[member] * 1.4)
                                   : std::max(0.02, magnitude[member] * 0.8);
    }
  }
  return best;
}

}  // namespace

PairProposal propose_pair(const ObjectiveModel* obj,
                          const PreferenceModel* pref,
                          const ScenarioSpace& space,
                          const AcquisitionConfig& cfg, uint64_t seed) {
  cfg.validate();
  space.validate();
  if (cfg.mode == AcquisitionMode::kRandom) return random_pair(space, seed);
  require(obj != nullptr && pref != nullptr,
          "propose_pair: models required outside Random mode");

  // Candidate states are memoized by value so stage 2 and the refinement
  // reuse them; scores still match the public single/pair functions because
  // all streams are content-derived. deque: references must survive growth.
  std::deque<std::pair<Vector, CandidateState>> memo;
  const auto state_of = [&](const Vector& x) -> const CandidateState& {
    for (const auto& entry : memo)
      if (entry.first == x) return entry.second;
    memo.emplace_back(x, candidate_state(*obj, *pref, x, cfg, seed));
    return memo.back().second;
  };

  return staged_search(
      space, cfg, seed,
      [&](const Vector& x) {
        return candidate_state(*obj, *pref, x, cfg, seed)
            .terms.combined(cfg.mode);
      },
      [&](const Vector& a, const Vector& b) {
        const CandidateState& sa = state_of(a);
        const CandidateState& sb = state_of(b);
        ScoreTerms terms;
        terms.mi = sa.terms.mi + sb.terms.mi +
                   pairwise_mi(*pref, a, sa.samples, b, sb.samples, cfg, seed);
        terms.utility = sa.terms.utility + sb.terms.utility;
        return terms.combined(cfg.mode);
      });
}

PairProposal propose_pair_scenario_utility(const PreferenceModel& pref,
                                           const ScenarioSpace& space,
                                           const AcquisitionConfig& cfg,
                                           uint64_t seed) {
  cfg.validate();
  space.validate();
  // Pool search only: the single-model baseline ranks candidates by
  // predicted utility and scores top pairs; it has no local refinement.
  AcquisitionConfig pool_only = cfg;
  pool_only.refine_steps = 0;
  return staged_search(
      space, pool_only, seed,
      [&](const Vector& x) { return pref.predict_utility(x).first; },
      [&](const Vector& a, const Vector& b) {
        Matrix ma = a.transpose();
        Matrix mb = b.transpose();
        const auto prep_a = pref.prepare(ma);
        const auto prep_b = pref.prepare(mb);
        Rng rng(
            derive_seed(seed, kTagBald, hash_vector(a) ^ hash_vector(b)));
        const double mi =
            bald_binary_mi(pref.joint_from_prepared(prep_a, 0, prep_b, 0),
                           pref.lambda(), cfg.bald_samples, rng);
        return prep_a.means[0] + prep_b.means[0] + mi;
      });
}

}  // namespace prefbed
