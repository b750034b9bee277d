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

#ifndef PREFBED_METRICS_HPP_
#define PREFBED_METRICS_HPP_

#include <vector>

#include "prefbed/oracle.hpp"
#include "prefbed/rng.hpp"

namespace prefbed {

// Linear evaluation utility w.y, used for scoring only (never trained on).
struct MetricWeights {
  Vector weights;
};

double preference_score(const MetricWeights& w, const Vector& y);

// Sum over dimensions of the sample standard deviation (n-1 divisor) of the
// collected scenarios; measures how widely a method explored.
double coverage_score(const std::vector<Vector>& scenarios);

// Quantile function of the standard normal (Acklam's rational approximation
// plus one Halley refinement).
double normal_quantile(double p);

struct SkillRating {
  double mu = 25.0;
  double sigma = 25.0 / 3.0;
};

struct TrueSkillParams {
  double mu0 = 25.0;
  double sigma0 = 25.0 / 3.0;
  double beta = 25.0 / 6.0;    // sigma0 / 2
  double tau = 25.0 / 300.0;   // sigma0 / 100
  double draw_probability = 0.10;
};

// Two-player win/lose update. tau^2 enters both variances first; the draw
// margin derived from draw_probability shifts the truncation point:
//   c^2 = 2 beta^2 + sigma_w^2 + sigma_l^2
//   mu_w += sigma_w^2 / c * v((mu_w-mu_l)/c, eps/c)    (loser mirrored)
//   sigma^2 *= 1 - sigma^2 / c^2 * w(., .)
std::pair<SkillRating, SkillRating> trueskill_update(
    const SkillRating& winner, const SkillRating& loser,
    const TrueSkillParams& params = {});

// Appendix-style ranking protocol: uniformly downsample to at most
// max_points (seeded), play every unordered pair once in a seeded shuffled
// order, resolve each game with the oracle, update sequentially. Ratings are
// returned aligned to `points`; rows left out of the downsample keep the
// prior rating.
std::vector<SkillRating> rank_candidates(const std::vector<Vector>& points,
                                         PairOracle& oracle, int max_points,
                                         Rng& rng,
                                         const TrueSkillParams& params = {});

}  // namespace prefbed

#endif  // PREFBED_METRICS_HPP_
