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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "prefbed/acquisition.hpp"

using namespace prefbed;

namespace {

Vector scalar(double v) {
  Vector y(1);
  y << v;
  return y;
}

// Objective surrogate around a sharp bump at x = 0.3.
ObjectiveModel bump_objective(double noise) {
  const int n = 40;
  Matrix X(n, 1), Y(n, 1);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = static_cast<double>(i) / (n - 1);
    const double d = (X(i, 0) - 0.3) / 0.07;
    Y(i, 0) = std::exp(-d * d);
  }
  const ObjectiveDataset data =
      ObjectiveDataset::create(X, Y, Vector::Zero(1), Vector::Ones(1));
  FitOptions opt;
  opt.optimize = false;
  return ObjectiveModel::fit_exact(
      data,
      KernelSpec::isotropic(KernelFamily::kSquaredExponential, 1, 0.05, 1.0,
                            noise),
      opt);
}

// Preference model trained that larger observables are better.
PreferenceModel increasing_preference() {
  PreferenceDataset data;
  Rng rng(3);
  for (int i = 0; i < 24; ++i) {
    const double a = rng.uniform(0.0, 1.0);
    const double b = rng.uniform(0.0, 1.0);
    if (a == b) continue;
    data.add_observation(scalar(a), scalar(b), a > b ? 1 : 2);
  }
  LaplaceFitOptions opt;
  opt.select_hyperparameters = false;
  return PreferenceModel::fit_laplace(
      data,
      KernelSpec::isotropic(KernelFamily::kSquaredExponential, 1, 1.0, 1.0,
                            0.0),
      0.1, opt);
}

AcquisitionConfig small_cfg(AcquisitionMode mode) {
  AcquisitionConfig cfg;
  cfg.pool_size = 128;
  cfg.top_k = 8;
  cfg.mc_samples = 16;
  cfg.refine_steps = 8;
  cfg.mode = mode;
  return cfg;
}

}  // namespace

TEST_CASE("with no duels the utility term vanishes and ranking is MI only") {
  const ObjectiveModel obj = bump_objective(1e-2);
  const PreferenceModel pref = PreferenceModel::prior(
      KernelSpec::isotropic(KernelFamily::kSquaredExponential, 1, 1.0, 1.0,
                            0.0),
      0.1);
  const AcquisitionConfig cfg = small_cfg(AcquisitionMode::kFull);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const Vector x = scalar(rng.uniform());
    const ScoreTerms terms = single_score_terms(obj, pref, x, cfg, 7);
    CHECK(terms.utility == 0.0);  // zero-mean prior utility
    CHECK(single_score(obj, pref, x, cfg, 7) == terms.mi);
  }
}

TEST_CASE("zero objective uncertainty leaves only the utility term") {
  const ObjectiveModel obj = bump_objective(0.0);
  const PreferenceModel pref = increasing_preference();
  const AcquisitionConfig cfg = small_cfg(AcquisitionMode::kFull);
  // At a training input of a noise-free GP the predictive variance is zero:
  // MI1 = 0 and every sample equals the mean.
  const Vector x = scalar(12.0 / 39.0);
  const ScoreTerms terms = single_score_terms(obj, pref, x, cfg, 11);
  CHECK(terms.mi <= 1e-6);
  const auto [util_at_mean, var] = pref.predict_utility(obj.predict(x).mean);
  CHECK(terms.utility == doctest::Approx(util_at_mean).epsilon(1e-5));
}

TEST_CASE("full score dominates the preference-only score when MI1 > 0") {
  const ObjectiveModel obj = bump_objective(1e-2);
  const PreferenceModel pref = increasing_preference();
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const Vector x = scalar(rng.uniform());
    AcquisitionConfig full = small_cfg(AcquisitionMode::kFull);
    AcquisitionConfig pref_only = small_cfg(AcquisitionMode::kPrefOnly);
    const double f = single_score(obj, pref, x, full, 13);
    const double p = single_score(obj, pref, x, pref_only, 13);
    CHECK(f >= p);  // MI1 is non-negative
  }
}

TEST_CASE("pair score rejects identical candidates") {
  const ObjectiveModel obj = bump_objective(1e-2);
  const PreferenceModel pref = increasing_preference();
  const AcquisitionConfig cfg = small_cfg(AcquisitionMode::kFull);
  CHECK_THROWS_AS(pair_score(obj, pref, scalar(0.4), scalar(0.4), cfg, 1),
                  ContractViolation);
}

TEST_CASE("deterministic pair with no outcome uncertainty has zero pair MI") {
  const ObjectiveModel obj = bump_objective(0.0);
  // Degenerate preference posterior: enormous evidence pins the utilities.
  PreferenceDataset data;
  for (int r = 0; r < 40; ++r) data.add_observation(scalar(1.0), scalar(0.0), 1);
  LaplaceFitOptions lopt;
  lopt.select_hyperparameters = false;
  const PreferenceModel pref = PreferenceModel::fit_laplace(
      data,
      KernelSpec::isotropic(KernelFamily::kSquaredExponential, 1, 1.0, 1.0,
                            0.0),
      0.1, lopt);
  AcquisitionConfig cfg = small_cfg(AcquisitionMode::kFull);
  // Training inputs of the noise-free objective GP: zero predictive variance.
  const Vector x1 = scalar(12.0 / 39.0);
  const Vector x2 = scalar(1.0);
  const ScoreTerms pair = pair_score_terms(obj, pref, x1, x2, cfg, 3);
  const ScoreTerms s1 = single_score_terms(obj, pref, x1, cfg, 3);
  const ScoreTerms s2 = single_score_terms(obj, pref, x2, cfg, 3);
  const double pair_mi = pair.mi - s1.mi - s2.mi;
  CHECK(pair_mi <= 2e-2);  // outcome entropy is almost fully aleatoric
  CHECK(pair_mi >= -1e-9);
}

TEST_CASE("pair score is symmetric under argument swap") {
  const ObjectiveModel obj = bump_objective(1e-2);
  const PreferenceModel pref = increasing_preference();
  const AcquisitionConfig cfg = small_cfg(AcquisitionMode::kFull);
  Rng rng(17);
  for (int i = 0; i < 25; ++i) {
    const Vector a = scalar(rng.uniform());
    const Vector b = scalar(rng.uniform());
    if (a == b) continue;
    const double ab = pair_score(obj, pref, a, b, cfg, 23);
    const double ba = pair_score(obj, pref, b, a, cfg, 23);
    CHECK(std::abs(ab - ba) <= 1e-6);  // content-derived streams: exact
  }
}

TEST_CASE("mode bookkeeping: full equals MI terms plus utility terms") {
  const ObjectiveModel obj = bump_objective(1e-2);
  const PreferenceModel pref = increasing_preference();
  Rng rng(29);
  for (int i = 0; i < 50; ++i) {
    const Vector a = scalar(rng.uniform());
    const Vector b = scalar(rng.uniform());
    if (a == b) continue;
    AcquisitionConfig full = small_cfg(AcquisitionMode::kFull);
    AcquisitionConfig mi = small_cfg(AcquisitionMode::kMiOnly);
    AcquisitionConfig po = small_cfg(AcquisitionMode::kPrefOnly);
    const double f = pair_score(obj, pref, a, b, full, 31);
    const double m = pair_score(obj, pref, a, b, mi, 31);
    const double p = pair_score(obj, pref, a, b, po, 31);
    CHECK(f == m + p);  // exact term bookkeeping
    CHECK(m >= -1e-9);
    CHECK(f >= p);
    // Pairwise MI term obeys the binary-entropy cap.
    const ScoreTerms sa = single_score_terms(obj, pref, a, full, 31);
    const ScoreTerms sb = single_score_terms(obj, pref, b, full, 31);
    CHECK(m - sa.mi - sb.mi <= std::log(2.0) + 1e-9);
  }
}

TEST_CASE("random mode is reproducible and respects bounds") {
  ScenarioSpace space;
  space.lower = Vector(2);
  space.upper = Vector(2);
  space.lower << -1.0, 3.0;
  space.upper << 2.0, 4.5;
  AcquisitionConfig cfg = small_cfg(AcquisitionMode::kRandom);
  const PairProposal p1 = propose_pair(nullptr, nullptr, space, cfg, 99);
  const PairProposal p2 = propose_pair(nullptr, nullptr, space, cfg, 99);
  CHECK(p1.x1 == p2.x1);
  CHECK(p1.x2 == p2.x2);
  CHECK(p1.x1 != p1.x2);
  CHECK(space.contains(p1.x1));
  CHECK(space.contains(p1.x2));
}

TEST_CASE("proposals always satisfy the bounds") {
  const ObjectiveModel obj = bump_objective(1e-2);
  const PreferenceModel pref = increasing_preference();
  ScenarioSpace space = ScenarioSpace::unit_cube(1);
  for (auto mode : {AcquisitionMode::kFull, AcquisitionMode::kMiOnly,
                    AcquisitionMode::kPrefOnly}) {
    AcquisitionConfig cfg = small_cfg(mode);
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
      const PairProposal prop = propose_pair(&obj, &pref, space, cfg, seed);
      CHECK(space.contains(prop.x1));
      CHECK(space.contains(prop.x2));
      CHECK(prop.x1 != prop.x2);
    }
  }
}

TEST_CASE("planted optimum is found by the full acquisition") {
  const ObjectiveModel obj = bump_objective(1e-4);
  const PreferenceModel pref = increasing_preference();
  ScenarioSpace space = ScenarioSpace::unit_cube(1);
  AcquisitionConfig cfg = small_cfg(AcquisitionMode::kFull);
  cfg.pool_size = 256;
  int hits = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const PairProposal prop = propose_pair(&obj, &pref, space, cfg, seed);
    const double d1 = std::abs(prop.x1[0] - 0.3);
    const double d2 = std::abs(prop.x2[0] - 0.3);
    if (std::min(d1, d2) <= 0.1) ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("hill climbing never lowers the winning pair score") {
  const ObjectiveModel obj = bump_objective(1e-2);
  const PreferenceModel pref = increasing_preference();
  ScenarioSpace space = ScenarioSpace::unit_cube(1);
  for (uint64_t seed = 0; seed < 4; ++seed) {
    AcquisitionConfig no_refine = small_cfg(AcquisitionMode::kFull);
    no_refine.refine_steps = 0;
    AcquisitionConfig refined = small_cfg(AcquisitionMode::kFull);
    refined.refine_steps = 20;
    const PairProposal base = propose_pair(&obj, &pref, space, no_refine, seed);
    const PairProposal better = propose_pair(&obj, &pref, space, refined, seed);
    CHECK(better.score >= base.score - 1e-12);
  }
}

TEST_CASE("scenario-space utility search prefers the high-utility region") {
  // Utility over x itself increases with x; the search should move right.
  PreferenceDataset duels;
  Rng rng(7);
  for (int i = 0; i < 30; ++i) {
    const double a = rng.uniform(0.0, 1.0);
    const double b = rng.uniform(0.0, 1.0);
    if (a == b) continue;
    duels.add_observation(scalar(a), scalar(b), a > b ? 1 : 2);
  }
  LaplaceFitOptions lopt;
  lopt.select_hyperparameters = false;
  const PreferenceModel pref = PreferenceModel::fit_laplace(
      duels,
      KernelSpec::isotropic(KernelFamily::kSquaredExponential, 1, 1.0, 1.0,
                            0.0),
      0.1, lopt);
  ScenarioSpace space = ScenarioSpace::unit_cube(1);
  const AcquisitionConfig cfg = small_cfg(AcquisitionMode::kFull);
  int high = 0;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const PairProposal prop =
        propose_pair_scenario_utility(pref, space, cfg, seed);
    if (std::max(prop.x1[0], prop.x2[0]) > 0.7) ++high;
    CHECK(space.contains(prop.x1));
    CHECK(space.contains(prop.x2));
  }
  CHECK(high >= 4);
}
