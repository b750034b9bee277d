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

#include "prefbed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "prefbed/preference_gp.hpp"  // normal_cdf / normal_pdf

namespace prefbed {

double preference_score(const MetricWeights& w, const Vector& y) {
  require(w.weights.size() == y.size(), "preference_score: dimension mismatch");
  require(w.weights.allFinite(), "preference_score: weights must be finite");
  return w.weights.dot(y);
}

double coverage_score(const std::vector<Vector>& scenarios) {
  require(scenarios.size() >= 2, "coverage_score: need at least two scenarios");
  const Eigen::Index d = scenarios[0].size();
  const double n = static_cast<double>(scenarios.size());
  double total = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const Vector& x : scenarios) mean += x[j];
    mean /= n;
    double ss = 0.0;
    for (const Vector& x : scenarios) ss += (x[j] - mean) * (x[j] - mean);
    total += std::sqrt(ss / (n - 1.0));
  }
  return total;
}

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must be in (0,1)");
  // Acklam's approximation.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the exact cdf.
  const double e = normal_cdf(x) - p;
  const double u = e / normal_pdf(x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

std::pair<SkillRating, SkillRating> trueskill_update(
    const SkillRating& winner, const SkillRating& loser,
    const TrueSkillParams& params) {
  require(winner.sigma > 0.0 && loser.sigma > 0.0,
          "trueskill_update: sigma must be positive");
  const double var_w = winner.sigma * winner.sigma + params.tau * params.tau;
  const double var_l = loser.sigma * loser.sigma + params.tau * params.tau;
  const double c2 = 2.0 * params.beta * params.beta + var_w + var_l;
  const double c = std::sqrt(c2);
  const double eps = normal_quantile(0.5 * (params.draw_probability + 1.0)) *
                     std::numbers::sqrt2 * params.beta;
  const double t = (winner.mu - loser.mu) / c;
  const double arg = t - eps / c;
  const double v = normal_pdf(arg) / normal_cdf(arg);
  const double w = v * (v + arg);
  SkillRating new_w, new_l;
  new_w.mu = winner.mu + var_w / c * v;
  new_l.mu = loser.mu - var_l / c * v;
  new_w.sigma = std::sqrt(var_w * std::max(1e-12, 1.0 - var_w / c2 * w));
  new_l.sigma = std::sqrt(var_l * std::max(1e-12, 1.0 - var_l / c2 * w));
  return {new_w, new_l};
}

std::vector<SkillRating> rank_candidates(const std::vector<Vector>& points,
                                         PairOracle& oracle, int max_points,
                                         Rng& rng,
                                         const TrueSkillParams& params) {
  require(max_points >= 2, "rank_candidates: max_points must be >= 2");
  require(points.size() >= 2, "rank_candidates: need at least two points");
  const int n = static_cast<int>(points.size());

  // Seeded uniform downsample: Fisher-Yates prefix.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const int keep = std::min(max_points, n);
  for (int i = 0; i < keep; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<int> picked(order.begin(), order.begin() + keep);
  std::sort(picked.begin(), picked.end());

  std::vector<std::pair<int, int>> games;
  for (int i = 0; i < keep; ++i)
    for (int j = i + 1; j < keep; ++j)
      games.emplace_back(picked[i], picked[j]);
  for (size_t i = games.size(); i > 1; --i)
    std::swap(games[i - 1], games[rng.uniform_int(i)]);

  std::vector<SkillRating> ratings(n, SkillRating{params.mu0, params.sigma0});
  for (const auto& [a, b] : games) {
    const Verdict verdict = oracle.compare(points[a], points[b],
                                           rng.next_u64());
    const int win = verdict.choice == 1 ? a : b;
    const int lose = verdict.choice == 1 ? b : a;
    const auto [rw, rl] = trueskill_update(ratings[win], ratings[lose], params);
    ratings[win] = rw;
    ratings[lose] = rl;
  }
  return ratings;
}

}  // namespace prefbed
