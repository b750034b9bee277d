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

#ifndef PREFBED_BENCHMARKS_HPP_
#define PREFBED_BENCHMARKS_HPP_

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "prefbed/oracle.hpp"
#include "prefbed/scenario.hpp"

namespace prefbed {

enum class BenchmarkId { kFireRescue, kPowerGrid5, kPowerGrid30, kRouting };

std::string to_string(BenchmarkId id);
BenchmarkId benchmark_from_string(const std::string& name);

// A deterministic analytic environment: a pure, total map from scenarios to
// observables. Every constant is listed in docs/benchmarks.md.
struct Benchmark {
  BenchmarkId id;
  std::string name;
  ScenarioSpace space;
  std::vector<std::string> observable_names;
  Vector default_weights;  // evaluation utility w.y
  PromptTemplate default_prompt;
  std::function<Vector(const Vector&)> observables;
  std::pair<Vector, Vector> probe_pair;  // fixed comparison for oracle tests
};

Benchmark make_benchmark(BenchmarkId id);

// Wildfire response surrogate on [0,1]^30. Only dimensions 0..8 are read:
// tree densities, food-court level, gas-station/museum presence and the
// movable asset coordinates. y = (chemical damage, fire damage, spread).
Vector fire_rescue_observables(const Vector& x);

// Resource-deployment surrogate with k candidate sites on a ring of buses;
// x = [l, r] in [0,1]^{2k}, l thresholded at 0.5 into deployment decisions.
// y = (fairness, cost, priority coverage, resilience).
Vector power_grid_observables(const Vector& x, int sites);

struct PenaltyZone {
  double cx, cy;      // field center on the unit map
  double amplitude;   // added node weight at the center
  double sigma;       // Gaussian radius
};

// Default pedestrian/school penalty fields for the routing surrogate.
std::vector<PenaltyZone> default_routing_zones();

// Minimum-weight route between the grid nodes nearest to u and d on a
// G x G lattice (G = 20); node weights are 1 plus the penalty fields.
// y = (sum of node weights along the route, hop count).
Vector routing_observables(const Vector& x,
                           const std::vector<PenaltyZone>& zones);

// Routing node weight at lattice node (i, j); exposed for tests.
double routing_node_weight(int i, int j, const std::vector<PenaltyZone>& zones);
constexpr int kRoutingGridSize = 20;

// Minimum-weight 4-connected route between two lattice nodes of an
// arbitrary node-weight matrix. The route pays every node it visits,
// including both endpoints; equal-cost paths keep the lexicographically
// smallest predecessor. Returns (total node weight, hop count).
std::pair<double, int> min_weight_route(const Matrix& node_weights, int si,
                                        int sj, int ti, int tj);

}  // namespace prefbed

#endif  // PREFBED_BENCHMARKS_HPP_
