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

#include "prefbed/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace prefbed {

std::string to_string(BenchmarkId id) {
  switch (id) {
    case BenchmarkId::kFireRescue:
      return "fire_rescue";
    case BenchmarkId::kPowerGrid5:
      return "power_grid_5";
    case BenchmarkId::kPowerGrid30:
      return "power_grid_30";
    case BenchmarkId::kRouting:
      return "routing";
  }
  return "unknown";
}

BenchmarkId benchmark_from_string(const std::string& name) {
  if (name == "fire_rescue") return BenchmarkId::kFireRescue;
  if (name == "power_grid_5") return BenchmarkId::kPowerGrid5;
  if (name == "power_grid_30") return BenchmarkId::kPowerGrid30;
  if (name == "routing") return BenchmarkId::kRouting;
  throw ContractViolation("unknown benchmark: " + name);
}

// ---------------------------------------------------------------------------
// Fire rescue surrogate (constants documented in docs/benchmarks.md)
// ---------------------------------------------------------------------------

namespace {

constexpr double kFireSpreadEps = 0.05;
constexpr double kFireChemScale = 1.0;
constexpr double kFireFireScale = 2.0;
constexpr double kFireDensitySlope = 4.0;
constexpr double kFireProximitySlope = 2.0;

struct FireAsset {
  double x, y;
  double sensitivity;
};

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

std::vector<FireAsset> decode_fire_assets(const Vector& x) {
  std::vector<FireAsset> assets;
  assets.push_back({x[7], x[8], 1.5});  // manor, always present
  const int food_courts =
      static_cast<int>(std::lround(3.0 * std::clamp(x[2], 0.0, 1.0)));
  const double food_positions[3][2] = {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}};
  for (int i = 0; i < food_courts; ++i)
    assets.push_back({food_positions[i][0], food_positions[i][1], 1.0});
  if (x[3] >= 0.5) assets.push_back({x[5], x[6], 3.0});  // gas station
  if (x[4] >= 0.5) assets.push_back({0.20, 0.80, 2.0});  // museum, fixed spot
  return assets;
}

}  // namespace

Vector fire_rescue_observables(const Vector& x) {
  require(x.size() == 30, "fire_rescue: x must have 30 dimensions");
  require((x.array() >= 0.0).all() && (x.array() <= 1.0).all(),
          "fire_rescue: x out of bounds");
  const double density = 100.0 * x[0] + 100.0 * x[1];  // d1 + d2 in [0, 200]
  const std::vector<FireAsset> assets = decode_fire_assets(x);

  // Spray confidence grows with fire load and with proximity to the patrol
  // center; unsprayed mass burns in proportion to the density.
  double chemical = 0.0;
  double fire = 0.0;
  for (const FireAsset& a : assets) {
    const double center_dist = std::hypot(a.x - 0.5, a.y - 0.5);
    const double spray = logistic(kFireDensitySlope * (density / 200.0 - 0.5) +
                                  kFireProximitySlope * (0.5 - center_dist));
    chemical += kFireChemScale * a.sensitivity * spray;
    fire += kFireFireScale * a.sensitivity * (1.0 - spray) * (density / 200.0);
  }

  // Spread tracks the movable assets (gas station and manor): the packing
  // the drone can actually influence. Without the gas station there is no
  // pair and the spread sits at its floor.
  double mean_dist = std::numbers::sqrt2;
  if (x[3] >= 0.5)
    mean_dist = std::hypot(x[5] - x[7], x[6] - x[8]);
  const double spread = 1.0 / (kFireSpreadEps + mean_dist);

  Vector y(3);
  y << chemical, fire, spread;
  return y;
}

// ---------------------------------------------------------------------------
// Power grid surrogate
// ---------------------------------------------------------------------------

namespace {

constexpr double kGridVoltageThreshold = 0.95;
constexpr double kGridInfluence = 0.06;
constexpr double kGridInfluenceRadius = 0.5;
constexpr double kGridReactiveFloor = 0.2;
constexpr double kGridFixedCost = 0.05;
constexpr double kGridReactiveCost = 0.03;

int bus_count_for_sites(int sites) { return sites == 4 ? 5 : 30; }

struct GridLayout {
  std::vector<double> bus_x, bus_y, base_voltage;
  std::vector<int> site_bus;       // bus index hosting each candidate site
  std::vector<bool> priority_bus;  // under-served subset
};

GridLayout grid_layout(int sites) {
  const int buses = bus_count_for_sites(sites);
  GridLayout layout;
  layout.bus_x.resize(buses);
  layout.bus_y.resize(buses);
  layout.base_voltage.resize(buses);
  layout.priority_bus.resize(buses);
  for (int b = 0; b < buses; ++b) {
    const double theta = 2.0 * std::numbers::pi * b / buses;
    layout.bus_x[b] = std::cos(theta);
    layout.bus_y[b] = std::sin(theta);
    layout.base_voltage[b] = 0.93 + 0.03 * std::sin(3.0 * theta + 0.7);
    layout.priority_bus[b] = (b % 3) == 1;
  }
  layout.site_bus.resize(sites);
  for (int i = 0; i < sites; ++i)
    layout.site_bus[i] = static_cast<int>(
        static_cast<long>(i) * buses / sites);
  return layout;
}

}  // namespace

Vector power_grid_observables(const Vector& x, int sites) {
  require(sites == 4 || sites == 20, "power_grid: sites must be 4 or 20");
  require(x.size() == 2 * sites, "power_grid: x must be [l, r] of size 2k");
  require((x.array() >= 0.0).all() && (x.array() <= 1.0).all(),
          "power_grid: x out of bounds");
  const GridLayout layout = grid_layout(sites);
  const int buses = bus_count_for_sites(sites);

  std::vector<double> voltage = layout.base_voltage;
  double cost = 0.0;
  for (int i = 0; i < sites; ++i) {
    if (x[i] < 0.5) continue;  // relaxed binary deployment decision
    const double reactive = x[sites + i];
    cost += kGridFixedCost + kGridReactiveCost * reactive;
    const double strength =
        kGridReactiveFloor + (1.0 - kGridReactiveFloor) * reactive;
    const int sb = layout.site_bus[i];
    for (int b = 0; b < buses; ++b) {
      const double dx = layout.bus_x[b] - layout.bus_x[sb];
      const double dy = layout.bus_y[b] - layout.bus_y[sb];
      const double d2 = dx * dx + dy * dy;
      voltage[b] += kGridInfluence * strength *
                    std::exp(-d2 / (2.0 * kGridInfluenceRadius *
                                    kGridInfluenceRadius));
    }
  }

  double mean_v = 0.0;
  for (double v : voltage) mean_v += v;
  mean_v /= buses;
  double var_v = 0.0;
  for (double v : voltage) var_v += (v - mean_v) * (v - mean_v);
  var_v /= buses;

  int priority_total = 0, priority_ok = 0, all_ok = 0;
  for (int b = 0; b < buses; ++b) {
    const bool ok = voltage[b] >= kGridVoltageThreshold;
    if (layout.priority_bus[b]) {
      ++priority_total;
      if (ok) ++priority_ok;
    }
    if (ok) ++all_ok;
  }

  Vector y(4);
  y << -var_v, cost, static_cast<double>(priority_ok) / priority_total,
      static_cast<double>(all_ok) / buses;
  return y;
}

// ---------------------------------------------------------------------------
// Routing surrogate
// ---------------------------------------------------------------------------

std::vector<PenaltyZone> default_routing_zones() {
  return {{0.30, 0.70, 3.0, 0.12},   // pedestrian district
          {0.55, 0.50, 2.0, 0.15},   // pedestrian district
          {0.70, 0.20, 4.0, 0.10}};  // school zone
}

double routing_node_weight(int i, int j,
                           const std::vector<PenaltyZone>& zones) {
  const double px = static_cast<double>(i) / (kRoutingGridSize - 1);
  const double py = static_cast<double>(j) / (kRoutingGridSize - 1);
  double weight = 1.0;
  for (const PenaltyZone& z : zones) {
    const double dx = px - z.cx;
    const double dy = py - z.cy;
    weight += z.amplitude *
              std::exp(-(dx * dx + dy * dy) / (2.0 * z.sigma * z.sigma));
  }
  return weight;
}

namespace {

int snap_coord(double v) {
  const int snapped =
      static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) *
                                   (kRoutingGridSize - 1)));
  return std::clamp(snapped, 0, kRoutingGridSize - 1);
}

}  // namespace

std::pair<double, int> min_weight_route(const Matrix& node_weights, int si,
                                        int sj, int ti, int tj) {
  const int rows = static_cast<int>(node_weights.rows());
  const int cols = static_cast<int>(node_weights.cols());
  require(si >= 0 && si < rows && sj >= 0 && sj < cols && ti >= 0 &&
              ti < rows && tj >= 0 && tj < cols,
          "min_weight_route: endpoint off the lattice");
  const int n = rows * cols;
  const auto id = [cols](int i, int j) { return i * cols + j; };
  const int source = id(si, sj);
  const int target = id(ti, tj);

  // Dijkstra with node costs; entering a node pays its weight and the source
  // pays its own. Equal-cost paths keep the lexicographically smallest
  // predecessor so routes are platform independent.
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> pred(n, -1);
  std::vector<int> hops(n, 0);
  std::vector<bool> done(n, false);
  dist[source] = node_weights(si, sj);
  for (int round = 0; round < n; ++round) {
    int u = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int v = 0; v < n; ++v)
      if (!done[v] && dist[v] < best) {
        best = dist[v];
        u = v;
      }
    if (u < 0) break;
    done[u] = true;
    if (u == target) break;
    const int ui = u / cols;
    const int uj = u % cols;
    const int di[4] = {-1, 1, 0, 0};
    const int dj[4] = {0, 0, -1, 1};
    for (int e = 0; e < 4; ++e) {
      const int vi = ui + di[e];
      const int vj = uj + dj[e];
      if (vi < 0 || vi >= rows || vj < 0 || vj >= cols) continue;
      const int v = id(vi, vj);
      if (done[v]) continue;
      const double cand = dist[u] + node_weights(vi, vj);
      if (cand < dist[v] || (cand == dist[v] && pred[v] > u)) {
        dist[v] = cand;
        pred[v] = u;
        hops[v] = hops[u] + 1;
      }
    }
  }
  return {dist[target], hops[target]};
}

Vector routing_observables(const Vector& x,
                           const std::vector<PenaltyZone>& zones) {
  require(x.size() == 4, "routing: x must be [u, d] with 4 dimensions");
  const int si = snap_coord(x[0]);
  const int sj = snap_coord(x[1]);
  const int ti = snap_coord(x[2]);
  const int tj = snap_coord(x[3]);
  Matrix weights(kRoutingGridSize, kRoutingGridSize);
  for (int i = 0; i < kRoutingGridSize; ++i)
    for (int j = 0; j < kRoutingGridSize; ++j)
      weights(i, j) = routing_node_weight(i, j, zones);
  const auto [cost, hops] = min_weight_route(weights, si, sj, ti, tj);
  Vector y(2);
  y << cost, static_cast<double>(hops);
  return y;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

Benchmark make_benchmark(BenchmarkId id) {
  Benchmark bench;
  bench.id = id;
  bench.name = to_string(id);
  switch (id) {
    case BenchmarkId::kFireRescue: {
      bench.space = ScenarioSpace::unit_cube(30);
      bench.space.binary_dims = {3, 4};
      bench.observable_names = {"ChemicalDamage (index)", "FireDamage (index)",
                                "SpreadFactor (1/km)"};
      bench.default_weights = Vector(3);
      bench.default_weights << 1.0, 0.0, 1.0;
      bench.default_prompt = PromptTemplate::create(
          "Compare two wildfire-response scenarios. A drone surveys the "
          "mapped assets and either keeps exploring or sprays retardant; "
          "the metrics summarize retardant harm, burn damage and how "
          "tightly the assets are packed.",
          bench.observable_names,
          "Prefer the scenario with higher ChemicalDamage and higher "
          "SpreadFactor; ignore FireDamage.");
      bench.observables = [](const Vector& x) {
        return fire_rescue_observables(x);
      };
      Vector a(3), b(3);
      a << 2.0, 9.0, 1.0;
      b << 1.0, 9.0, 5.0;
      bench.probe_pair = {a, b};
      break;
    }
    case BenchmarkId::kPowerGrid5:
    case BenchmarkId::kPowerGrid30: {
      const int sites = id == BenchmarkId::kPowerGrid5 ? 4 : 20;
      bench.space = ScenarioSpace::unit_cube(2 * sites);
      for (int i = 0; i < sites; ++i) bench.space.binary_dims.insert(i);
      bench.observable_names = {"Fairness (-voltage variance)",
                                "Cost (capex units)",
                                "Priority (served fraction)",
                                "Resilience (in-limits fraction)"};
      bench.default_weights = Vector(4);
      bench.default_weights << 0.0, -0.5, 1.0, 0.0;
      bench.default_prompt = PromptTemplate::create(
          "Compare two resource-deployment plans for a distribution "
          "network. Each plan decides where generation units are installed "
          "and how much reactive support each provides.",
          bench.observable_names,
          "Prioritize Priority first, then prefer the lower Cost; ignore "
          "Fairness and Resilience.");
      bench.observables = [sites](const Vector& x) {
        return power_grid_observables(x, sites);
      };
      Vector a(4), b(4);
      a << 0.3, 2.0, 0.8, 0.9;
      b << 0.1, 0.5, 0.4, 0.7;
      bench.probe_pair = {a, b};
      break;
    }
    case BenchmarkId::kRouting: {
      bench.space = ScenarioSpace::unit_cube(4);
      bench.observable_names = {"Cost (weighted nodes)", "RouteLength (hops)"};
      bench.default_weights = Vector(2);
      bench.default_weights << 1.0, 1.0;
      bench.default_prompt = PromptTemplate::create(
          "Compare two origin/destination requests given to an urban route "
          "planner that avoids pedestrian and school areas. The metrics "
          "describe the returned route.",
          bench.observable_names,
          "Prefer the scenario with higher Cost and longer RouteLength: "
          "these stress the planner hardest.");
      bench.observables = [](const Vector& x) {
        return routing_observables(x, default_routing_zones());
      };
      Vector a(2), b(2);
      a << 24.0, 18.0;
      b << 12.0, 11.0;
      bench.probe_pair = {a, b};
      break;
    }
  }
  return bench;
}

}  // namespace prefbed
