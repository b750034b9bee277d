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

#ifndef PREFBED_SCENARIO_HPP_
#define PREFBED_SCENARIO_HPP_

#include <set>

#include "prefbed/common.hpp"
#include "prefbed/rng.hpp"

namespace prefbed {

// The design domain: a box, with a subset of dimensions that are conceptually
// binary but relaxed to [0, 1] (consumers threshold them at 0.5).
struct ScenarioSpace {
  Vector lower;
  Vector upper;
  std::set<int> binary_dims;

  static ScenarioSpace unit_cube(int dim);

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  bool contains(const Vector& x) const;
  Vector clip(const Vector& x) const;
  Vector sample_uniform(Rng& rng) const;

  // Affine map of x into [0,1]^d and back.
  Vector to_unit(const Vector& x) const;
  Vector from_unit(const Vector& u) const;
};

}  // namespace prefbed

#endif  // PREFBED_SCENARIO_HPP_
