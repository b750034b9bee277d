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

#include "prefbed/scenario.hpp"

namespace prefbed {

ScenarioSpace ScenarioSpace::unit_cube(int dim) {
  ScenarioSpace space;
  space.lower = Vector::Zero(dim);
  space.upper = Vector::Ones(dim);
  return space;
}

void ScenarioSpace::validate() const {
  require(lower.size() == upper.size() && lower.size() > 0,
          "ScenarioSpace: bounds size mismatch");
  require((lower.array() < upper.array()).all(),
          "ScenarioSpace: lower must be < upper elementwise");
  for (int d : binary_dims)
    require(d >= 0 && d < dim(), "ScenarioSpace: binary dim out of range");
}

bool ScenarioSpace::contains(const Vector& x) const {
  if (x.size() != lower.size()) return false;
  return (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

Vector ScenarioSpace::clip(const Vector& x) const {
  require(x.size() == lower.size(), "ScenarioSpace::clip: dimension mismatch");
  return x.cwiseMax(lower).cwiseMin(upper);
}

Vector ScenarioSpace::sample_uniform(Rng& rng) const {
  Vector x(dim());
  for (int i = 0; i < dim(); ++i) x[i] = rng.uniform(lower[i], upper[i]);
  return x;
}

Vector ScenarioSpace::to_unit(const Vector& x) const {
  require(x.size() == lower.size(), "ScenarioSpace::to_unit: dimension mismatch");
  return (x - lower).cwiseQuotient(upper - lower);
}

Vector ScenarioSpace::from_unit(const Vector& u) const {
  require(u.size() == lower.size(),
          "ScenarioSpace::from_unit: dimension mismatch");
  return lower + u.cwiseProduct(upper - lower);
}

}  // namespace prefbed
