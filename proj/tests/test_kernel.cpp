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
#include "prefbed/kernel.hpp"
#include "prefbed/rng.hpp"

using namespace prefbed;

namespace {

Matrix random_inputs(int n, int d, Rng& rng) {
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.uniform(-2.0, 2.0);
  return x;
}

}  // namespace

TEST_CASE("kernel_eval at zero distance returns the signal variance") {
  for (auto family :
       {KernelFamily::kSquaredExponential, KernelFamily::kMatern52}) {
    const KernelSpec spec = KernelSpec::isotropic(family, 3, 0.7, 2.5, 0.1);
    Vector x(3);
    x << 0.3, -1.0, 4.2;
    CHECK(kernel_eval(spec, x, x) == doctest::Approx(2.5).epsilon(1e-14));
  }
}

TEST_CASE("squared exponential matches the hand-evaluated closed form") {
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 2, 1.0, 1.0, 0.0);
  Vector x1 = Vector::Zero(2);
  Vector x2(2);
  x2 << std::sqrt(2.0), 0.0;
  // exp(-||x1-x2||^2 / (2 l^2)) = exp(-1)
  CHECK(kernel_eval(spec, x1, x2) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(kernel_eval(spec, x1, x2) == doctest::Approx(0.36788).epsilon(1e-4));
}

TEST_CASE("kernel_eval is symmetric bit-for-bit") {
  Rng rng(7);
  for (auto family :
       {KernelFamily::kSquaredExponential, KernelFamily::kMatern52}) {
    KernelSpec spec = KernelSpec::isotropic(family, 4, 1.0, 1.7, 0.0);
    for (int i = 0; i < 4; ++i) spec.lengthscales[i] = rng.uniform(0.2, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
      const Matrix x = random_inputs(2, 4, rng);
      const double ab = kernel_eval(spec, x.row(0).transpose(),
                                    x.row(1).transpose());
      const double ba = kernel_eval(spec, x.row(1).transpose(),
                                    x.row(0).transpose());
      CHECK(ab == ba);  // exact equality
      CHECK(ab > 0.0);
      CHECK(ab <= spec.signal_variance);
    }
  }
}

TEST_CASE("kernel_eval rejects dimension mismatch") {
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 2, 1.0, 1.0, 0.0);
  CHECK_THROWS_AS(kernel_eval(spec, Vector::Zero(3), Vector::Zero(3)),
                  ContractViolation);
}

TEST_CASE("gram of a single point") {
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 1, 1.0, 1.0, 0.0);
  const GramFactor factor = gram(spec, Matrix::Zero(1, 1), false);
  CHECK(factor.matrix(0, 0) == doctest::Approx(1.0));
  CHECK(factor.chol_lower(0, 0) == doctest::Approx(1.0));
  CHECK(factor.jitter_used == 0.0);
}

TEST_CASE("duplicate rows force jitter and still factor accurately") {
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 2, 1.0, 1.0, 0.0);
  Matrix x(3, 2);
  x << 0.5, 0.5, 0.5, 0.5, -1.0, 2.0;  // first two rows identical
  const GramFactor factor = gram(spec, x, false);
  CHECK(factor.jitter_used > 0.0);
  Matrix target = factor.matrix;
  target.diagonal().array() += factor.jitter_used;
  const Matrix recon = factor.chol_lower * factor.chol_lower.transpose();
  CHECK((recon - target).norm() / target.norm() < 1e-8);
}

TEST_CASE("factor reconstructs the matrix within 1e-8 relative error") {
  Rng rng(13);
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kMatern52, 3, 0.8, 2.0, 0.05);
  const Matrix x = random_inputs(40, 3, rng);
  const GramFactor factor = gram(spec, x, true);
  Matrix target = factor.matrix;
  target.diagonal().array() += factor.jitter_used;
  const Matrix recon = factor.chol_lower * factor.chol_lower.transpose();
  CHECK((recon - target).norm() / target.norm() < 1e-8);
  // Diagonal contract: signal + noise (+ jitter inside the factor).
  CHECK(factor.matrix(0, 0) ==
        doctest::Approx(spec.signal_variance + spec.noise_variance));
}

TEST_CASE("gram matrices are exactly symmetric as stored") {
  Rng rng(99);
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 5, 0.6, 1.3, 0.0);
  const Matrix x = random_inputs(30, 5, rng);
  const GramFactor factor = gram(spec, x, false);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < i; ++j)
      CHECK(factor.matrix(i, j) == factor.matrix(j, i));  // bitwise
}

TEST_CASE("solving against unit vectors recovers them") {
  Rng rng(21);
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 2, 0.5, 1.0, 0.01);
  const Matrix x = random_inputs(200, 2, rng);
  const GramFactor factor = gram(spec, x, true);
  Matrix k_eff = factor.matrix;
  k_eff.diagonal().array() += factor.jitter_used;
  for (int i = 0; i < 200; i += 37) {
    Vector e = Vector::Zero(200);
    e[i] = 1.0;
    const Vector v = factor.solve(e);
    CHECK((k_eff * v - e).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("jitter ladder stays within the documented rungs") {
  // A deliberately rank-deficient matrix built from duplicated rows.
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 1, 1.0, 1.0, 0.0);
  Matrix x(4, 1);
  x << 0.0, 0.0, 0.0, 1.0;
  const GramFactor factor = gram(spec, x, false);
  const double rungs[] = {0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};
  bool on_ladder = false;
  for (double rung : rungs)
    if (factor.jitter_used == doctest::Approx(rung).epsilon(1e-12))
      on_ladder = true;
  CHECK(on_ladder);
}

TEST_CASE("log_det agrees with a direct determinant") {
  Rng rng(3);
  const KernelSpec spec = KernelSpec::isotropic(
      KernelFamily::kSquaredExponential, 2, 1.0, 1.0, 0.1);
  const Matrix x = random_inputs(12, 2, rng);
  const GramFactor factor = gram(spec, x, true);
  Matrix k_eff = factor.matrix;
  k_eff.diagonal().array() += factor.jitter_used;
  CHECK(factor.log_det() ==
        doctest::Approx(std::log(k_eff.determinant())).epsilon(1e-8));
}
