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

#ifndef PREFBED_KERNEL_HPP_
#define PREFBED_KERNEL_HPP_

#include <string>

#include "prefbed/common.hpp"

namespace prefbed {

enum class KernelFamily { kSquaredExponential, kMatern52 };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

// Stationary covariance with ARD lengthscales, one per input dimension.
struct KernelSpec {
  KernelFamily family = KernelFamily::kSquaredExponential;
  Vector lengthscales;  // > 0 elementwise
  double signal_variance = 1.0;
  double noise_variance = 0.0;

  static KernelSpec isotropic(KernelFamily family, int dim, double lengthscale,
                              double signal_variance, double noise_variance);

  int dim() const { return static_cast<int>(lengthscales.size()); }
  void validate() const;
};

// k(x1, x2). Symmetric in its arguments bit-for-bit: both families depend on
// the inputs only through squared coordinate differences.
double kernel_eval(const KernelSpec& spec, const Vector& x1, const Vector& x2);

// Dense kernel matrices. cross_kernel rows index A, columns index B.
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& X, bool add_noise);
Matrix cross_kernel(const KernelSpec& spec, const Matrix& A, const Matrix& B);

// A factored Gram matrix. chol_lower satisfies
//   chol_lower * chol_lower^T = matrix + jitter_used * I.
struct GramFactor {
  Matrix matrix;             // symmetric, as stored (no jitter)
  Matrix chol_lower;         // lower-triangular Cholesky factor
  double jitter_used = 0.0;  // 0 or one of 1e-6, 1e-5, ..., 1e-2

  Eigen::Index size() const { return matrix.rows(); }

  // Solve (matrix + jitter I) x = b through the factor.
  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& B) const;
  // log det(matrix + jitter I)
  double log_det() const;
};

// Factor K(X, X) (+ noise_variance on the diagonal when add_noise).
// On Cholesky failure the jitter escalates tenfold from 1e-6 to 1e-2, then a
// NumericalError with condition diagnostics is thrown.
GramFactor gram(const KernelSpec& spec, const Matrix& X, bool add_noise);

// Factor an already-built symmetric PSD matrix with the same jitter ladder.
GramFactor factor_psd(const Matrix& K);

}  // namespace prefbed

#endif  // PREFBED_KERNEL_HPP_
