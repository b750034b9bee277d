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

#include "prefbed/kernel.hpp"

#include <cmath>
#include <sstream>

namespace prefbed {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kSquaredExponential:
      return "squared_exponential";
    case KernelFamily::kMatern52:
      return "matern52";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "squared_exponential" || name == "rbf" || name == "se")
    return KernelFamily::kSquaredExponential;
  if (name == "matern52") return KernelFamily::kMatern52;
  throw ContractViolation("unknown kernel family: " + name);
}

KernelSpec KernelSpec::isotropic(KernelFamily family, int dim,
                                 double lengthscale, double signal_variance,
                                 double noise_variance) {
  KernelSpec spec;
  spec.family = family;
  spec.lengthscales = Vector::Constant(dim, lengthscale);
  spec.signal_variance = signal_variance;
  spec.noise_variance = noise_variance;
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  require(lengthscales.size() > 0, "KernelSpec: lengthscales empty");
  require((lengthscales.array() > 0.0).all(),
          "KernelSpec: lengthscales must be positive");
  require(signal_variance > 0.0, "KernelSpec: signal_variance must be positive");
  require(noise_variance >= 0.0,
          "KernelSpec: noise_variance must be non-negative");
}

namespace {

// Squared scaled distance sum((x1-x2)/ell)^2. Templated so both row and
// column expressions evaluate without copies.
template <typename V1, typename V2>
double scaled_sqdist(const KernelSpec& spec, const V1& x1, const V2& x2) {
  double r2 = 0.0;
  for (Eigen::Index i = 0; i < x1.size(); ++i) {
    const double d = (x1[i] - x2[i]) / spec.lengthscales[i];
    r2 += d * d;
  }
  return r2;
}

double eval_from_sqdist(const KernelSpec& spec, double r2) {
  switch (spec.family) {
    case KernelFamily::kSquaredExponential:
      return spec.signal_variance * std::exp(-0.5 * r2);
    case KernelFamily::kMatern52: {
      const double r = std::sqrt(r2);
      const double a = std::sqrt(5.0) * r;
      return spec.signal_variance * (1.0 + a + 5.0 * r2 / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

}  // namespace

double kernel_eval(const KernelSpec& spec, const Vector& x1, const Vector& x2) {
  spec.validate();
  require(x1.size() == spec.lengthscales.size() && x2.size() == x1.size(),
          "kernel_eval: input dimension mismatch");
  // (x1-x2)^2 == (x2-x1)^2 exactly, so symmetry is bit-for-bit.
  return eval_from_sqdist(spec, scaled_sqdist(spec, x1, x2));
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& X, bool add_noise) {
  spec.validate();
  require(X.cols() == spec.lengthscales.size(),
          "kernel_matrix: input dimension mismatch");
  const Eigen::Index n = X.rows();
  Matrix K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = spec.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v =
          eval_from_sqdist(spec, scaled_sqdist(spec, X.row(i), X.row(j)));
      K(i, j) = v;
      K(j, i) = v;  // exact symmetry as stored
    }
  }
  if (add_noise) K.diagonal().array() += spec.noise_variance;
  return K;
}

Matrix cross_kernel(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  spec.validate();
  require(A.cols() == spec.lengthscales.size() && B.cols() == A.cols(),
          "cross_kernel: input dimension mismatch");
  Matrix K(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      K(i, j) = eval_from_sqdist(spec, scaled_sqdist(spec, A.row(i), B.row(j)));
  return K;
}

Vector GramFactor::solve(const Vector& b) const {
  Vector y = chol_lower.triangularView<Eigen::Lower>().solve(b);
  return chol_lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix GramFactor::solve(const Matrix& B) const {
  Matrix Y = chol_lower.triangularView<Eigen::Lower>().solve(B);
  return chol_lower.transpose().triangularView<Eigen::Upper>().solve(Y);
}

double GramFactor::log_det() const {
  return 2.0 * chol_lower.diagonal().array().log().sum();
}

GramFactor factor_psd(const Matrix& K) {
  require(K.rows() == K.cols() && K.rows() >= 1, "factor_psd: square, n >= 1");
  GramFactor result;
  result.matrix = K;
  double jitter = 0.0;
  while (true) {
    Matrix A = K;
    if (jitter > 0.0) A.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(A);
    if (llt.info() == Eigen::Success) {
      result.chol_lower = llt.matrixL();
      result.jitter_used = jitter;
      return result;
    }
    if (jitter == 0.0) {
      jitter = 1e-6;
    } else if (jitter < 1e-2) {
      jitter *= 10.0;
    } else {
      std::ostringstream msg;
      msg << "factor_psd: Cholesky failed at max jitter 1e-2 (n=" << K.rows()
          << ", diag min=" << K.diagonal().minCoeff()
          << ", diag max=" << K.diagonal().maxCoeff()
          << ", off-diag max=|" << (K - Matrix(K.diagonal().asDiagonal()))
                                      .cwiseAbs()
                                      .maxCoeff()
          << "|)";
      throw NumericalError(msg.str());
    }
  }
}

GramFactor gram(const KernelSpec& spec, const Matrix& X, bool add_noise) {
  require(X.rows() >= 1, "gram: need n >= 1");
  return factor_psd(kernel_matrix(spec, X, add_noise));
}

}  // namespace prefbed
