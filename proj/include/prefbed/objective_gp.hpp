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

#ifndef PREFBED_OBJECTIVE_GP_HPP_
#define PREFBED_OBJECTIVE_GP_HPP_

#include <optional>
#include <vector>

#include "json.hpp"
#include "prefbed/kernel.hpp"
#include "prefbed/rng.hpp"

namespace prefbed {

// Training data for the scenario->observables surrogate, together with the
// affine normalization applied before any kernel sees the numbers:
// X to the unit cube, Y to zero mean and unit variance per dimension.
struct ObjectiveDataset {
  Matrix X;  // n x d_x, raw units
  Matrix Y;  // n x d_y, raw units
  Vector x_shift, x_scale;
  Vector y_shift, y_scale;

  // X bounds taken from the design space.
  static ObjectiveDataset create(const Matrix& X, const Matrix& Y,
                                 const Vector& x_lower, const Vector& x_upper);
  // X bounds inferred from the data (degenerate dims get unit scale).
  static ObjectiveDataset create(const Matrix& X, const Matrix& Y);

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dx() const { return X.cols(); }
  Eigen::Index dy() const { return Y.cols(); }

  Vector normalize_x(const Vector& x) const;
  Matrix normalized_X() const;
  Matrix normalized_Y() const;
};

// Latent (noise-free) marginal prediction in raw y units.
struct GaussianPrediction {
  Vector mean;
  Vector variance;
};

struct InducingSet {
  Matrix Z;    // m x d_x, normalized units
  Vector m_u;  // variational mean
  Matrix S_u;  // variational covariance, symmetric PSD
};

// Hyperparameter box honored during fitting (inputs on the unit cube,
// targets z-scored). The noise floor is deliberately macroscopic: on
// deterministic benchmarks the marginal likelihood otherwise drives the
// noise to machine-level values and the objective information term
// log(1 + var/noise) saturates every other quantity in the acquisition.
struct HyperBounds {
  double lengthscale_lo = 1e-2, lengthscale_hi = 1e2;
  double signal_lo = 1e-3, signal_hi = 1e3;
  double noise_lo = 1e-2, noise_hi = 1.0;
};

struct FitOptions {
  bool optimize = true;  // false: condition on `init` as-is
  int restarts = 5;
  int max_iters = 60;
  double grad_tol = 1e-5;
  uint64_t seed = 0;
  HyperBounds bounds;
  // Per-output-dimension starting points from a previous fit. When the size
  // matches d_y, dimension j starts from warm_start_specs[j] and only
  // warm_restarts starts are used.
  std::vector<KernelSpec> warm_start_specs;
  int warm_restarts = 2;
};

struct SvgpOptions {
  FitOptions fit;
  bool optimize_inducing = false;  // move Z during the ELBO ascent
};

enum class GpMode { kExact, kSparseVariational };

// Multi-output GP surrogate g: x -> y, one independent GP per output
// dimension, all sharing the training inputs. Immutable once fitted.
class ObjectiveModel {
 public:
  // Exact GP regression; hyperparameters maximize the log marginal
  // likelihood per output dimension via multi-restart BFGS on bounded
  // log-parameters.
  static ObjectiveModel fit_exact(const ObjectiveDataset& data,
                                  const KernelSpec& init,
                                  const FitOptions& opt);

  // Sparse variational mode: inducing locations seeded by k-means++ over X,
  // variational posterior q(u) = N(m_u, S_u) set to its analytic optimum for
  // the Gaussian likelihood, hyperparameters (and optionally Z) ascended on
  // the ELBO. Prediction is O(m^2).
  static ObjectiveModel fit_svgp(const ObjectiveDataset& data, int m,
                                 const KernelSpec& init,
                                 const SvgpOptions& opt);

  GaussianPrediction predict(const Vector& x) const;

  // Batched predict: rows of Xq are query points; outputs are q x d_y.
  void predict_batch(const Matrix& Xq, Matrix* means, Matrix* variances) const;

  // S draws from the per-dimension Gaussian predictive at x, independent
  // across output dimensions. Deterministic given rng state.
  std::vector<Vector> sample_observables(const Vector& x, int count,
                                         Rng& rng) const;

  // Gaussian mutual information between the latent g(x) and one noisy
  // observation there: sum_j 0.5 log(1 + var_j(x)/noise_j). A zero noise
  // variance is floored at 1e-8 and reported through noise_floored.
  double info_gain(const Vector& x, bool* noise_floored = nullptr) const;

  // Sum over output dimensions of the exact log marginal likelihood
  // (normalized units). Exact mode only.
  double log_marginal_likelihood() const;

  // Evidence lower bound of the stored variational posterior on `data`
  // (normalized units). Sparse mode only.
  double elbo(const ObjectiveDataset& data) const;

  GpMode mode() const { return mode_; }
  Eigen::Index input_dim() const { return data_.dx(); }
  Eigen::Index output_dim() const { return data_.dy(); }
  const ObjectiveDataset& dataset() const { return data_; }
  const KernelSpec& kernel(int output_dim) const;
  const InducingSet& inducing(int output_dim) const;

  nlohmann::json to_json() const;
  static ObjectiveModel from_json(const nlohmann::json& doc);

 private:
  ObjectiveModel() = default;
  void build_exact_state();
  void build_sparse_state();

  struct ExactHead {
    KernelSpec spec;
    GramFactor factor;  // K + noise I
    Vector alpha;       // (K + noise I)^{-1} y
  };
  struct SparseHead {
    KernelSpec spec;
    InducingSet inducing;
    GramFactor kuu;  // K_uu factor
    // Whitened cache (u = L v, K_uu = L L^T): keeps every posterior
    // quantity away from K_uu^{-1} which is near-singular for clustered Z.
    Vector m_white;   // L^{-1} m_u
    Matrix s_white;   // L^{-1} S_u L^{-T}, eigenvalues in (0, 1] at optimum
  };

  GpMode mode_ = GpMode::kExact;
  ObjectiveDataset data_;
  std::vector<ExactHead> exact_;
  std::vector<SparseHead> sparse_;
  std::vector<double> lml_;  // per-dim, exact mode
};

// Exposed for tests: single-dimension log marginal likelihood and its
// gradient with respect to (log lengthscales..., log signal, log noise).
double exact_log_marginal(const KernelSpec& spec, const Matrix& Xn,
                          const Vector& yn, Vector* grad_log_params = nullptr);

// Collapsed ELBO for a Gaussian-likelihood sparse GP (normalized units).
double collapsed_elbo(const KernelSpec& spec, const Matrix& Z,
                      const Matrix& Xn, const Vector& yn);

// k-means++ seeding over the rows of X; returns m chosen row indices.
std::vector<int> kmeanspp_indices(const Matrix& X, int m, Rng& rng);

}  // namespace prefbed

#endif  // PREFBED_OBJECTIVE_GP_HPP_
