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

#include "prefbed/objective_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace prefbed {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

// ---------------------------------------------------------------------------
// Dataset and normalization
// ---------------------------------------------------------------------------

ObjectiveDataset ObjectiveDataset::create(const Matrix& X, const Matrix& Y,
                                          const Vector& x_lower,
                                          const Vector& x_upper) {
  require(X.rows() == Y.rows(), "ObjectiveDataset: X/Y row count mismatch");
  require(X.rows() >= 1, "ObjectiveDataset: need at least one row");
  require(Y.cols() >= 1, "ObjectiveDataset: d_y must be >= 1");
  require(x_lower.size() == X.cols() && x_upper.size() == X.cols(),
          "ObjectiveDataset: bounds dimension mismatch");
  ObjectiveDataset data;
  data.X = X;
  data.Y = Y;
  data.x_shift = x_lower;
  data.x_scale = x_upper - x_lower;
  require((data.x_scale.array() > 0.0).all(),
          "ObjectiveDataset: bounds must have positive extent");
  data.y_shift = Y.colwise().mean();
  data.y_scale.resize(Y.cols());
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    const double var =
        (Y.col(j).array() - data.y_shift[j]).square().sum() /
        std::max<double>(1, Y.rows() - 1);
    const double sd = std::sqrt(var);
    data.y_scale[j] = sd > 1e-12 ? sd : 1.0;  // constant dims keep unit scale
  }
  return data;
}

ObjectiveDataset ObjectiveDataset::create(const Matrix& X, const Matrix& Y) {
  Vector lo = X.colwise().minCoeff();
  Vector hi = X.colwise().maxCoeff();
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (hi[j] - lo[j] <= 1e-12) {
      lo[j] -= 0.5;
      hi[j] += 0.5;
    }
  }
  return create(X, Y, lo, hi);
}

Vector ObjectiveDataset::normalize_x(const Vector& x) const {
  require(x.size() == X.cols(), "normalize_x: dimension mismatch");
  return (x - x_shift).cwiseQuotient(x_scale);
}

Matrix ObjectiveDataset::normalized_X() const {
  return (X.rowwise() - x_shift.transpose()).array().rowwise() /
         x_scale.transpose().array();
}

Matrix ObjectiveDataset::normalized_Y() const {
  return (Y.rowwise() - y_shift.transpose()).array().rowwise() /
         y_scale.transpose().array();
}

// ---------------------------------------------------------------------------
// Log marginal likelihood and its gradient (single output dimension)
// ---------------------------------------------------------------------------

namespace {

struct KernelPieces {
  Matrix Kf;  // noise-free kernel matrix
  Matrix R2;  // scaled squared distances
};

KernelPieces build_pieces(const KernelSpec& spec, const Matrix& Xn) {
  const Eigen::Index n = Xn.rows();
  KernelPieces p;
  p.R2 = Matrix::Zero(n, n);
  for (Eigen::Index d = 0; d < Xn.cols(); ++d) {
    const double inv_l2 =
        1.0 / (spec.lengthscales[d] * spec.lengthscales[d]);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) {
        const double diff = Xn(i, d) - Xn(j, d);
        p.R2(i, j) += diff * diff * inv_l2;
      }
  }
  p.R2.triangularView<Eigen::StrictlyUpper>() =
      p.R2.transpose().triangularView<Eigen::StrictlyUpper>();
  p.Kf.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p.Kf(i, i) = spec.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r2 = p.R2(i, j);
      double v;
      if (spec.family == KernelFamily::kSquaredExponential) {
        v = spec.signal_variance * std::exp(-0.5 * r2);
      } else {
        const double a = std::sqrt(5.0 * r2);
        v = spec.signal_variance * (1.0 + a + 5.0 * r2 / 3.0) * std::exp(-a);
      }
      p.Kf(i, j) = v;
      p.Kf(j, i) = v;
    }
  }
  return p;
}

// dk/d(r^2), elementwise.
Matrix kernel_r2_derivative(const KernelSpec& spec, const KernelPieces& p) {
  if (spec.family == KernelFamily::kSquaredExponential) return -0.5 * p.Kf;
  const Eigen::Index n = p.Kf.rows();
  Matrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = std::sqrt(5.0 * p.R2(i, j));
      G(i, j) = -(5.0 / 6.0) * spec.signal_variance * (1.0 + a) * std::exp(-a);
    }
  return G;
}

}  // namespace

double exact_log_marginal(const KernelSpec& spec, const Matrix& Xn,
                          const Vector& yn, Vector* grad_log_params) {
  const Eigen::Index n = Xn.rows();
  const Eigen::Index d = Xn.cols();
  KernelPieces pieces = build_pieces(spec, Xn);
  Matrix K = pieces.Kf;
  K.diagonal().array() += spec.noise_variance;
  GramFactor factor = factor_psd(K);
  const Vector alpha = factor.solve(yn);
  const double lml =
      -0.5 * yn.dot(alpha) - 0.5 * factor.log_det() - 0.5 * n * kLog2Pi;
  if (grad_log_params != nullptr) {
    // d lml / d theta = 0.5 tr((alpha alpha^T - K^{-1}) dK/dtheta)
    const Matrix Kinv = factor.solve(Matrix(Matrix::Identity(n, n)));
    const Matrix A = alpha * alpha.transpose() - Kinv;
    const Matrix G = kernel_r2_derivative(spec, pieces);
    grad_log_params->resize(d + 2);
    const Matrix AG = A.cwiseProduct(G);
    for (Eigen::Index k = 0; k < d; ++k) {
      // d r^2 / d log(ell_k) = -2 (x_ik - x_jk)^2 / ell_k^2
      const double inv_l2 =
          1.0 / (spec.lengthscales[k] * spec.lengthscales[k]);
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
          const double diff = Xn(i, k) - Xn(j, k);
          acc += AG(i, j) * (-2.0 * diff * diff * inv_l2);
        }
      (*grad_log_params)[k] = acc;  // off-diagonal pairs, x2 for symmetry, /2
    }
    (*grad_log_params)[d] = 0.5 * A.cwiseProduct(pieces.Kf).sum();
    (*grad_log_params)[d + 1] = 0.5 * spec.noise_variance * A.trace();
  }
  return lml;
}

// ---------------------------------------------------------------------------
// Bounded BFGS on log-parameters
// ---------------------------------------------------------------------------

namespace {

struct BoundedReparam {
  Vector lo, hi;  // bounds in log-parameter space

  Vector to_unconstrained(Vector u) const {
    Vector t(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      double p = (u[i] - lo[i]) / (hi[i] - lo[i]);
      p = std::clamp(p, 1e-4, 1.0 - 1e-4);
      t[i] = std::log(p / (1.0 - p));
    }
    return t;
  }
  Vector to_bounded(const Vector& t) const {
    Vector u(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i)
      u[i] = lo[i] + (hi[i] - lo[i]) * sigmoid(t[i]);
    return u;
  }
  Vector chain(const Vector& t) const {  // du/dt
    Vector c(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double s = sigmoid(t[i]);
      c[i] = (hi[i] - lo[i]) * s * (1.0 - s);
    }
    return c;
  }
};

BoundedReparam log_param_bounds(Eigen::Index input_dim,
                                const HyperBounds& hb) {
  BoundedReparam rep;
  rep.lo.resize(input_dim + 2);
  rep.hi.resize(input_dim + 2);
  for (Eigen::Index i = 0; i < input_dim; ++i) {
    rep.lo[i] = std::log(hb.lengthscale_lo);
    rep.hi[i] = std::log(hb.lengthscale_hi);
  }
  rep.lo[input_dim] = std::log(hb.signal_lo);
  rep.hi[input_dim] = std::log(hb.signal_hi);
  rep.lo[input_dim + 1] = std::log(hb.noise_lo);
  rep.hi[input_dim + 1] = std::log(hb.noise_hi);
  return rep;
}

KernelSpec spec_from_log_params(const KernelSpec& base, const Vector& u) {
  KernelSpec spec = base;
  const Eigen::Index d = u.size() - 2;
  spec.lengthscales = u.head(d).array().exp();
  spec.signal_variance = std::exp(u[d]);
  spec.noise_variance = std::exp(u[d + 1]);
  return spec;
}

Vector log_params_from_spec(const KernelSpec& spec) {
  Vector u(spec.dim() + 2);
  u.head(spec.dim()) = spec.lengthscales.array().log();
  u[spec.dim()] = std::log(spec.signal_variance);
  u[spec.dim() + 1] = std::log(std::max(spec.noise_variance, 1e-12));
  return u;
}

struct BfgsResult {
  Vector t;
  double value = -std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Maximizes fn(t) with BFGS + Armijo backtracking. fn returns the value and
// fills grad. Non-finite evaluations shrink the step; a non-finite start
// fails the run.
template <typename Fn>
BfgsResult bfgs_maximize(Fn&& fn, Vector t0, int max_iters, double grad_tol) {
  BfgsResult res;
  const Eigen::Index p = t0.size();
  Vector grad(p);
  double value = fn(t0, &grad);
  if (!std::isfinite(value)) return res;
  Matrix H = Matrix::Identity(p, p);
  Vector t = std::move(t0);
  for (int iter = 0; iter < max_iters; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < grad_tol) break;
    Vector dir = H * grad;  // ascent direction
    if (dir.dot(grad) <= 0.0) {
      H = Matrix::Identity(p, p);
      dir = grad;
    }
    double step = 1.0;
    bool accepted = false;
    Vector t_next, g_next(p);
    double v_next = 0.0;
    for (int ls = 0; ls < 30; ++ls) {
      t_next = t + step * dir;
      v_next = fn(t_next, &g_next);
      if (std::isfinite(v_next) &&
          v_next >= value + 1e-4 * step * dir.dot(grad)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Vector s = t_next - t;
    const Vector y = g_next - grad;
    const double sy = -s.dot(y);  // curvature of the negated objective
    if (sy > 1e-12) {
      const Matrix I = Matrix::Identity(p, p);
      const double rho = 1.0 / sy;
      H = (I + rho * s * y.transpose()) * H * (I + rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    t = t_next;
    grad = g_next;
    value = v_next;
  }
  res.t = t;
  res.value = value;
  res.ok = true;
  return res;
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact fit
// ---------------------------------------------------------------------------

ObjectiveModel ObjectiveModel::fit_exact(const ObjectiveDataset& data,
                                         const KernelSpec& init,
                                         const FitOptions& opt) {
  require(init.dim() == data.dx(), "fit_exact: kernel dimension mismatch");
  init.validate();
  ObjectiveModel model;
  model.mode_ = GpMode::kExact;
  model.data_ = data;
  const Matrix Xn = data.normalized_X();
  const Matrix Yn = data.normalized_Y();
  const BoundedReparam rep = log_param_bounds(data.dx(), opt.bounds);

  const bool warm =
      static_cast<Eigen::Index>(opt.warm_start_specs.size()) == data.dy();
  for (Eigen::Index j = 0; j < data.dy(); ++j) {
    const Vector yn = Yn.col(j);
    const KernelSpec& start = warm ? opt.warm_start_specs[j] : init;
    KernelSpec best = start;
    if (opt.optimize) {
      const auto objective = [&](const Vector& t, Vector* grad) {
        const Vector u = rep.to_bounded(t);
        const KernelSpec spec = spec_from_log_params(init, u);
        Vector gu;
        const double lml = exact_log_marginal(spec, Xn, yn, &gu);
        *grad = gu.cwiseProduct(rep.chain(t));
        return lml;
      };
      double best_value = -std::numeric_limits<double>::infinity();
      bool any_ok = false;
      Rng perturb(derive_seed(opt.seed, /*tag=*/0xf17ULL, j));
      const Vector t_init = rep.to_unconstrained(log_params_from_spec(start));
      const int restarts =
          std::max(1, warm ? opt.warm_restarts : opt.restarts);
      for (int r = 0; r < restarts; ++r) {
        Vector t0 = t_init;
        if (r > 0)
          for (Eigen::Index i = 0; i < t0.size(); ++i)
            t0[i] += perturb.normal();
        const BfgsResult res =
            bfgs_maximize(objective, t0, opt.max_iters, opt.grad_tol);
        if (res.ok && res.value > best_value) {
          best_value = res.value;
          best = spec_from_log_params(init, rep.to_bounded(res.t));
          any_ok = true;
        }
      }
      if (!any_ok)
        throw FittingError(
            "fit_exact: likelihood non-finite for all restarts");
    }
    model.exact_.push_back({best, GramFactor{}, Vector{}});
  }
  model.build_exact_state();
  return model;
}

void ObjectiveModel::build_exact_state() {
  const Matrix Xn = data_.normalized_X();
  const Matrix Yn = data_.normalized_Y();
  lml_.clear();
  for (Eigen::Index j = 0; j < data_.dy(); ++j) {
    ExactHead& head = exact_[j];
    head.factor = gram(head.spec, Xn, /*add_noise=*/true);
    head.alpha = head.factor.solve(Vector(Yn.col(j)));
    lml_.push_back(exact_log_marginal(head.spec, Xn, Yn.col(j)));
  }
}

double ObjectiveModel::log_marginal_likelihood() const {
  require(mode_ == GpMode::kExact, "log_marginal_likelihood: exact mode only");
  double total = 0.0;
  for (double v : lml_) total += v;
  return total;
}

// ---------------------------------------------------------------------------
// Sparse variational fit
// ---------------------------------------------------------------------------

std::vector<int> kmeanspp_indices(const Matrix& X, int m, Rng& rng) {
  const Eigen::Index n = X.rows();
  require(m >= 1 && m <= n, "kmeanspp: need 1 <= m <= n");
  std::vector<int> chosen;
  std::vector<bool> used(n, false);
  std::vector<double> d2(n, 0.0);
  const int first = static_cast<int>(rng.uniform_int(n));
  chosen.push_back(first);
  used[first] = true;
  for (Eigen::Index i = 0; i < n; ++i)
    d2[i] = (X.row(i) - X.row(first)).squaredNorm();
  while (static_cast<int>(chosen.size()) < m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!used[i]) total += d2[i];
    int pick = -1;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (used[i]) continue;
        r -= d2[i];
        if (r <= 0.0) {
          pick = static_cast<int>(i);
          break;
        }
      }
      if (pick < 0) {  // numeric tail: last unused index
        for (Eigen::Index i = n - 1; i >= 0; --i)
          if (!used[i]) {
            pick = static_cast<int>(i);
            break;
          }
      }
    } else {
      // All remaining points coincide with a chosen one; pick uniformly.
      uint64_t k = rng.uniform_int(n - chosen.size());
      for (Eigen::Index i = 0; i < n; ++i) {
        if (used[i]) continue;
        if (k == 0) {
          pick = static_cast<int>(i);
          break;
        }
        --k;
      }
    }
    used[pick] = true;
    chosen.push_back(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (X.row(i) - X.row(pick)).squaredNorm());
  }
  return chosen;
}

double collapsed_elbo(const KernelSpec& spec, const Matrix& Z,
                      const Matrix& Xn, const Vector& yn) {
  const Eigen::Index n = Xn.rows();
  const double noise = std::max(spec.noise_variance, 1e-10);
  GramFactor kuu = gram(spec, Z, /*add_noise=*/false);
  const Matrix Kun = cross_kernel(spec, Z, Xn);
  const Matrix A = kuu.chol_lower.triangularView<Eigen::Lower>().solve(Kun) /
                   std::sqrt(noise);
  Matrix B = Matrix::Identity(Z.rows(), Z.rows()) + A * A.transpose();
  const GramFactor bf = factor_psd(B);
  const Vector Ay = A * yn;
  const Vector w = bf.chol_lower.triangularView<Eigen::Lower>().solve(Ay);
  const double quad = (yn.squaredNorm() - w.squaredNorm()) / noise;
  const double logdet = n * std::log(noise) + bf.log_det();
  const double trace_term =
      (n * spec.signal_variance - noise * A.squaredNorm()) / (2.0 * noise);
  return -0.5 * (n * kLog2Pi + logdet + quad) - trace_term;
}

namespace {

// Optimal q(u) for the Gaussian likelihood at fixed (theta, Z), computed in
// whitened coordinates through the well-conditioned B = I + A A^T:
//   A = L^{-1} Kun / sigma,  S_white = B^{-1},  m_white = B^{-1} A y / sigma,
// then unwhitened for storage: S = L B^{-1} L^T, m = L m_white.
void optimal_variational(const KernelSpec& spec, const Matrix& Z,
                         const Matrix& Xn, const Vector& yn, Vector* m_u,
                         Matrix* S_u) {
  const double noise = std::max(spec.noise_variance, 1e-10);
  const double sigma = std::sqrt(noise);
  const GramFactor kuu = gram(spec, Z, /*add_noise=*/false);
  const Matrix Kun = cross_kernel(spec, Z, Xn);
  const Matrix A =
      kuu.chol_lower.triangularView<Eigen::Lower>().solve(Kun) / sigma;
  Matrix B = Matrix::Identity(Z.rows(), Z.rows()) + A * A.transpose();
  const GramFactor bf = factor_psd(B);
  const Matrix Binv = bf.solve(Matrix(Matrix::Identity(Z.rows(), Z.rows())));
  const Vector m_white = bf.solve(Vector(A * yn)) / sigma;
  const auto L = kuu.chol_lower;
  *S_u = L * Binv * L.transpose();
  *S_u = 0.5 * (*S_u + S_u->transpose());
  *m_u = L * m_white;
}

}  // namespace

ObjectiveModel ObjectiveModel::fit_svgp(const ObjectiveDataset& data, int m,
                                        const KernelSpec& init,
                                        const SvgpOptions& opt) {
  require(m >= 1 && m <= data.n(), "fit_svgp: need 1 <= m <= n");
  require(init.dim() == data.dx(), "fit_svgp: kernel dimension mismatch");
  init.validate();
  ObjectiveModel model;
  model.mode_ = GpMode::kSparseVariational;
  model.data_ = data;
  const Matrix Xn = data.normalized_X();
  const Matrix Yn = data.normalized_Y();
  const BoundedReparam rep = log_param_bounds(data.dx(), opt.fit.bounds);

  Rng km_rng(derive_seed(opt.fit.seed, /*tag=*/0x5695ULL));
  const std::vector<int> idx = kmeanspp_indices(Xn, m, km_rng);
  Matrix Z0(m, data.dx());
  for (int i = 0; i < m; ++i) Z0.row(i) = Xn.row(idx[i]);

  for (Eigen::Index j = 0; j < data.dy(); ++j) {
    const Vector yn = Yn.col(j);
    Vector u = log_params_from_spec(init);
    for (Eigen::Index i = 0; i < u.size(); ++i)
      u[i] = std::clamp(u[i], rep.lo[i] + 1e-9, rep.hi[i] - 1e-9);
    Matrix Z = Z0;

    if (opt.fit.optimize) {
      // Pack (t, Z?) into one parameter vector and ascend the collapsed
      // bound with accepted-improvements-only steps; the final ELBO can
      // therefore never fall below the initial one.
      const Eigen::Index nt = u.size();
      const Eigen::Index nz = opt.optimize_inducing ? Z.size() : 0;
      Vector params(nt + nz);
      params.head(nt) = rep.to_unconstrained(u);
      if (nz > 0)
        params.tail(nz) = Eigen::Map<const Vector>(Z.data(), Z.size());
      const auto value_at = [&](const Vector& p) {
        const KernelSpec spec =
            spec_from_log_params(init, rep.to_bounded(p.head(nt)));
        Matrix Zp = Z;
        if (nz > 0)
          Zp = Eigen::Map<const Matrix>(p.tail(nz).data(), Z.rows(), Z.cols());
        double v;
        try {
          v = collapsed_elbo(spec, Zp, Xn, yn);
        } catch (const NumericalError&) {
          v = -std::numeric_limits<double>::infinity();
        }
        return v;
      };
      double value = value_at(params);
      double step = 0.25;
      const double fd = 1e-4;
      for (int iter = 0; iter < opt.fit.max_iters && step > 1e-7; ++iter) {
        Vector g(params.size());
        for (Eigen::Index i = 0; i < params.size(); ++i) {
          Vector pp = params, pm = params;
          pp[i] += fd;
          pm[i] -= fd;
          g[i] = (value_at(pp) - value_at(pm)) / (2.0 * fd);
        }
        const double gn = g.norm();
        if (!(gn > 1e-12) || !std::isfinite(gn)) break;
        const Vector cand = params + (step / gn) * g;
        const double cv = value_at(cand);
        if (cv > value) {
          params = cand;
          value = cv;
          step *= 1.3;
        } else {
          step *= 0.5;
        }
      }
      u = rep.to_bounded(params.head(nt));
      if (nz > 0)
        Z = Eigen::Map<const Matrix>(params.tail(nz).data(), Z.rows(),
                                     Z.cols());
    }

    SparseHead head;
    head.spec = spec_from_log_params(init, u);
    head.inducing.Z = Z;
    optimal_variational(head.spec, Z, Xn, yn, &head.inducing.m_u,
                        &head.inducing.S_u);
    model.sparse_.push_back(std::move(head));
  }
  model.build_sparse_state();
  return model;
}

void ObjectiveModel::build_sparse_state() {
  for (auto& head : sparse_) {
    head.kuu = gram(head.spec, head.inducing.Z, /*add_noise=*/false);
    const auto L = head.kuu.chol_lower.triangularView<Eigen::Lower>();
    head.m_white = L.solve(head.inducing.m_u);
    const Matrix tmp = L.solve(head.inducing.S_u);
    head.s_white = L.solve(tmp.transpose()).transpose();
    head.s_white = 0.5 * (head.s_white + head.s_white.transpose());
  }
}

double ObjectiveModel::elbo(const ObjectiveDataset& data) const {
  require(mode_ == GpMode::kSparseVariational, "elbo: sparse mode only");
  const Matrix Xn = data.normalized_X();
  const Matrix Yn = data.normalized_Y();
  double total = 0.0;
  for (Eigen::Index j = 0; j < data.dy(); ++j) {
    const SparseHead& head = sparse_[j];
    const double noise = std::max(head.spec.noise_variance, 1e-10);
    const Eigen::Index n = Xn.rows();
    const Eigen::Index m = head.inducing.Z.rows();
    const Matrix Kun = cross_kernel(head.spec, head.inducing.Z, Xn);
    // Whitened feature a_i = L^{-1} k_u(x_i): psi^T m_u = a^T m_white, etc.
    const Matrix A =
        head.kuu.chol_lower.triangularView<Eigen::Lower>().solve(Kun);
    const Matrix SA = head.s_white * A;
    double expected_ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = A.col(i).dot(head.m_white);
      const double resid = Yn(i, j) - mu;
      const double ktilde =
          head.spec.signal_variance - A.col(i).squaredNorm();
      const double svar = A.col(i).dot(SA.col(i));
      expected_ll += -0.5 * (kLog2Pi + std::log(noise)) -
                     (resid * resid + std::max(0.0, ktilde) + svar) /
                         (2.0 * noise);
    }
    // KL(q(u) || p(u)) in whitened coordinates (prior becomes N(0, I)).
    const GramFactor sfac = factor_psd(head.s_white);
    const double kl = 0.5 * (head.s_white.trace() +
                             head.m_white.squaredNorm() -
                             static_cast<double>(m) - sfac.log_det());
    total += expected_ll - kl;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

const KernelSpec& ObjectiveModel::kernel(int output_dim) const {
  if (mode_ == GpMode::kExact) return exact_.at(output_dim).spec;
  return sparse_.at(output_dim).spec;
}

const InducingSet& ObjectiveModel::inducing(int output_dim) const {
  require(mode_ == GpMode::kSparseVariational, "inducing: sparse mode only");
  return sparse_.at(output_dim).inducing;
}

void ObjectiveModel::predict_batch(const Matrix& Xq, Matrix* means,
                                   Matrix* variances) const {
  require(Xq.cols() == data_.dx(), "predict: input dimension mismatch");
  const Eigen::Index q = Xq.rows();
  const Eigen::Index dy = data_.dy();
  means->resize(q, dy);
  variances->resize(q, dy);
  Matrix Xqn(q, data_.dx());
  for (Eigen::Index i = 0; i < q; ++i)
    Xqn.row(i) = data_.normalize_x(Xq.row(i));
  const Matrix Xn = data_.normalized_X();
  for (Eigen::Index j = 0; j < dy; ++j) {
    if (mode_ == GpMode::kExact) {
      const ExactHead& head = exact_[j];
      const Matrix Ks = cross_kernel(head.spec, Xn, Xqn);  // n x q
      const Matrix V =
          head.factor.chol_lower.triangularView<Eigen::Lower>().solve(Ks);
      for (Eigen::Index i = 0; i < q; ++i) {
        const double mean_n = Ks.col(i).dot(head.alpha);
        double var_n = head.spec.signal_variance - V.col(i).squaredNorm();
        var_n = std::clamp(var_n, 0.0, head.spec.signal_variance);
        (*means)(i, j) = mean_n * data_.y_scale[j] + data_.y_shift[j];
        (*variances)(i, j) =
            var_n * data_.y_scale[j] * data_.y_scale[j];
      }
    } else {
      const SparseHead& head = sparse_[j];
      const Matrix Ks = cross_kernel(head.spec, head.inducing.Z, Xqn);  // m x q
      const Matrix A =
          head.kuu.chol_lower.triangularView<Eigen::Lower>().solve(Ks);
      const Matrix SA = head.s_white * A;
      for (Eigen::Index i = 0; i < q; ++i) {
        const double mean_n = A.col(i).dot(head.m_white);
        // var = k(x,x) - a^T a + a^T S_white a
        double var_n = head.spec.signal_variance - A.col(i).squaredNorm() +
                       A.col(i).dot(SA.col(i));
        var_n = std::clamp(var_n, 0.0, head.spec.signal_variance);
        (*means)(i, j) = mean_n * data_.y_scale[j] + data_.y_shift[j];
        (*variances)(i, j) =
            var_n * data_.y_scale[j] * data_.y_scale[j];
      }
    }
  }
}

GaussianPrediction ObjectiveModel::predict(const Vector& x) const {
  Matrix means, variances;
  predict_batch(x.transpose(), &means, &variances);
  return {means.row(0).transpose(), variances.row(0).transpose()};
}

std::vector<Vector> ObjectiveModel::sample_observables(const Vector& x,
                                                       int count,
                                                       Rng& rng) const {
  require(count >= 1, "sample_observables: count must be >= 1");
  const GaussianPrediction pred = predict(x);
  const Vector sd = pred.variance.cwiseMax(0.0).cwiseSqrt();
  std::vector<Vector> samples;
  samples.reserve(count);
  for (int s = 0; s < count; ++s) {
    Vector y(pred.mean.size());
    for (Eigen::Index j = 0; j < y.size(); ++j)
      y[j] = pred.mean[j] + sd[j] * rng.normal();
    samples.push_back(std::move(y));
  }
  return samples;
}

double ObjectiveModel::info_gain(const Vector& x, bool* noise_floored) const {
  Matrix means, variances;
  predict_batch(x.transpose(), &means, &variances);
  if (noise_floored != nullptr) *noise_floored = false;
  double total = 0.0;
  for (Eigen::Index j = 0; j < data_.dy(); ++j) {
    // Work in normalized units; the ratio is scale invariant.
    const double var_n =
        variances(0, j) / (data_.y_scale[j] * data_.y_scale[j]);
    double noise = kernel(static_cast<int>(j)).noise_variance;
    if (noise <= 0.0) {
      noise = 1e-8;
      if (noise_floored != nullptr) *noise_floored = true;
    }
    total += 0.5 * std::log1p(var_n / noise);
  }
  return std::max(0.0, total);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& doc) {
  const Eigen::Index rows = doc.size();
  const Eigen::Index cols = rows > 0 ? doc[0].size() : 0;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = doc[i][j].get<double>();
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const nlohmann::json& doc) {
  Vector v(doc.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = doc[i].get<double>();
  return v;
}

nlohmann::json kernel_to_json(const KernelSpec& spec) {
  return {{"family", to_string(spec.family)},
          {"lengthscales", vector_to_json(spec.lengthscales)},
          {"signal_variance", spec.signal_variance},
          {"noise_variance", spec.noise_variance}};
}

KernelSpec kernel_from_json(const nlohmann::json& doc) {
  KernelSpec spec;
  spec.family = kernel_family_from_string(doc.at("family").get<std::string>());
  spec.lengthscales = vector_from_json(doc.at("lengthscales"));
  spec.signal_variance = doc.at("signal_variance").get<double>();
  spec.noise_variance = doc.at("noise_variance").get<double>();
  return spec;
}

}  // namespace

nlohmann::json ObjectiveModel::to_json() const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["kind"] = "objective_gp";
  doc["mode"] = mode_ == GpMode::kExact ? "exact" : "svgp";
  doc["data"] = {{"X", matrix_to_json(data_.X)},
                 {"Y", matrix_to_json(data_.Y)},
                 {"x_shift", vector_to_json(data_.x_shift)},
                 {"x_scale", vector_to_json(data_.x_scale)},
                 {"y_shift", vector_to_json(data_.y_shift)},
                 {"y_scale", vector_to_json(data_.y_scale)}};
  nlohmann::json heads = nlohmann::json::array();
  if (mode_ == GpMode::kExact) {
    for (const auto& head : exact_) heads.push_back(kernel_to_json(head.spec));
  } else {
    for (const auto& head : sparse_) {
      nlohmann::json h = kernel_to_json(head.spec);
      h["Z"] = matrix_to_json(head.inducing.Z);
      h["m_u"] = vector_to_json(head.inducing.m_u);
      h["S_u"] = matrix_to_json(head.inducing.S_u);
      heads.push_back(std::move(h));
    }
  }
  doc["heads"] = std::move(heads);
  return doc;
}

ObjectiveModel ObjectiveModel::from_json(const nlohmann::json& doc) {
  require(doc.at("version").get<int>() == 1,
          "ObjectiveModel: unsupported document version");
  ObjectiveModel model;
  model.mode_ = doc.at("mode").get<std::string>() == "exact"
                    ? GpMode::kExact
                    : GpMode::kSparseVariational;
  const auto& d = doc.at("data");
  model.data_.X = matrix_from_json(d.at("X"));
  model.data_.Y = matrix_from_json(d.at("Y"));
  model.data_.x_shift = vector_from_json(d.at("x_shift"));
  model.data_.x_scale = vector_from_json(d.at("x_scale"));
  model.data_.y_shift = vector_from_json(d.at("y_shift"));
  model.data_.y_scale = vector_from_json(d.at("y_scale"));
  for (const auto& h : doc.at("heads")) {
    if (model.mode_ == GpMode::kExact) {
      model.exact_.push_back({kernel_from_json(h), GramFactor{}, Vector{}});
    } else {
      SparseHead head;
      head.spec = kernel_from_json(h);
      head.inducing.Z = matrix_from_json(h.at("Z"));
      head.inducing.m_u = vector_from_json(h.at("m_u"));
      head.inducing.S_u = matrix_from_json(h.at("S_u"));
      model.sparse_.push_back(std::move(head));
    }
  }
  if (model.mode_ == GpMode::kExact)
    model.build_exact_state();
  else
    model.build_sparse_state();
  return model;
}

}  // namespace prefbed
