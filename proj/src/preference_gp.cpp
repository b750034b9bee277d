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

#include "prefbed/preference_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace prefbed {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLn2 = std::numbers::ln2;
constexpr double kCdfCap = 1.0 - 0x1.0p-53;
// Standing nugget on the item Gram matrix. The loop revisits nearly
// identical points, so K is routinely close to singular and its explicit
// inverse must stay bounded.
constexpr double kItemNugget = 1e-6;

prefbed::Matrix item_gram(const prefbed::KernelSpec& spec,
                          const prefbed::Matrix& std_items) {
  prefbed::Matrix k = kernel_matrix(spec, std_items, /*add_noise=*/false);
  k.diagonal().array() += kItemNugget;
  return k;
}
}  // namespace

double normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double t) {
  // Evaluate the upper branch and reflect, so cdf(t) + cdf(-t) == 1 exactly
  // (1 - p is exact for p in [0.5, 1]).
  if (t < 0.0) return 1.0 - normal_cdf(-t);
  const double p = 0.5 * std::erfc(-t / kSqrt2);
  return std::min(p, kCdfCap);
}

double normal_log_cdf(double t) {
  // erfc is cancellation-free for negative arguments, so evaluate the tail
  // directly; the reflected 1 - Phi(-t) form used by normal_cdf would lose
  // all precision below t = -7 or so.
  if (t > -36.0) return std::log(0.5 * std::erfc(-t / kSqrt2));
  // Deep tail: Phi(t) = pdf(t)/(-t) * (1 - 1/t^2 + 3/t^4 - 15/t^6).
  const double t2 = t * t;
  const double series = 1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2);
  return -0.5 * t * t - 0.5 * std::log(2.0 * std::numbers::pi) -
         std::log(-t) + std::log(series);
}

double inverse_mills(double t) {
  if (t < -30.0) {
    const double t2 = t * t;
    return -t / (1.0 - 1.0 / t2 + 3.0 / (t2 * t2) - 15.0 / (t2 * t2 * t2));
  }
  return std::exp(std::log(normal_pdf(t)) - normal_log_cdf(t));
}

double probit_likelihood(double u1, double u2, double lambda) {
  require(lambda > 0.0, "probit_likelihood: lambda must be positive");
  return normal_cdf((u1 - u2) / (kSqrt2 * lambda));
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

int PreferenceDataset::add_item(const Vector& y) {
  for (size_t i = 0; i < items.size(); ++i)
    if (items[i].size() == y.size() && items[i] == y)
      return static_cast<int>(i);
  items.push_back(y);
  return static_cast<int>(items.size() - 1);
}

void PreferenceDataset::add_observation(const Vector& y1, const Vector& y2,
                                        int verdict) {
  require(verdict == 1 || verdict == 2, "add_observation: verdict must be 1|2");
  const int a = add_item(y1);
  const int b = add_item(y2);
  if (a == b) return;  // self-collapsed pair carries no information
  duels.push_back({a, b, verdict});
}

void PreferenceDataset::validate() const {
  const int n = static_cast<int>(items.size());
  for (const Duel& d : duels) {
    require(d.a >= 0 && d.a < n && d.b >= 0 && d.b < n,
            "PreferenceDataset: duel index out of range");
    require(d.a != d.b, "PreferenceDataset: self-duel");
    require(d.verdict == 1 || d.verdict == 2,
            "PreferenceDataset: verdict must be 1|2");
  }
  for (size_t i = 0; i < items.size(); ++i)
    require(items[i].size() == items[0].size(),
            "PreferenceDataset: inconsistent item dimension");
}

// ---------------------------------------------------------------------------
// Laplace fit
// ---------------------------------------------------------------------------

namespace {

struct NewtonResult {
  Vector u_hat;
  Matrix w;  // negative log-likelihood Hessian at the mode
  double penalized_log_posterior = 0.0;
  double residual = 0.0;
  bool converged = false;
};

double pairwise_log_lik(const std::vector<Duel>& duels, const Vector& u,
                        double lambda) {
  double ll = 0.0;
  for (const Duel& d : duels) {
    const int p = d.verdict == 1 ? d.a : d.b;
    const int q = d.verdict == 1 ? d.b : d.a;
    ll += normal_log_cdf((u[p] - u[q]) / (kSqrt2 * lambda));
  }
  return ll;
}

void log_lik_derivatives(const std::vector<Duel>& duels, const Vector& u,
                         double lambda, Vector* grad, Matrix* w) {
  const Eigen::Index n = u.size();
  grad->setZero(n);
  w->setZero(n, n);
  const double inv = 1.0 / (kSqrt2 * lambda);
  for (const Duel& d : duels) {
    const int p = d.verdict == 1 ? d.a : d.b;
    const int q = d.verdict == 1 ? d.b : d.a;
    const double t = (u[p] - u[q]) * inv;
    const double r = inverse_mills(t);
    (*grad)[p] += r * inv;
    (*grad)[q] -= r * inv;
    const double c = r * (r + t) * inv * inv;  // >= 0
    (*w)(p, p) += c;
    (*w)(q, q) += c;
    (*w)(p, q) -= c;
    (*w)(q, p) -= c;
  }
}

// Newton ascent of log p(duels|u) - u^T K^{-1} u / 2 from u = 0, with
// backtracking (up to 20 halvings per step).
NewtonResult newton_mode(const std::vector<Duel>& duels, const Matrix& kinv,
                         double lambda, int max_iters, double tol) {
  const Eigen::Index n = kinv.rows();
  NewtonResult res;
  Vector u = Vector::Zero(n);
  double objective = pairwise_log_lik(duels, u, lambda);
  Vector grad(n);
  Matrix w(n, n);
  for (int iter = 0; iter < max_iters; ++iter) {
    log_lik_derivatives(duels, u, lambda, &grad, &w);
    const Vector full_grad = grad - kinv * u;
    res.residual = full_grad.lpNorm<Eigen::Infinity>();
    if (res.residual < tol) {
      res.converged = true;
      break;
    }
    const GramFactor a = factor_psd(kinv + w);
    const Vector u_target = a.solve(Vector(w * u + grad));
    const Vector direction = u_target - u;
    double step = 1.0;
    bool improved = false;
    for (int h = 0; h <= 20; ++h) {
      const Vector u_try = u + step * direction;
      const double obj_try = pairwise_log_lik(duels, u_try, lambda) -
                             0.5 * u_try.dot(kinv * u_try);
      if (std::isfinite(obj_try) && obj_try >= objective) {
        u = u_try;
        objective = obj_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      if (res.residual < 1e-3) break;  // numerically stuck at the mode
      throw FittingError("fit_laplace: Newton failed to improve after 20 halvings");
    }
  }
  log_lik_derivatives(duels, u, lambda, &grad, &w);
  res.residual = (grad - kinv * u).lpNorm<Eigen::Infinity>();
  res.converged = res.converged || res.residual < tol;
  res.u_hat = std::move(u);
  res.w = std::move(w);
  res.penalized_log_posterior =
      pairwise_log_lik(duels, res.u_hat, lambda) -
      0.5 * res.u_hat.dot(kinv * res.u_hat);
  return res;
}

// Expectation propagation over the item utilities with one probit site per
// duel, each acting on the difference u_p - u_q. Moment matching fixes what
// the mode-based Gaussian gets wrong for skewed posteriors: the mean. Sites
// are visited in a fixed order so the result is deterministic.
bool ep_moments(const std::vector<Duel>& duels, const Matrix& k_prior,
                double lambda, int max_sweeps, double tol, Vector* mean,
                Matrix* cov) {
  const Eigen::Index n = k_prior.rows();
  const double c2 = 2.0 * lambda * lambda;
  Matrix sigma = k_prior;
  Vector mu = Vector::Zero(n);
  Vector b = Vector::Zero(n);  // accumulated nu in item coordinates
  std::vector<double> tau(duels.size(), 0.0), nu(duels.size(), 0.0);
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double max_delta = 0.0;
    for (size_t k = 0; k < duels.size(); ++k) {
      const int p = duels[k].verdict == 1 ? duels[k].a : duels[k].b;
      const int q = duels[k].verdict == 1 ? duels[k].b : duels[k].a;
      const double v_k =
          sigma(p, p) + sigma(q, q) - 2.0 * sigma(p, q);
      const double m_k = mu[p] - mu[q];
      if (v_k <= 1e-12) continue;
      const double cav_prec = 1.0 / v_k - tau[k];
      if (cav_prec <= 1e-12) continue;
      const double v_cav = 1.0 / cav_prec;
      const double m_cav = v_cav * (m_k / v_k - nu[k]);
      // Tilted moments of N(s; m_cav, v_cav) * Phi(s / sqrt(c2)).
      const double denom = std::sqrt(c2 + v_cav);
      const double t = m_cav / denom;
      const double a = inverse_mills(t);
      const double m_hat = m_cav + v_cav * a / denom;
      const double shrink = v_cav * a * (t + a) / (c2 + v_cav);
      const double v_hat = std::max(1e-12, v_cav * (1.0 - shrink));
      const double tau_new = std::max(0.0, 1.0 / v_hat - cav_prec);
      const double nu_new = m_hat / v_hat - m_cav * cav_prec;
      const double d_tau = tau_new - tau[k];
      const double d_nu = nu_new - nu[k];
      const double scale = 1.0 + d_tau * v_k;
      if (scale <= 1e-12) continue;
      const Vector sw = sigma.col(p) - sigma.col(q);
      sigma.noalias() -= (d_tau / scale) * (sw * sw.transpose());
      b[p] += d_nu;
      b[q] -= d_nu;
      mu.noalias() = sigma * b;
      tau[k] = tau_new;
      nu[k] = nu_new;
      max_delta = std::max({max_delta, std::abs(d_tau), std::abs(d_nu)});
    }
    converged = max_delta < tol;
  }
  sigma = 0.5 * (sigma + sigma.transpose());
  *mean = std::move(mu);
  *cov = std::move(sigma);
  return converged;
}

}  // namespace

PreferenceModel PreferenceModel::prior(const KernelSpec& kernel,
                                       double lambda) {
  kernel.validate();
  require(lambda > 0.0, "PreferenceModel::prior: lambda must be positive");
  PreferenceModel model;
  model.kernel_ = kernel;
  model.lambda_ = lambda;
  model.item_shift_ = Vector::Zero(kernel.dim());
  model.item_scale_ = Vector::Ones(kernel.dim());
  model.build_predictive_state();
  return model;
}

PreferenceModel PreferenceModel::fit_laplace(const PreferenceDataset& data,
                                             const KernelSpec& init,
                                             double lambda_init,
                                             const LaplaceFitOptions& opt) {
  data.validate();
  require(!data.duels.empty(), "fit_laplace: need at least one duel");
  require(init.dim() == data.items[0].size(),
          "fit_laplace: kernel dimension mismatch");
  require(lambda_init > 0.0, "fit_laplace: lambda must be positive");

  PreferenceModel model;
  model.items_ = data.items;
  model.duels_ = data.duels;
  const Eigen::Index n = static_cast<Eigen::Index>(data.items.size());
  const Eigen::Index d = data.items[0].size();

  // Standardize items so the lengthscale grid is unitless.
  Matrix raw(n, d);
  for (Eigen::Index i = 0; i < n; ++i) raw.row(i) = data.items[i];
  model.item_shift_ = raw.colwise().mean();
  model.item_scale_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(
        (raw.col(j).array() - model.item_shift_[j]).square().sum() /
        std::max<double>(1, n - 1));
    model.item_scale_[j] = sd > 1e-12 ? sd : 1.0;
  }
  Matrix std_items = (raw.rowwise() - model.item_shift_.transpose())
                         .array()
                         .rowwise() /
                     model.item_scale_.transpose().array();

  struct Candidate {
    KernelSpec spec;
    double lambda;
  };
  std::vector<Candidate> grid;
  if (opt.select_hyperparameters) {
    for (double ls : opt.lengthscale_grid)
      for (double sv : opt.signal_grid) {
        KernelSpec spec = init;
        spec.lengthscales = Vector::Constant(d, ls);
        spec.signal_variance = sv;
        spec.noise_variance = 0.0;
        for (double lam : opt.lambda_grid) grid.push_back({spec, lam});
      }
  } else {
    KernelSpec spec = init;
    spec.noise_variance = 0.0;
    grid.push_back({spec, lambda_init});
  }

  double best_evidence = -std::numeric_limits<double>::infinity();
  bool any = false;
  KernelSpec prev_spec;
  GramFactor kf;
  Matrix kinv;
  for (const Candidate& cand : grid) {
    // K (and K^{-1}) depend only on the kernel; reuse across the lambda grid.
    if (!any || cand.spec.lengthscales != prev_spec.lengthscales ||
        cand.spec.signal_variance != prev_spec.signal_variance) {
      kf = factor_psd(item_gram(cand.spec, std_items));
      kinv = kf.solve(Matrix(Matrix::Identity(n, n)));
      kinv = 0.5 * (kinv + kinv.transpose());
      prev_spec = cand.spec;
    }
    NewtonResult newton;
    try {
      newton = newton_mode(model.duels_, kinv, cand.lambda,
                           opt.max_newton_iters, opt.newton_tol);
    } catch (const FittingError&) {
      if (opt.select_hyperparameters) continue;  // drop this grid point
      throw;
    }
    // Laplace evidence: psi(u_hat) - log|I + K W| / 2, with
    // log|I + K W| = log|K^{-1} + W| + log|K|.
    const GramFactor af = factor_psd(kinv + newton.w);
    const double evidence = newton.penalized_log_posterior -
                            0.5 * (af.log_det() + kf.log_det());
    any = true;
    if (evidence > best_evidence) {
      best_evidence = evidence;
      model.kernel_ = cand.spec;
      model.lambda_ = cand.lambda;
      model.u_hat_ = newton.u_hat;
      model.laplace_cov_ = af.solve(Matrix(Matrix::Identity(n, n)));
      model.laplace_cov_ =
          0.5 * (model.laplace_cov_ + model.laplace_cov_.transpose());
      model.converged_ = newton.converged;
      model.newton_residual_ = newton.residual;
      model.approx_log_marginal_ = evidence;
    }
  }
  if (!any) throw FittingError("fit_laplace: no hyperparameter candidate fit");
  model.items_std_ = std::move(std_items);
  model.posterior_mean_ = model.u_hat_;
  model.posterior_cov_ = model.laplace_cov_;
  if (opt.refine_moments) {
    const Matrix k_best = item_gram(model.kernel_, model.items_std_);
    ep_moments(model.duels_, k_best, model.lambda_, opt.max_ep_sweeps,
               opt.ep_tol, &model.posterior_mean_, &model.posterior_cov_);
  }
  model.build_predictive_state();
  return model;
}

void PreferenceModel::build_predictive_state() {
  const Eigen::Index n = static_cast<Eigen::Index>(items_.size());
  if (n == 0) {
    alpha_.resize(0);
    c_matrix_.resize(0, 0);
    items_std_.resize(0, kernel_.dim());
    u_hat_.resize(0);
    laplace_cov_.resize(0, 0);
    posterior_mean_.resize(0);
    posterior_cov_.resize(0, 0);
    return;
  }
  if (items_std_.rows() != n) {
    items_std_.resize(n, items_[0].size());
    for (Eigen::Index i = 0; i < n; ++i)
      items_std_.row(i) = standardize(items_[i]);
  }
  if (posterior_mean_.size() != n) {
    posterior_mean_ = u_hat_;
    posterior_cov_ = laplace_cov_;
  }
  const GramFactor kf = factor_psd(item_gram(kernel_, items_std_));
  const Matrix kinv = kf.solve(Matrix(Matrix::Identity(n, n)));
  alpha_ = kf.solve(posterior_mean_);
  // C = K^{-1} - K^{-1} Sigma K^{-1}; cov(y1,y2) = k(y1,y2) - k1^T C k2.
  c_matrix_ = kinv - kinv * posterior_cov_ * kinv;
  c_matrix_ = 0.5 * (c_matrix_ + c_matrix_.transpose());
}

Vector PreferenceModel::standardize(const Vector& y) const {
  return (y - item_shift_).cwiseQuotient(item_scale_);
}

Vector PreferenceModel::kernel_vector(const Vector& y) const {
  const Vector ys = standardize(y);
  return cross_kernel(kernel_, items_std_, ys.transpose());
}

std::pair<double, double> PreferenceModel::predict_utility(
    const Vector& y) const {
  require(y.size() == kernel_.dim(), "predict_utility: dimension mismatch");
  if (items_.empty()) return {0.0, kernel_.signal_variance};
  const Vector k = kernel_vector(y);
  const double mean = k.dot(alpha_);
  double var = kernel_.signal_variance - k.dot(c_matrix_ * k);
  return {mean, std::max(0.0, var)};
}

PreferenceModel::JointPrediction PreferenceModel::predict_joint(
    const Vector& y1, const Vector& y2) const {
  require(y1.size() == kernel_.dim() && y2.size() == kernel_.dim(),
          "predict_joint: dimension mismatch");
  JointPrediction joint{};
  const double k12 =
      kernel_eval(kernel_, standardize(y1), standardize(y2));
  if (items_.empty()) {
    joint.var1 = joint.var2 = kernel_.signal_variance;
    joint.cov = k12;
    return joint;
  }
  const Vector k1 = kernel_vector(y1);
  const Vector k2 = kernel_vector(y2);
  const Vector ck2 = c_matrix_ * k2;
  joint.mean1 = k1.dot(alpha_);
  joint.mean2 = k2.dot(alpha_);
  joint.var1 =
      std::max(0.0, kernel_.signal_variance - k1.dot(c_matrix_ * k1));
  joint.var2 = std::max(0.0, kernel_.signal_variance - k2.dot(ck2));
  joint.cov = k12 - k1.dot(ck2);
  return joint;
}

double PreferenceModel::predict_preference(const Vector& y1,
                                           const Vector& y2) const {
  const JointPrediction j = predict_joint(y1, y2);
  const double s2 = std::max(0.0, j.var1 + j.var2 - 2.0 * j.cov);
  return normal_cdf((j.mean1 - j.mean2) /
                    std::sqrt(2.0 * lambda_ * lambda_ + s2));
}

double PreferenceModel::info_gain(const Vector& y1, const Vector& y2, int mc,
                                  Rng& rng) const {
  require(mc >= 2, "info_gain: mc must be >= 2");
  return bald_binary_mi(predict_joint(y1, y2), lambda_, mc, rng);
}

double bald_binary_mi(const PreferenceModel::JointPrediction& joint,
                      double lambda, int mc, Rng& rng) {
  const double s2 = std::max(0.0, joint.var1 + joint.var2 - 2.0 * joint.cov);
  const double mean_p = normal_cdf((joint.mean1 - joint.mean2) /
                                   std::sqrt(2.0 * lambda * lambda + s2));
  const auto binary_entropy_at = [](double t) {
    // H_b(Phi(t)) computed through log-cdfs for tail stability.
    const double p = normal_cdf(t);
    const double q = normal_cdf(-t);
    return -p * normal_log_cdf(t) - q * normal_log_cdf(-t);
  };
  // The outcome depends on the latents only through
  // t = (h1 - h2) / (sqrt(2) lambda) ~ N(mt, st^2).
  const double mt = (joint.mean1 - joint.mean2) / (kSqrt2 * lambda);
  const double st = std::sqrt(s2) / (kSqrt2 * lambda);
  double expected_entropy = 0.0;
  const int pairs = std::max(1, mc / 2);
  for (int i = 0; i < pairs; ++i) {
    const double xi = rng.normal();  // antithetic pair keeps swap symmetry
    expected_entropy += binary_entropy_at(mt + st * xi);
    expected_entropy += binary_entropy_at(mt - st * xi);
  }
  expected_entropy /= 2.0 * pairs;
  const double marginal_entropy = -mean_p * std::log(mean_p) -
                                  (1.0 - mean_p) * std::log(1.0 - mean_p);
  return std::clamp(marginal_entropy - expected_entropy, 0.0, kLn2);
}

PreferenceModel::Prepared PreferenceModel::prepare(const Matrix& Ys) const {
  require(Ys.cols() == kernel_.dim(), "prepare: dimension mismatch");
  const Eigen::Index q = Ys.rows();
  const Eigen::Index n = items_std_.rows();
  Prepared prep;
  prep.std_rows.resize(q, Ys.cols());
  for (Eigen::Index i = 0; i < q; ++i)
    prep.std_rows.row(i) = standardize(Ys.row(i).transpose());
  prep.k_cols = n > 0 ? cross_kernel(kernel_, items_std_, prep.std_rows)
                      : Matrix(0, q);
  if (n > 0) {
    prep.ck_cols = c_matrix_ * prep.k_cols;
    prep.means = prep.k_cols.transpose() * alpha_;
  } else {
    prep.ck_cols.resize(0, q);
    prep.means = Vector::Zero(q);
  }
  prep.vars.resize(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const double reduction =
        n > 0 ? prep.k_cols.col(i).dot(prep.ck_cols.col(i)) : 0.0;
    prep.vars[i] = std::max(0.0, kernel_.signal_variance - reduction);
  }
  return prep;
}

PreferenceModel::JointPrediction PreferenceModel::joint_from_prepared(
    const Prepared& a, int ia, const Prepared& b, int ib) const {
  JointPrediction joint{};
  joint.mean1 = a.means[ia];
  joint.mean2 = b.means[ib];
  joint.var1 = a.vars[ia];
  joint.var2 = b.vars[ib];
  const double k12 =
      kernel_eval(kernel_, a.std_rows.row(ia).transpose(), b.std_rows.row(ib).transpose());
  const double cross = items_std_.rows() > 0
                           ? a.k_cols.col(ia).dot(b.ck_cols.col(ib))
                           : 0.0;
  joint.cov = k12 - cross;
  return joint;
}

Vector PreferenceModel::utility_means(const Matrix& Ys) const {
  require(Ys.cols() == kernel_.dim(), "utility_means: dimension mismatch");
  const Eigen::Index q = Ys.rows();
  const Eigen::Index n = items_std_.rows();
  if (n == 0) return Vector::Zero(q);
  Matrix std_rows(q, Ys.cols());
  for (Eigen::Index i = 0; i < q; ++i)
    std_rows.row(i) = standardize(Ys.row(i).transpose());
  return cross_kernel(kernel_, std_rows, items_std_) * alpha_;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

nlohmann::json vec_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vec_from(const nlohmann::json& doc) {
  Vector v(doc.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = doc[i].get<double>();
  return v;
}

nlohmann::json mat_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back(vec_json(m.row(i).transpose()));
  return rows;
}

Matrix mat_from(const nlohmann::json& doc, Eigen::Index cols_hint) {
  const Eigen::Index rows = doc.size();
  const Eigen::Index cols = rows > 0 ? doc[0].size() : cols_hint;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = doc[i][j].get<double>();
  return m;
}

}  // namespace

nlohmann::json PreferenceModel::to_json() const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["kind"] = "preference_gp";
  doc["kernel"] = {{"family", to_string(kernel_.family)},
                   {"lengthscales", vec_json(kernel_.lengthscales)},
                   {"signal_variance", kernel_.signal_variance},
                   {"noise_variance", kernel_.noise_variance}};
  doc["lambda"] = lambda_;
  nlohmann::json items = nlohmann::json::array();
  for (const Vector& y : items_) items.push_back(vec_json(y));
  doc["items"] = std::move(items);
  doc["item_shift"] = vec_json(item_shift_);
  doc["item_scale"] = vec_json(item_scale_);
  nlohmann::json duels = nlohmann::json::array();
  for (const Duel& d : duels_)
    duels.push_back({{"a", d.a}, {"b", d.b}, {"verdict", d.verdict}});
  doc["duels"] = std::move(duels);
  doc["map_utilities"] = vec_json(u_hat_);
  doc["laplace_cov"] = mat_json(laplace_cov_);
  doc["posterior_mean"] = vec_json(posterior_mean_);
  doc["posterior_cov"] = mat_json(posterior_cov_);
  doc["converged"] = converged_;
  doc["newton_residual"] = newton_residual_;
  doc["approx_log_marginal"] = approx_log_marginal_;
  return doc;
}

PreferenceModel PreferenceModel::from_json(const nlohmann::json& doc) {
  require(doc.at("version").get<int>() == 1,
          "PreferenceModel: unsupported document version");
  PreferenceModel model;
  const auto& k = doc.at("kernel");
  model.kernel_.family =
      kernel_family_from_string(k.at("family").get<std::string>());
  model.kernel_.lengthscales = vec_from(k.at("lengthscales"));
  model.kernel_.signal_variance = k.at("signal_variance").get<double>();
  model.kernel_.noise_variance = k.at("noise_variance").get<double>();
  model.lambda_ = doc.at("lambda").get<double>();
  for (const auto& item : doc.at("items")) model.items_.push_back(vec_from(item));
  model.item_shift_ = vec_from(doc.at("item_shift"));
  model.item_scale_ = vec_from(doc.at("item_scale"));
  for (const auto& d : doc.at("duels"))
    model.duels_.push_back({d.at("a").get<int>(), d.at("b").get<int>(),
                            d.at("verdict").get<int>()});
  model.u_hat_ = vec_from(doc.at("map_utilities"));
  model.laplace_cov_ = mat_from(doc.at("laplace_cov"), model.u_hat_.size());
  model.posterior_mean_ = vec_from(doc.at("posterior_mean"));
  model.posterior_cov_ = mat_from(doc.at("posterior_cov"), model.u_hat_.size());
  model.converged_ = doc.at("converged").get<bool>();
  model.newton_residual_ = doc.at("newton_residual").get<double>();
  model.approx_log_marginal_ = doc.at("approx_log_marginal").get<double>();
  model.build_predictive_state();
  return model;
}

}  // namespace prefbed
