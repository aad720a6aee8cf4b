/*
 * Copyright 2026 The noisecov Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "noisecov/posterior.hpp"

#include <algorithm>

namespace noisecov {

std::string_view to_string(PredictMode m) { return m == PredictMode::kSample ? "sample" : "plugin"; }

PredictMode parse_predict_mode(std::string_view s) {
  if (s == "sample") return PredictMode::kSample;
  if (s == "plugin") return PredictMode::kPlugIn;
  throw InvalidInput("unknown prediction mode '" + std::string(s) + "'");
}

GpWeights gp_weights(const ProductKernel& k, const Coords& X_train,
                     const Eigen::LLT<MatrixXd>& chol, const Eigen::Ref<const VectorXd>& x_star) {
  GpWeights out;
  const Index C = X_train.rows();
  for (Index i = 0; i < C; ++i) {
    if ((X_train.row(i).transpose().array() == x_star.array()).all()) {
      out.coincident = i;
      break;
    }
  }
  if (out.coincident >= 0) {
    out.w = VectorXd::Unit(C, out.coincident);
    out.variance = 0.0;
    return out;
  }
  const VectorXd ks = cross_kernel(k, X_train, x_star);
  out.w = chol.solve(ks);
  out.variance = std::max(0.0, k.diagonal() + solver_jitter(k) - ks.dot(out.w));
  return out;
}

GpWeights gp_derivative_weights(const ProductKernel& k, const Coords& X_train,
                                const Eigen::LLT<MatrixXd>& chol,
                                const Eigen::Ref<const VectorXd>& x_star, Index axis) {
  GpWeights out = gp_weights(k, X_train, chol, x_star);
  const GramDerivatives gd = gram_derivatives(k, X_train, x_star, axis);
  out.w_d = chol.solve(gd.cross);
  out.var_d = std::max(0.0, gd.second - gd.cross.dot(out.w_d));
  if (out.coincident >= 0) {
    out.cov_fd = 0.0;
  } else {
    // Prior covariance of f(x*) with f'(x*) vanishes for stationary kernels.
    out.cov_fd = -cross_kernel(k, X_train, x_star).dot(out.w_d);
  }
  return out;
}

GpPrediction condition_gp(const ProductKernel& k, const Coords& X_train,
                          const Eigen::Ref<const VectorXd>& values,
                          const Eigen::Ref<const VectorXd>& x_star) {
  k.validate();
  if (values.size() != X_train.rows()) {
    throw InvalidInput("condition_gp: one value per training point required");
  }
  const auto chol = factor_gram(k, X_train);
  const GpWeights w = gp_weights(k, X_train, chol, x_star);
  return {w.coincident >= 0 ? values(w.coincident) : w.w.dot(values), w.variance};
}

JointGpPrediction condition_gp_with_derivative(const ProductKernel& k, const Coords& X_train,
                                               const Eigen::Ref<const VectorXd>& values,
                                               const Eigen::Ref<const VectorXd>& x_star,
                                               Index axis) {
  k.validate();
  if (values.size() != X_train.rows()) {
    throw InvalidInput("condition_gp_with_derivative: one value per training point required");
  }
  const auto chol = factor_gram(k, X_train);
  const GpWeights w = gp_derivative_weights(k, X_train, chol, x_star, axis);
  JointGpPrediction out;
  out.mean << (w.coincident >= 0 ? values(w.coincident) : w.w.dot(values)), w.w_d.dot(values);
  out.covariance << w.variance, w.cov_fd, w.cov_fd, w.var_d;
  return out;
}

bool lift_to_spd(MatrixXd& sigma) {
  const Index n = sigma.rows();
  const double scale = sigma.trace() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double floor_scale = std::max(scale, 1e-300);
  if (lo >= 1e-10 * floor_scale) {
    return false;
  }
  sigma.diagonal().array() += 1e-8 * floor_scale - lo;
  return true;
}

namespace {

// Latent values at one query point.
struct PointLatents {
  VectorXd mu;
  MatrixXd U;  // N x P
  VectorXd z;
  VectorXd dmu;
  MatrixXd dU;
  VectorXd dz;
};

// Conditional draw (or mean) of every row of F at the query described by w.
// Draws eps for every row even when the variance is zero so that streams
// stay aligned across query points.
VectorXd conditional_rows(const MatrixXd& F, const GpWeights& w, Rng* rng) {
  VectorXd mean = w.coincident >= 0 ? VectorXd(F.col(w.coincident)) : VectorXd(F * w.w);
  if (rng) {
    mean += std::sqrt(w.variance) * standard_normal(F.rows(), *rng);
  }
  return mean;
}

// Joint conditional draw of (f, f') for every row of F.
void conditional_rows_joint(const MatrixXd& F, const GpWeights& w, Rng* rng, VectorXd& f,
                            VectorXd& df) {
  f = w.coincident >= 0 ? VectorXd(F.col(w.coincident)) : VectorXd(F * w.w);
  df = F * w.w_d;
  if (!rng) return;
  const VectorXd e0 = standard_normal(F.rows(), *rng);
  const VectorXd e1 = standard_normal(F.rows(), *rng);
  if (w.variance > 0.0) {
    const double s0 = std::sqrt(w.variance);
    const double c = w.cov_fd / s0;
    const double s1 = std::sqrt(std::max(0.0, w.var_d - c * c));
    f += s0 * e0;
    df += c * e0 + s1 * e1;
  } else {
    df += std::sqrt(w.var_d) * e1;
  }
}

struct QueryWeights {
  GpWeights mu;
  GpWeights sigma;
};

QueryWeights query_weights(const Posterior& post, const Eigen::Ref<const VectorXd>& x,
                           Index axis) {
  if (x.size() != post.grid.dims()) {
    throw InvalidInput("query point has the wrong dimension");
  }
  QueryWeights q;
  if (axis < 0) {
    q.mu = gp_weights(post.spec.k_mu, post.grid.coords, post.chol_mu(), x);
    q.sigma = gp_weights(post.spec.k_sigma, post.grid.coords, post.chol_sigma(), x);
  } else {
    q.mu = gp_derivative_weights(post.spec.k_mu, post.grid.coords, post.chol_mu(), x, axis);
    q.sigma =
        gp_derivative_weights(post.spec.k_sigma, post.grid.coords, post.chol_sigma(), x, axis);
  }
  return q;
}

PointLatents latents_at(const Posterior& post, const LatentState& train, const QueryWeights& qw,
                        Rng* rng, bool derivative) {
  const Index N = post.spec.N;
  const Index P = post.spec.P;
  PointLatents p;
  if (!derivative) {
    p.mu = conditional_rows(train.mu, qw.mu, rng);
    const VectorXd u = conditional_rows(train.U, qw.sigma, rng);
    p.U = Eigen::Map<const MatrixXd>(u.data(), N, P);
    p.z = conditional_rows(train.z, qw.sigma, rng);
    return p;
  }
  VectorXd u, du;
  conditional_rows_joint(train.mu, qw.mu, rng, p.mu, p.dmu);
  conditional_rows_joint(train.U, qw.sigma, rng, u, du);
  conditional_rows_joint(train.z, qw.sigma, rng, p.z, p.dz);
  p.U = Eigen::Map<const MatrixXd>(u.data(), N, P);
  p.dU = Eigen::Map<const MatrixXd>(du.data(), N, P);
  return p;
}

// Sigma at a point, lifted when needed. For the inverse variant the lift is
// applied to the precision before inversion. Also returns the inner matrix
// precision for the derivative chain rule.
MatrixXd covariance_at(const Posterior& post, const PointLatents& p, long& lifted) {
  const ModelSpec& spec = post.spec;
  const MatrixXd M = inner_matrix(p.U, p.z, spec.variant, spec.use_diag);
  MatrixXd S;
  if (spec.uses_scale()) {
    const MatrixXd L = post.theta.L.triangularView<Eigen::Lower>();
    S = L * M * L.transpose();
    S = 0.5 * (S + S.transpose()).eval();
  } else {
    S = M;
  }
  if (lift_to_spd(S)) ++lifted;
  if (spec.is_inverse()) {
    Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
      throw SingularMatrixError("interpolated precision is singular");
    }
    MatrixXd cov = llt.solve(MatrixXd::Identity(S.rows(), S.cols()));
    return 0.5 * (cov + cov.transpose());
  }
  return S;
}

MatrixXd covariance_derivative(const Posterior& post, const PointLatents& p,
                               const MatrixXd& sigma) {
  const ModelSpec& spec = post.spec;
  const Index N = spec.N;
  MatrixXd dM = MatrixXd::Zero(N, N);
  if (spec.P > 0) {
    const MatrixXd a = p.dU * p.U.transpose();
    dM = a + a.transpose();
  }
  if (spec.uses_diag_field()) {
    for (Index i = 0; i < N; ++i) {
      dM(i, i) += sigmoid(p.z(i)) * p.dz(i);
    }
  }
  if (spec.uses_scale()) {
    const MatrixXd L = post.theta.L.triangularView<Eigen::Lower>();
    dM = L * dM * L.transpose();
  }
  if (spec.is_inverse()) {
    dM = -sigma * dM * sigma;
  }
  return 0.5 * (dM + dM.transpose());
}

LatentState training_latents(const Posterior& post, std::uint64_t seed, Index s,
                             PredictMode mode) {
  if (mode == PredictMode::kPlugIn) {
    return post.point_latents();
  }
  Rng rng(derive_seed(seed, 2 * static_cast<std::uint64_t>(s)));
  return post.draw_latents(rng);
}

Rng query_rng(std::uint64_t seed, Index s, Index j) {
  return Rng(derive_seed(derive_seed(seed, 2 * static_cast<std::uint64_t>(s) + 1),
                         static_cast<std::uint64_t>(j)));
}

void check_samples(int samples) {
  if (samples < 1) {
    throw InvalidInput("at least one sample is required");
  }
}

}  // namespace

MomentSamples predict_moments(const Posterior& post, const Coords& x_star, int samples,
                              std::uint64_t seed, PredictMode mode) {
  check_samples(samples);
  MomentSamples out;
  out.seed = seed;
  out.x_star = x_star;
  const Index J = x_star.rows();
  std::vector<QueryWeights> weights;
  for (Index j = 0; j < J; ++j) {
    weights.push_back(query_weights(post, x_star.row(j).transpose(), -1));
  }
  out.mu.assign(static_cast<std::size_t>(J), {});
  out.sigma.assign(static_cast<std::size_t>(J), {});
  for (Index s = 0; s < samples; ++s) {
    const LatentState train = training_latents(post, seed, s, mode);
    for (Index j = 0; j < J; ++j) {
      Rng rng = query_rng(seed, s, j);
      const PointLatents p = latents_at(post, train, weights[j],
                                        mode == PredictMode::kSample ? &rng : nullptr, false);
      out.sigma[j].push_back(covariance_at(post, p, out.lifted));
      out.mu[j].push_back(p.mu);
    }
  }
  return out;
}

MomentField mean_moments(const MomentSamples& m) {
  MomentField out;
  for (std::size_t j = 0; j < m.mu.size(); ++j) {
    VectorXd mu = VectorXd::Zero(m.mu[j].front().size());
    MatrixXd sigma = MatrixXd::Zero(mu.size(), mu.size());
    for (std::size_t s = 0; s < m.mu[j].size(); ++s) {
      mu += m.mu[j][s];
      sigma += m.sigma[j][s];
    }
    const double inv = 1.0 / static_cast<double>(m.mu[j].size());
    out.mu.push_back(mu * inv);
    out.sigma.push_back(sigma * inv);
  }
  return out;
}

GradientSamples posterior_gradients(const Posterior& post, const Eigen::Ref<const VectorXd>& x_star,
                                    Index axis, int samples, std::uint64_t seed,
                                    PredictMode mode) {
  check_samples(samples);
  if (axis < 0 || axis >= post.grid.dims()) {
    throw InvalidInput("derivative axis " + std::to_string(axis) + " out of range");
  }
  GradientSamples out;
  out.seed = seed;
  out.x_star = x_star;
  out.axis = axis;
  const QueryWeights qw = query_weights(post, x_star, axis);
  for (Index s = 0; s < samples; ++s) {
    const LatentState train = training_latents(post, seed, s, mode);
    Rng rng = query_rng(seed, s, 0);
    const PointLatents p =
        latents_at(post, train, qw, mode == PredictMode::kSample ? &rng : nullptr, true);
    MatrixXd sigma = covariance_at(post, p, out.lifted);
    out.dsigma.push_back(covariance_derivative(post, p, sigma));
    out.sigma.push_back(std::move(sigma));
    out.mu.push_back(p.mu);
    out.dmu.push_back(p.dmu);
  }
  return out;
}

namespace {

void check_test_set(const Posterior& post, const Dataset& test) {
  test.validate(true);
  if (test.neurons() != post.spec.N) {
    throw InvalidInput("test set neuron count does not match the model");
  }
  if (test.grid.dims() != post.grid.dims()) {
    throw InvalidInput("test grid dimension does not match the model");
  }
}

}  // namespace

double heldout_loglik(const Posterior& post, const Dataset& test, HeldoutMode mode,
                      std::uint64_t seed, long* lifted) {
  check_test_set(post, test);
  const int S = mode.kind == HeldoutMode::kSingleSample ? 1 : mode.samples;
  check_samples(S);
  const Index C = test.conditions();
  std::vector<QueryWeights> weights;
  for (Index c = 0; c < C; ++c) {
    weights.push_back(query_weights(post, test.grid.coords.row(c).transpose(), -1));
  }
  // per_trial[c](k, s)
  std::vector<MatrixXd> per_trial;
  for (Index c = 0; c < C; ++c) per_trial.emplace_back(test.trials[c].rows(), S);
  long lift_count = 0;
  for (Index s = 0; s < S; ++s) {
    const LatentState train = training_latents(post, seed, s, PredictMode::kSample);
    for (Index c = 0; c < C; ++c) {
      if (test.trials[c].rows() == 0) continue;
      Rng rng = query_rng(seed, s, c);
      const PointLatents p = latents_at(post, train, weights[c], &rng, false);
      const MatrixXd sigma = covariance_at(post, p, lift_count);
      for (Index k = 0; k < test.trials[c].rows(); ++k) {
        per_trial[c](k, s) = loglik_normal(test.trials[c].row(k), p.mu, sigma, c);
      }
    }
  }
  if (lifted) *lifted = lift_count;
  double total = 0.0;
  for (Index c = 0; c < C; ++c) {
    for (Index k = 0; k < per_trial[c].rows(); ++k) {
      total += log_mean_exp(per_trial[c].row(k).transpose());
    }
  }
  return total;
}

namespace {

void require_poisson(const Posterior& post) {
  if (post.spec.observation != Observation::kPoisson) {
    throw InvalidInput("operation requires a Poisson observation model");
  }
}

VectorXd draw_counts(const VectorXd& gain, const VectorXd& r, Rng& rng) {
  VectorXd y(gain.size());
  for (Index n = 0; n < gain.size(); ++n) {
    std::poisson_distribution<long> pois(softplus(r(n) + gain(n)));
    y(n) = static_cast<double>(pois(rng));
  }
  return y;
}

VectorXd draw_gain(const VectorXd& mu, const MatrixXd& sigma, Rng& rng) {
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("gain covariance is not positive definite");
  }
  return mu + llt.matrixL() * standard_normal(mu.size(), rng);
}

}  // namespace

MatrixXd poisson_summary_stats(const Posterior& post, const Eigen::Ref<const VectorXd>& x,
                               SummaryStatistic statistic, int samples, std::uint64_t seed) {
  require_poisson(post);
  check_samples(samples);
  const QueryWeights qw = query_weights(post, x, -1);
  const Index N = post.spec.N;
  MatrixXd Y(N, samples);
  long lifted = 0;
  for (Index s = 0; s < samples; ++s) {
    const LatentState train = training_latents(post, seed, s, PredictMode::kSample);
    Rng rng = query_rng(seed, s, 0);
    const PointLatents p = latents_at(post, train, qw, &rng, false);
    const MatrixXd sigma = covariance_at(post, p, lifted);
    const VectorXd g = draw_gain(p.mu, sigma, rng);
    Y.col(s) = draw_counts(g, post.theta.r, rng);
  }
  const VectorXd mean = Y.rowwise().mean();
  if (statistic == SummaryStatistic::kMean) {
    return mean;
  }
  const MatrixXd centered = Y.colwise() - mean;
  MatrixXd cov = centered * centered.transpose() / static_cast<double>(samples);
  return 0.5 * (cov + cov.transpose());
}

double marginal_loglik_poisson(const Posterior& post, const Dataset& test, int samples,
                               std::uint64_t seed) {
  require_poisson(post);
  check_samples(samples);
  check_test_set(post, test);
  const Index C = test.conditions();
  std::vector<QueryWeights> weights;
  for (Index c = 0; c < C; ++c) {
    weights.push_back(query_weights(post, test.grid.coords.row(c).transpose(), -1));
    check_counts(test.trials[c]);
  }
  std::vector<MatrixXd> per_trial;
  for (Index c = 0; c < C; ++c) per_trial.emplace_back(test.trials[c].rows(), samples);
  long lifted = 0;
  for (Index s = 0; s < samples; ++s) {
    const LatentState train = training_latents(post, seed, s, PredictMode::kSample);
    for (Index c = 0; c < C; ++c) {
      if (test.trials[c].rows() == 0) continue;
      Rng rng = query_rng(seed, s, c);
      const PointLatents p = latents_at(post, train, weights[c], &rng, false);
      const MatrixXd sigma = covariance_at(post, p, lifted);
      Eigen::LLT<MatrixXd> llt(sigma);
      if (llt.info() != Eigen::Success) {
        throw SingularMatrixError("gain covariance is not positive definite", c);
      }
      const MatrixXd Lg = llt.matrixL();
      for (Index k = 0; k < test.trials[c].rows(); ++k) {
        const VectorXd g = p.mu + Lg * standard_normal(post.spec.N, rng);
        per_trial[c](k, s) =
            loglik_poisson_given_gain(test.trials[c].row(k).transpose(), g, post.theta.r);
      }
    }
  }
  double total = 0.0;
  for (Index c = 0; c < C; ++c) {
    for (Index k = 0; k < per_trial[c].rows(); ++k) {
      total += log_mean_exp(per_trial[c].row(k).transpose());
    }
  }
  return total;
}

}  // namespace noisecov
