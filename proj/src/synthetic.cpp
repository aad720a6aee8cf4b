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

#include "noisecov/synthetic.hpp"

#include <numbers>

namespace noisecov {

std::string_view to_string(ScaleMode m) {
  return m == ScaleMode::kStructured ? "structured" : "identity";
}

ScaleMode parse_scale_mode(std::string_view s) {
  if (s == "structured") return ScaleMode::kStructured;
  if (s == "identity") return ScaleMode::kIdentity;
  throw InvalidInput("unknown scale mode '" + std::string(s) + "'");
}

void SyntheticParams::validate() const {
  if (N < 1 || C < 1 || K < 1 || P < 0) {
    throw InvalidInput("synthetic parameters need N, C, K >= 1 and P >= 0");
  }
  if (!(lambda_sigma > 0.0) || !(lambda_mu > 0.0) || !(beta > 0.0) || !(gamma >= 0.0)) {
    throw InvalidInput("synthetic kernel parameters out of range");
  }
}

ModelSpec SyntheticParams::model() const {
  ModelSpec s;
  s.N = N;
  s.P = P;
  s.variant = Variant::kScaledLowRankDiag;
  s.use_diag = false;
  s.observation = observation;
  const double T = 2.0 * std::numbers::pi;
  s.k_mu = ProductKernel({AxisKernel::periodic(gamma, beta, lambda_mu, T)});
  s.k_sigma = ProductKernel({AxisKernel::periodic(gamma, beta, lambda_sigma, T)});
  return s;
}

MatrixXd random_orthogonal(Index n, Rng& rng) {
  const MatrixXd A = standard_normal(n, n, rng);
  Eigen::HouseholderQR<MatrixXd> qr(A);
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
  const MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j) {
    if (R(j, j) < 0.0) {
      Q.col(j) = -Q.col(j);
    }
  }
  return Q;
}

MatrixXd synthetic_scale(Index N, ScaleMode mode, Rng& rng) {
  if (mode == ScaleMode::kIdentity) {
    return MatrixXd::Identity(N, N);
  }
  VectorXd s(N);
  for (Index i = 0; i < N; ++i) {
    const double t = N == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(N - 1);
    s(i) = std::pow(10.0, -5.0 * t);
  }
  const MatrixXd O = random_orthogonal(N, rng);
  MatrixXd LLt = O * s.asDiagonal() * O.transpose();
  LLt = 0.5 * (LLt + LLt.transpose()).eval();
  Eigen::LLT<MatrixXd> llt(LLt);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("synthetic scale matrix is not positive definite");
  }
  return llt.matrixL();
}

MatrixXd draw_trials(const VectorXd& mu, const MatrixXd& sigma, Index K, Observation obs,
                     const VectorXd& baseline, Rng& rng) {
  const Index N = mu.size();
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("trial covariance is not positive definite");
  }
  const MatrixXd Lc = llt.matrixL();
  MatrixXd Y(K, N);
  for (Index k = 0; k < K; ++k) {
    const VectorXd v = mu + Lc * standard_normal(N, rng);
    if (obs == Observation::kNormal) {
      Y.row(k) = v.transpose();
    } else {
      for (Index n = 0; n < N; ++n) {
        std::poisson_distribution<long> pois(softplus(baseline(n) + v(n)));
        Y(k, n) = static_cast<double>(pois(rng));
      }
    }
  }
  return Y;
}

SyntheticBundle generate_synthetic_bundle(const SyntheticParams& params, Index test_trials) {
  params.validate();
  if (test_trials < 0) {
    throw InvalidInput("test_trials must be >= 0");
  }
  const ModelSpec spec = params.model();
  SyntheticBundle out;
  const ConditionGrid grid = periodic_grid(params.C);

  Rng scale_rng(derive_seed(params.seed, 1));
  out.L = synthetic_scale(params.N, params.scale, scale_rng);
  out.r = VectorXd::Constant(params.N, params.baseline);
  PriorSample prior = sample_prior(spec, grid.coords, derive_seed(params.seed, 2), out.L);
  out.latents = prior.latents;
  out.latents.r = out.r;

  Rng train_rng(derive_seed(params.seed, 3));
  Rng test_rng(derive_seed(params.seed, 4));
  out.train.grid = grid;
  out.test.grid = grid;
  for (Index c = 0; c < params.C; ++c) {
    out.train.trials.push_back(draw_trials(prior.moments.mu[c], prior.moments.sigma[c], params.K,
                                           params.observation, out.r, train_rng));
    if (test_trials > 0) {
      out.test.trials.push_back(draw_trials(prior.moments.mu[c], prior.moments.sigma[c],
                                            test_trials, params.observation, out.r, test_rng));
    }
  }
  out.train.truth = prior.moments;
  if (test_trials > 0) {
    out.test.truth = prior.moments;
  }
  return out;
}

Dataset generate_synthetic(const SyntheticParams& params) {
  return generate_synthetic_bundle(params, 0).train;
}

}  // namespace noisecov
