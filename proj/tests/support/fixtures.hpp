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

// Small shared builders for the test binaries.

#ifndef NOISECOV_TESTS_FIXTURES_HPP_
#define NOISECOV_TESTS_FIXTURES_HPP_

#include <cmath>
#include <numbers>
#include <vector>

#include "noisecov/dataset.hpp"
#include "noisecov/inference.hpp"
#include "noisecov/model.hpp"
#include "noisecov/posterior.hpp"

namespace fixtures {

using namespace noisecov;

inline ModelSpec tiny_spec(Index N, Index P, Variant v, Observation o = Observation::kNormal,
                           bool use_diag = true) {
  ModelSpec s;
  s.N = N;
  s.P = P;
  s.variant = v;
  s.use_diag = use_diag;
  s.observation = o;
  s.k_mu = ProductKernel({AxisKernel::periodic(1e-3, 1.0, 1.0, 2.0 * std::numbers::pi)});
  s.k_sigma = ProductKernel({AxisKernel::periodic(1e-3, 1.0, 1.0, 2.0 * std::numbers::pi)});
  return s;
}

/// Dataset drawn from the prior of `spec` on a periodic grid.
inline Dataset prior_dataset(const ModelSpec& spec, Index C, Index K, std::uint64_t seed) {
  Dataset d;
  d.grid = periodic_grid(C);
  MatrixXd L = MatrixXd::Identity(spec.N, spec.N);
  PriorSample ps = sample_prior(spec, d.grid.coords, seed, L);
  Rng rng(derive_seed(seed, 99));
  for (Index c = 0; c < C; ++c) {
    const MatrixXd& S = ps.moments.sigma[c];
    Eigen::LLT<MatrixXd> llt(S);
    MatrixXd Y(K, spec.N);
    for (Index k = 0; k < K; ++k) {
      const VectorXd e = standard_normal(spec.N, rng);
      VectorXd y = ps.moments.mu[c] + MatrixXd(llt.matrixL()) * e;
      if (spec.observation == Observation::kPoisson) {
        for (Index n = 0; n < spec.N; ++n) {
          std::poisson_distribution<int> pois(softplus(y(n)));
          y(n) = pois(rng);
        }
      }
      Y.row(k) = y.transpose();
    }
    d.trials.push_back(std::move(Y));
  }
  d.truth = ps.moments;
  return d;
}

/// Random variational state around a valid initialization.
inline VectorXd perturbed_flat(const Objective& obj, const ModelSpec& spec, const Dataset& d,
                               Family family, std::uint64_t seed) {
  FitConfig cfg;
  cfg.family = family;
  cfg.seed = seed;
  VariationalState q;
  Params theta;
  initialize(spec, d, cfg, q, theta);
  const Layout& lay = obj.layout(family);
  VectorXd flat = lay.pack(q, theta);
  Rng rng(derive_seed(seed, 7));
  flat += 0.05 * standard_normal(flat.size(), rng);
  if (family == Family::kGaussian) {
    // Keep the scales moderate so the draws stay near the means.
    flat.segment(lay.scale_offset(), lay.latents()).array() = std::log(0.05);
  }
  return flat;
}

/// Posterior whose variational means are a prior draw on `grid`, with
/// L = I and r = 0.
inline Posterior make_posterior(const ModelSpec& spec, const ConditionGrid& grid,
                                std::uint64_t seed, Family family, double scale = 0.1) {
  Posterior post;
  post.spec = spec;
  post.grid = grid;
  PriorSample ps = sample_prior(spec, grid.coords, seed);
  post.q.family = family;
  post.q.mean.mu = ps.latents.mu;
  post.q.mean.U = ps.latents.U;
  post.q.mean.z = ps.latents.z;
  post.q.mean.g = MatrixXd(spec.N, 0);
  if (family == Family::kGaussian) {
    const double ls = std::log(scale);
    post.q.log_scale.mu = MatrixXd::Constant(spec.N, grid.size(), ls);
    post.q.log_scale.U = MatrixXd::Constant(spec.N * spec.P, grid.size(), ls);
    post.q.log_scale.z = MatrixXd::Constant(spec.N, grid.size(), ls);
    post.q.log_scale.g = MatrixXd(spec.N, 0);
  }
  post.theta.L = MatrixXd::Identity(spec.N, spec.N);
  post.theta.r = VectorXd::Zero(spec.N);
  return post;
}

}  // namespace fixtures

#endif  // NOISECOV_TESTS_FIXTURES_HPP_
