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

/*
  Synthetic datasets on a periodic one-dimensional condition space.

  Means and covariances are drawn from the generative model with periodic
  kernels and Lambda = I; trials are Gaussian given the moments, or for the
  count model Poisson given Gaussian gains. The scale factor is either the
  identity or the Cholesky factor of O diag(s) O^T with O a Haar-random
  orthogonal matrix and s logarithmically spaced from 1 down to 1e-5.
*/

#ifndef NOISECOV_SYNTHETIC_HPP_
#define NOISECOV_SYNTHETIC_HPP_

#include <cstdint>

#include "noisecov/dataset.hpp"
#include "noisecov/model.hpp"

namespace noisecov {

enum class ScaleMode { kStructured, kIdentity };

std::string_view to_string(ScaleMode m);
ScaleMode parse_scale_mode(std::string_view s);

struct SyntheticParams {
  Index N = 100;
  Index C = 30;
  Index K = 10;
  Index P = 2;
  double lambda_sigma = 1.0;
  double lambda_mu = 1.0;
  double gamma = 0.001;
  double beta = 1.0;
  ScaleMode scale = ScaleMode::kStructured;
  Observation observation = Observation::kNormal;
  /// Baseline r added to every gain (count model only).
  double baseline = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  /// The generating model: scaled-lrd without a diagonal field.
  ModelSpec model() const;
};

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of R's diagonal moved into Q).
MatrixXd random_orthogonal(Index n, Rng& rng);

/// Scale factor L for the given mode: identity, or chol(O diag(s) O^T).
MatrixXd synthetic_scale(Index N, ScaleMode mode, Rng& rng);

struct SyntheticBundle {
  Dataset train;
  /// Extra trials drawn from the same moments; empty when not requested.
  Dataset test;
  MatrixXd L;
  VectorXd r;
  /// Ground-truth latents (count model: gains are not stored).
  LatentState latents;
};

/// Draws one dataset and, when test_trials > 0, a second set of trials per
/// condition from the same moments.
SyntheticBundle generate_synthetic_bundle(const SyntheticParams& params, Index test_trials = 0);

Dataset generate_synthetic(const SyntheticParams& params);

/// Trials drawn from given moments: Gaussian, or Poisson given Gaussian gains.
MatrixXd draw_trials(const VectorXd& mu, const MatrixXd& sigma, Index K, Observation obs,
                     const VectorXd& baseline, Rng& rng);

}  // namespace noisecov

#endif  // NOISECOV_SYNTHETIC_HPP_
