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
  Predictions from a fitted posterior.

  Every scalar latent is a GP over conditions, so values at a new condition
  x* follow from noiseless conditioning on values at the training grid. The
  kernel used for conditioning is the one the fit used, including the solver
  jitter as an exact-coincidence nugget; a query that coincides exactly with
  a training condition returns the training value with zero variance.

  Random streams: sample s draws training latents from q with
  Rng(derive_seed(seed, 2 s)) and the noise at query point j with
  Rng(derive_seed(derive_seed(seed, 2 s + 1), j)). Calls that differ only
  in the query points therefore share training draws.
*/

#ifndef NOISECOV_POSTERIOR_HPP_
#define NOISECOV_POSTERIOR_HPP_

#include <cstdint>
#include <vector>

#include "noisecov/dataset.hpp"
#include "noisecov/inference.hpp"
#include "noisecov/kernels.hpp"

namespace noisecov {

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Conditions a zero-mean GP on `values` at the rows of X_train.
GpPrediction condition_gp(const ProductKernel& k, const Coords& X_train,
                          const Eigen::Ref<const VectorXd>& values,
                          const Eigen::Ref<const VectorXd>& x_star);

/// Joint conditional law of (f(x*), df/dx*_axis).
struct JointGpPrediction {
  Eigen::Vector2d mean;
  Eigen::Matrix2d covariance;
};

JointGpPrediction condition_gp_with_derivative(const ProductKernel& k, const Coords& X_train,
                                               const Eigen::Ref<const VectorXd>& values,
                                               const Eigen::Ref<const VectorXd>& x_star,
                                               Index axis);

/// Conditioning weights for one query point, reusable across latents:
/// mean = w^T v, variance as given. `coincident` is the matching training
/// row or -1.
struct GpWeights {
  VectorXd w;
  double variance = 0.0;
  Index coincident = -1;
  // Derivative part, filled by gp_derivative_weights.
  VectorXd w_d;
  double cov_fd = 0.0;
  double var_d = 0.0;
};

GpWeights gp_weights(const ProductKernel& k, const Coords& X_train,
                     const Eigen::LLT<MatrixXd>& chol, const Eigen::Ref<const VectorXd>& x_star);
GpWeights gp_derivative_weights(const ProductKernel& k, const Coords& X_train,
                                const Eigen::LLT<MatrixXd>& chol,
                                const Eigen::Ref<const VectorXd>& x_star, Index axis);

/// kSample conditions on draws from q and draws the latents at x*; kPlugIn
/// conditions on the variational means and takes the conditional means. The
/// plug-in mode gives a point estimate, not a posterior sample.
enum class PredictMode { kSample, kPlugIn };

std::string_view to_string(PredictMode m);
PredictMode parse_predict_mode(std::string_view s);

struct MomentSamples {
  std::uint64_t seed = 0;
  Coords x_star;
  /// mu[j][s], sigma[j][s] for query point j and sample s.
  std::vector<std::vector<VectorXd>> mu;
  std::vector<std::vector<MatrixXd>> sigma;
  /// Number of assembled matrices that needed a diagonal lift.
  long lifted = 0;
};

MomentSamples predict_moments(const Posterior& post, const Coords& x_star, int samples,
                              std::uint64_t seed, PredictMode mode = PredictMode::kSample);

/// Mean over samples of the predicted moments.
MomentField mean_moments(const MomentSamples& m);

struct GradientSamples {
  std::uint64_t seed = 0;
  VectorXd x_star;
  Index axis = 0;
  std::vector<VectorXd> mu;
  std::vector<MatrixXd> sigma;
  std::vector<VectorXd> dmu;
  std::vector<MatrixXd> dsigma;
  long lifted = 0;
};

GradientSamples posterior_gradients(const Posterior& post, const Eigen::Ref<const VectorXd>& x_star,
                                    Index axis, int samples, std::uint64_t seed,
                                    PredictMode mode = PredictMode::kSample);

struct HeldoutMode {
  enum Kind { kSingleSample, kMonteCarlo };
  Kind kind = kSingleSample;
  int samples = 1;

  static HeldoutMode single_sample() { return {kSingleSample, 1}; }
  static HeldoutMode monte_carlo(int s) { return {kMonteCarlo, s}; }
};

/// Held-out log-likelihood of the trials in `test` (normal observations).
/// Single-sample: one draw from q, summed normal log densities. Monte
/// Carlo: per-trial log-mean-exp over the draws, summed over trials. Test
/// conditions may be on or off the training grid.
double heldout_loglik(const Posterior& post, const Dataset& test, HeldoutMode mode,
                      std::uint64_t seed, long* lifted = nullptr);

enum class SummaryStatistic { kMean, kCovariance };

/// Spike-count mean (N x 1) or covariance (N x N) at condition x by
/// sampling q, then gains, then counts.
MatrixXd poisson_summary_stats(const Posterior& post, const Eigen::Ref<const VectorXd>& x,
                               SummaryStatistic statistic, int samples, std::uint64_t seed);

/// Held-out log-likelihood of count trials with the gains integrated out:
/// per trial, log-mean-exp over draws of (moments from q, gain, Poisson pmf).
double marginal_loglik_poisson(const Posterior& post, const Dataset& test, int samples,
                               std::uint64_t seed);

/// Raises the spectrum of a symmetric matrix so its smallest eigenvalue is
/// at least 1e-8 trace / N whenever it falls below 1e-10 trace / N. Returns
/// whether a lift was applied.
bool lift_to_spd(MatrixXd& sigma);

}  // namespace noisecov

#endif  // NOISECOV_POSTERIOR_HPP_
