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
  Mean-field variational inference.

  Every scalar latent (entries of mu, U, z and, for counts, the gains g) has
  an independent Gaussian factor N(m, exp(2 s)), or a point mass at m for the
  delta family. The ELBO is estimated with reparameterized draws
  x = m + exp(s) eps, and gradients are computed analytically: the
  observation term needs one Cholesky per condition, the GP prior terms one
  cached Cholesky per kernel.

  All optimized quantities live in one flat vector laid out as

    [ means(mu, U, z, g) | log-scales(mu, U, z, g) | L raw | r ]

  where the log-scale block is absent for the delta family, L raw holds the
  lower triangle column by column with its diagonal stored as a log, and r is
  always present (its gradient is zero for normal observations).

  L can be stored relative to a fixed lower-triangular reference L0, so that
  L = L0 T and the raw block encodes T. fit() sets L0 to the initial scale,
  which makes Adam steps on L relative to the scale of each direction.
*/

#ifndef NOISECOV_INFERENCE_HPP_
#define NOISECOV_INFERENCE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "noisecov/common.hpp"
#include "noisecov/dataset.hpp"
#include "noisecov/kernels.hpp"
#include "noisecov/model.hpp"

namespace noisecov {

enum class Family { kGaussian, kDelta };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

struct VariationalState {
  Family family = Family::kGaussian;
  LatentState mean;       // mu, U, z, g used; L and r ignored
  LatentState log_scale;  // same shapes as mean; unused for delta

  /// Number of variational scalars (C N (P + 2) plus gains).
  Index latent_count() const;
};

struct AdamConfig {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct FitConfig {
  AdamConfig adam;
  long iterations = 10000;
  int elbo_samples = 1;
  /// Trials per condition per iteration; 0 means full batch.
  Index minibatch = 0;
  std::uint64_t seed = 0;
  Family family = Family::kGaussian;
  bool learn_L = true;
  bool learn_r = true;
  /// Floor added to the grand-empirical covariance before it initializes L,
  /// relative to its mean diagonal.
  double init_floor = 1e-6;

  void validate() const;
  /// Defaults for count data: step 0.005, 50000 iterations.
  static FitConfig poisson_defaults();
};

/// Generative parameters optimized alongside q.
struct Params {
  MatrixXd L;  // N x N lower triangular with positive diagonal
  VectorXd r;  // N
};

/// Per-term breakdown of one log-joint (or ELBO) evaluation.
struct Terms {
  double observation = 0.0;
  double prior_mu = 0.0;
  double prior_U = 0.0;
  double prior_z = 0.0;
  double gain_prior = 0.0;
  double entropy = 0.0;

  double total() const {
    return observation + prior_mu + prior_U + prior_z + gain_prior + entropy;
  }
  /// Name of the first non-finite term, or empty.
  std::string first_non_finite() const;
};

/// Layout of the flat optimization vector.
struct Layout {
  Index N = 0, P = 0, C = 0, T = 0;
  Family family = Family::kGaussian;
  MatrixXd L_ref;  // empty means identity

  Layout() = default;
  Layout(const ModelSpec& spec, Index C, Index total_trials, Family family);

  Index latents() const { return C * N * (P + 2) + T * N; }
  Index scale_offset() const { return latents(); }
  Index L_offset() const { return family == Family::kGaussian ? 2 * latents() : latents(); }
  Index L_size() const { return N * (N + 1) / 2; }
  Index r_offset() const { return L_offset() + L_size(); }
  Index size() const { return r_offset() + N; }

  VectorXd pack(const VariationalState& q, const Params& theta) const;
  void unpack(const Eigen::Ref<const VectorXd>& flat, VariationalState& q, Params& theta) const;
};

class Posterior;

/// Log joint density of data and latents, and its gradients. Holds the
/// training data statistics and the cached Gram factorizations.
class Objective {
 public:
  Objective(const ModelSpec& spec, const ConditionGrid& grid, const Dataset& data,
            Index minibatch = 0);

  const ModelSpec& spec() const { return spec_; }
  const Layout& layout(Family f) const { return f == Family::kGaussian ? gauss_ : delta_; }
  Index total_trials() const { return total_trials_; }
  void set_scale_reference(const MatrixXd& L0);

  /// log p(Y, latents); latents.L and latents.r are used as parameters.
  double log_joint(const LatentState& latents, Terms* terms = nullptr) const;

  /// ELBO estimate and (optionally) its gradient in the flat layout.
  double elbo(const Eigen::Ref<const VectorXd>& flat, Family family, int samples,
              std::uint64_t seed, VectorXd* gradient = nullptr, Terms* terms = nullptr) const;

  const Eigen::LLT<MatrixXd>& chol_mu() const { return chol_mu_; }
  const Eigen::LLT<MatrixXd>& chol_sigma() const { return chol_sigma_; }

 private:
  struct Gradients {
    LatentState latents;  // same shapes as the state, L holds dlogp/dL
  };
  struct Batch {
    // Per condition: trial rows used, and the weight K_c / b_c.
    std::vector<std::vector<Index>> rows;
    std::vector<double> weight;
  };

  double evaluate(const LatentState& x, const Batch* batch, Gradients* grad, Terms* terms) const;
  Batch draw_batch(Rng& rng) const;

  ModelSpec spec_;
  ConditionGrid grid_;
  std::vector<MatrixXd> trials_;
  std::vector<Index> offsets_;  // first gain column of each condition
  Index total_trials_ = 0;
  Index minibatch_ = 0;
  // Full-batch sufficient statistics for the normal model.
  std::vector<VectorXd> mean_;
  std::vector<MatrixXd> scatter_;
  Eigen::LLT<MatrixXd> chol_mu_;
  Eigen::LLT<MatrixXd> chol_sigma_;
  double logdet_mu_ = 0.0;
  double logdet_sigma_ = 0.0;
  Layout gauss_;
  Layout delta_;
};

// Free-function forms -------------------------------------------------------

double log_joint(const ModelSpec& spec, const ConditionGrid& grid, const LatentState& latents,
                 const Dataset& data);

double elbo(const ModelSpec& spec, const ConditionGrid& grid, const VariationalState& q,
            const Params& theta, const Dataset& data, int samples, std::uint64_t seed);

/// Gradient in the flat layout of `Layout(spec, C, T, q.family)`.
VectorXd elbo_gradient(const ModelSpec& spec, const ConditionGrid& grid,
                       const VariationalState& q, const Params& theta, const Dataset& data,
                       int samples, std::uint64_t seed);

struct AdamMoments {
  VectorXd first;
  VectorXd second;
};

/// One bias-corrected Adam descent step: params -= step * mhat / (sqrt(vhat) + eps).
/// `grads` is the gradient of the quantity being minimized, t >= 1.
void adam_step(Eigen::Ref<VectorXd> params, const Eigen::Ref<const VectorXd>& grads,
               AdamMoments& moments, long t, const AdamConfig& config);

class Posterior {
 public:
  ModelSpec spec;
  ConditionGrid grid;
  VariationalState q;
  Params theta;
  std::vector<double> elbo_trace;
  FitConfig config;

  /// Cholesky factors of the jittered Gram matrices on the training grid.
  const Eigen::LLT<MatrixXd>& chol_mu() const;
  const Eigen::LLT<MatrixXd>& chol_sigma() const;

  /// Latents at the training conditions with L and r filled in: variational
  /// means (plug-in) or a draw from q.
  LatentState point_latents() const;
  LatentState draw_latents(Rng& rng) const;

  /// Moments at training conditions evaluated at the variational means.
  MomentField fitted_moments() const;

 private:
  mutable std::optional<Eigen::LLT<MatrixXd>> chol_mu_;
  mutable std::optional<Eigen::LLT<MatrixXd>> chol_sigma_;
};

/// Initial variational state and parameters for the given data.
void initialize(const ModelSpec& spec, const Dataset& data, const FitConfig& config,
                VariationalState& q, Params& theta);

Posterior fit(const ModelSpec& spec, const Dataset& data, const FitConfig& config);

}  // namespace noisecov

#endif  // NOISECOV_INFERENCE_HPP_
