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

#include "noisecov/model.hpp"

namespace noisecov {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kVanilla:
      return "vanilla";
    case Variant::kLowRankDiag:
      return "lrd";
    case Variant::kScaledLowRankDiag:
      return "scaled-lrd";
    case Variant::kInverseScaledLowRankDiag:
      return "inverse-scaled-lrd";
  }
  return "?";
}

std::string_view to_string(Observation o) {
  return o == Observation::kNormal ? "normal" : "poisson";
}

Variant parse_variant(std::string_view s) {
  if (s == "vanilla") return Variant::kVanilla;
  if (s == "lrd") return Variant::kLowRankDiag;
  if (s == "scaled-lrd") return Variant::kScaledLowRankDiag;
  if (s == "inverse-scaled-lrd") return Variant::kInverseScaledLowRankDiag;
  throw InvalidInput("unknown covariance variant '" + std::string(s) + "'");
}

Observation parse_observation(std::string_view s) {
  if (s == "normal") return Observation::kNormal;
  if (s == "poisson") return Observation::kPoisson;
  throw InvalidInput("unknown observation family '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
  if (N < 1) {
    throw InvalidInput("model needs N >= 1");
  }
  if (P < 0) {
    throw InvalidInput("model needs P >= 0");
  }
  if (variant == Variant::kVanilla && P < 1) {
    throw InvalidInput("vanilla variant requires P >= 1");
  }
  if (variant != Variant::kVanilla && P == 0 && !use_diag) {
    // Lambda = I keeps Sigma definite but makes the covariance field constant.
    throw InvalidInput("lrd variants with P = 0 require the diagonal field");
  }
  if (variant == Variant::kInverseScaledLowRankDiag && !use_diag && P < N) {
    throw InvalidInput("inverse variant requires the diagonal field or P >= N");
  }
  k_mu.validate();
  k_sigma.validate();
  if (k_mu.dims() != k_sigma.dims()) {
    throw InvalidInput("k_mu and k_sigma must have the same number of axes");
  }
}

std::vector<Covariance> assemble_all(const ModelSpec& spec, const LatentState& latents) {
  const Index C = latents.conditions();
  std::vector<Covariance> out;
  out.reserve(C);
  for (Index c = 0; c < C; ++c) {
    out.push_back(assemble_covariance_full(latents.U_at(c, spec.N, spec.P), latents.z.col(c),
                                           latents.L, spec.variant, spec.use_diag, c));
  }
  return out;
}

MomentField moment_field(const ModelSpec& spec, const LatentState& latents) {
  MomentField out;
  const auto covs = assemble_all(spec, latents);
  for (Index c = 0; c < latents.conditions(); ++c) {
    out.mu.push_back(latents.mu.col(c));
    out.sigma.push_back(covs[c].covariance);
  }
  return out;
}

PriorSample sample_prior(const ModelSpec& spec, const Coords& X, std::uint64_t seed,
                         const MatrixXd& L) {
  spec.validate();
  const Index C = X.rows();
  const Index N = spec.N;
  const Index P = spec.P;
  const auto chol_mu = factor_gram(spec.k_mu, X);
  const auto chol_sigma = factor_gram(spec.k_sigma, X);
  const MatrixXd Lmu = chol_mu.matrixL();
  const MatrixXd Lsig = chol_sigma.matrixL();

  Rng rng(seed);
  PriorSample out;
  LatentState& s = out.latents;
  // Each latent function is one row; draws are rows of (chol * eps)^T.
  s.mu = (Lmu * standard_normal(C, N, rng)).transpose();
  s.U = (Lsig * standard_normal(C, N * P, rng)).transpose();
  s.z = (Lsig * standard_normal(C, N, rng)).transpose();
  if (L.size() == 0) {
    s.L = MatrixXd::Identity(N, N);
  } else {
    if (L.rows() != N || L.cols() != N) {
      throw InvalidInput("scale factor must be N x N");
    }
    s.L = L.triangularView<Eigen::Lower>();
  }
  s.r = VectorXd::Zero(N);
  out.moments = moment_field(spec, s);
  return out;
}

void check_counts(const Eigen::Ref<const MatrixXd>& counts) {
  for (Index j = 0; j < counts.cols(); ++j) {
    for (Index i = 0; i < counts.rows(); ++i) {
      const double v = counts(i, j);
      if (!(v >= 0.0) || v != std::floor(v)) {
        throw InvalidInput("counts must be nonnegative integers");
      }
    }
  }
}

double loglik_poisson_given_gain(const Eigen::Ref<const VectorXd>& counts,
                                 const Eigen::Ref<const VectorXd>& gain,
                                 const Eigen::Ref<const VectorXd>& baseline) {
  if (counts.size() != gain.size() || counts.size() != baseline.size()) {
    throw InvalidInput("loglik_poisson_given_gain: inconsistent shapes");
  }
  check_counts(counts);
  double out = 0.0;
  for (Index n = 0; n < counts.size(); ++n) {
    const double rate = softplus(baseline(n) + gain(n));
    const double y = counts(n);
    out += -rate - std::lgamma(y + 1.0);
    if (y > 0.0) {
      out += y * std::log(rate);
    }
  }
  return out;
}

MatrixXd scale_from_raw(const MatrixXd& raw) {
  MatrixXd L = raw.triangularView<Eigen::StrictlyLower>();
  L.diagonal() = raw.diagonal().array().exp();
  return L;
}

MatrixXd raw_from_scale(const MatrixXd& L) {
  MatrixXd raw = L.triangularView<Eigen::StrictlyLower>();
  for (Index i = 0; i < L.rows(); ++i) {
    if (!(L(i, i) > 0.0)) {
      throw InvalidInput("scale factor needs a positive diagonal");
    }
    raw(i, i) = std::log(L(i, i));
  }
  return raw;
}

}  // namespace noisecov
