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
  Generative model for condition-dependent means and covariances.

    mu(.)  ~ GP^N(0, k_mu)
    U(.)   ~ GP^{N x P}(0, k_sigma)
    z(.)   ~ GP^N(0, k_sigma),   Lambda(x) = diag(softplus(z(x)))

  and, depending on the variant,

    vanilla              Sigma = U U^T
    lrd                  Sigma = U U^T + Lambda
    scaled-lrd           Sigma = L (U U^T + Lambda) L^T
    inverse-scaled-lrd   Sigma = (L (U U^T + Lambda) L^T)^{-1}

  With use_diag off, Lambda is the identity for the lrd family. Vanilla never
  has a diagonal term.

  Observations are y_ck ~ N(mu_c, Sigma_c), or for count data
  g_ck ~ N(mu_c, Sigma_c), y_ck ~ Poisson(softplus(r + g_ck)).

  Storage is condition-major: column c of `mu` is mu(x_c), column c of `U`
  is vec(U(x_c)) in column-major N x P order, column c of `z` is z(x_c).
*/

#ifndef NOISECOV_MODEL_HPP_
#define NOISECOV_MODEL_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "noisecov/common.hpp"
#include "noisecov/kernels.hpp"

namespace noisecov {

enum class Variant { kVanilla, kLowRankDiag, kScaledLowRankDiag, kInverseScaledLowRankDiag };
enum class Observation { kNormal, kPoisson };

std::string_view to_string(Variant v);
std::string_view to_string(Observation o);
Variant parse_variant(std::string_view s);
Observation parse_observation(std::string_view s);

struct ModelSpec {
  Index N = 1;
  Index P = 1;
  ProductKernel k_mu;
  ProductKernel k_sigma;
  Variant variant = Variant::kScaledLowRankDiag;
  bool use_diag = true;
  Observation observation = Observation::kNormal;

  void validate() const;
  bool uses_scale() const {
    return variant == Variant::kScaledLowRankDiag || variant == Variant::kInverseScaledLowRankDiag;
  }
  bool is_inverse() const { return variant == Variant::kInverseScaledLowRankDiag; }
  /// Whether z enters the covariance at all.
  bool uses_diag_field() const { return use_diag && variant != Variant::kVanilla; }
};

struct LatentState {
  MatrixXd mu;  // N x C
  MatrixXd U;   // (N P) x C
  MatrixXd z;   // N x C
  MatrixXd L;   // N x N lower triangular
  VectorXd r;   // N, count model only
  MatrixXd g;   // N x (total trials), count model only

  Index conditions() const { return mu.cols(); }
  Eigen::Map<const MatrixXd> U_at(Index c, Index N, Index P) const {
    return {U.col(c).data(), N, P};
  }
};

struct MomentField {
  std::vector<VectorXd> mu;
  std::vector<MatrixXd> sigma;

  Index size() const { return static_cast<Index>(mu.size()); }
};

/// Inner matrix U U^T + Lambda for the given variant.
template <typename DerivedU, typename DerivedZ>
Eigen::Matrix<typename DerivedU::Scalar, Eigen::Dynamic, Eigen::Dynamic> inner_matrix(
    const Eigen::MatrixBase<DerivedU>& U, const Eigen::MatrixBase<DerivedZ>& z, Variant variant,
    bool use_diag) {
  using Scalar = typename DerivedU::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Index n = U.rows();
  Mat M = Mat::Zero(n, n);
  if (U.cols() > 0) {
    M.template selfadjointView<Eigen::Lower>().rankUpdate(U);
    M.template triangularView<Eigen::StrictlyUpper>() = M.transpose();
  }
  if (variant == Variant::kVanilla) {
    return M;
  }
  if (use_diag) {
    for (Index i = 0; i < n; ++i) {
      M(i, i) += softplus(z(i));
    }
  } else {
    M.diagonal().array() += Scalar(1);
  }
  return M;
}

/// Covariance and, for the inverse variant, its precision. The precision of
/// the inverse variant is the assembled L M L^T itself; for other variants it
/// is obtained through a Cholesky solve on demand.
template <typename Scalar>
struct CovarianceT {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat covariance;
  Mat stored_precision;
  bool has_precision = false;

  Mat precision() const {
    if (has_precision) {
      return stored_precision;
    }
    Eigen::LLT<Mat> llt(covariance);
    if (llt.info() != Eigen::Success) {
      throw SingularMatrixError("covariance is not positive definite");
    }
    return llt.solve(Mat::Identity(covariance.rows(), covariance.cols()));
  }
};

using Covariance = CovarianceT<double>;

/// Assembles Sigma for one condition. `condition` is only used to label
/// errors.
template <typename DerivedU, typename DerivedZ, typename DerivedL>
CovarianceT<typename DerivedU::Scalar> assemble_covariance_full(
    const Eigen::MatrixBase<DerivedU>& U, const Eigen::MatrixBase<DerivedZ>& z,
    const Eigen::MatrixBase<DerivedL>& L, Variant variant, bool use_diag = true,
    Index condition = -1) {
  using Scalar = typename DerivedU::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Index n = U.rows();
  if (z.size() != n || (variant != Variant::kVanilla && variant != Variant::kLowRankDiag &&
                        (L.rows() != n || L.cols() != n))) {
    throw InvalidInput("assemble_covariance: inconsistent shapes");
  }
  CovarianceT<Scalar> out;
  Mat M = inner_matrix(U, z, variant, use_diag);
  if (variant == Variant::kVanilla || variant == Variant::kLowRankDiag) {
    out.covariance = std::move(M);
    return out;
  }
  const auto Lt = L.template triangularView<Eigen::Lower>();
  Mat LM = Lt * M;
  Mat S = LM * Mat(L.template triangularView<Eigen::Lower>()).transpose();
  S = Scalar(0.5) * (S + S.transpose()).eval();
  if (variant == Variant::kScaledLowRankDiag) {
    out.covariance = std::move(S);
    return out;
  }
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError(
        "precision matrix is singular at condition " + std::to_string(condition), condition);
  }
  Mat cov = llt.solve(Mat::Identity(n, n));
  out.covariance = Scalar(0.5) * (cov + cov.transpose());
  out.stored_precision = std::move(S);
  out.has_precision = true;
  return out;
}

template <typename DerivedU, typename DerivedZ, typename DerivedL>
Eigen::Matrix<typename DerivedU::Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble_covariance(
    const Eigen::MatrixBase<DerivedU>& U, const Eigen::MatrixBase<DerivedZ>& z,
    const Eigen::MatrixBase<DerivedL>& L, Variant variant, bool use_diag = true,
    Index condition = -1) {
  return assemble_covariance_full(U, z, L, variant, use_diag, condition).covariance;
}

/// Covariance at every condition of a latent state.
std::vector<Covariance> assemble_all(const ModelSpec& spec, const LatentState& latents);
MomentField moment_field(const ModelSpec& spec, const LatentState& latents);

/// Independent prior draw of every latent function on the rows of X. The
/// scale factor L (identity when empty) is a parameter, not a latent.
struct PriorSample {
  LatentState latents;
  MomentField moments;
};
PriorSample sample_prior(const ModelSpec& spec, const Coords& X, std::uint64_t seed,
                         const MatrixXd& L = MatrixXd());

/// Sum of multivariate normal log densities of the rows of Y.
template <typename DerivedY, typename DerivedMu, typename DerivedS>
typename DerivedY::Scalar loglik_normal(const Eigen::MatrixBase<DerivedY>& Y,
                                        const Eigen::MatrixBase<DerivedMu>& mu,
                                        const Eigen::MatrixBase<DerivedS>& Sigma,
                                        Index condition = -1) {
  using Scalar = typename DerivedY::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Index n = mu.size();
  if (Y.cols() != n || Sigma.rows() != n || Sigma.cols() != n) {
    throw InvalidInput("loglik_normal: inconsistent shapes");
  }
  Eigen::LLT<Mat> llt(Sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError(
        "covariance is not positive definite at condition " + std::to_string(condition),
        condition);
  }
  const Scalar logdet = Scalar(2) * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  Mat centered = (Y.rowwise() - mu.transpose()).transpose();
  llt.matrixL().solveInPlace(centered);
  const Scalar quad = centered.squaredNorm();
  const Scalar k = static_cast<Scalar>(Y.rows());
  return Scalar(-0.5) * (k * (static_cast<Scalar>(n) * Scalar(kLog2Pi) + logdet) + quad);
}

/// Sum over neurons of log Poisson(y_n | softplus(r_n + g_n)).
double loglik_poisson_given_gain(const Eigen::Ref<const VectorXd>& counts,
                                 const Eigen::Ref<const VectorXd>& gain,
                                 const Eigen::Ref<const VectorXd>& baseline);

/// Throws InvalidInput unless every entry is a nonnegative integer.
void check_counts(const Eigen::Ref<const MatrixXd>& counts);

/// Lower-triangular L from the unconstrained parameterization (strict lower
/// part as is, diagonal stored as log).
MatrixXd scale_from_raw(const MatrixXd& raw);
MatrixXd raw_from_scale(const MatrixXd& L);

}  // namespace noisecov

#endif  // NOISECOV_MODEL_HPP_
