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
  Consumers of moment fields: Gaussian maximum-likelihood decoding, Fisher
  information, and comparison metrics.
*/

#ifndef NOISECOV_ANALYSIS_HPP_
#define NOISECOV_ANALYSIS_HPP_

#include <cstdint>
#include <vector>

#include "noisecov/common.hpp"
#include "noisecov/inference.hpp"
#include "noisecov/posterior.hpp"

namespace noisecov {

enum class DecoderMode { kQda, kLda };

std::string_view to_string(DecoderMode m);
DecoderMode parse_decoder_mode(std::string_view s);

/// Per-class Gaussian model. LDA stores one shared covariance.
class ClassModel {
 public:
  static ClassModel qda(std::vector<VectorXd> means, const std::vector<MatrixXd>& covariances);
  static ClassModel lda(std::vector<VectorXd> means, const MatrixXd& shared);

  DecoderMode mode() const { return mode_; }
  Index classes() const { return static_cast<Index>(means_.size()); }
  Index dims() const { return means_.empty() ? 0 : means_.front().size(); }
  /// Stored covariances: one for LDA, one per class for QDA.
  Index covariance_count() const { return static_cast<Index>(factors_.size()); }

  /// Gaussian log density of y under class c.
  double log_density(Index c, const Eigen::Ref<const VectorXd>& y) const;

 private:
  DecoderMode mode_ = DecoderMode::kQda;
  std::vector<VectorXd> means_;
  std::vector<Eigen::LLT<MatrixXd>> factors_;
  std::vector<double> logdets_;
};

/// argmax over classes of the log density; exact ties go to the lowest index.
Index classify(const ClassModel& model, const Eigen::Ref<const VectorXd>& y);

struct DecodeResult {
  double accuracy = 0.0;
  /// confusion(true, predicted).
  Eigen::MatrixX<long> confusion;
  Index trials = 0;
};

/// trials[c] holds the test trials whose true class is c (K_c x N).
DecodeResult decode_accuracy(const ClassModel& model, const std::vector<MatrixXd>& trials);

struct FisherTerms {
  double mean_term = 0.0;
  double covariance_term = 0.0;
  double total() const { return mean_term + covariance_term; }
};

/// mu'^T Sigma^{-1} mu' + 1/2 tr((Sigma^{-1} Sigma')^2) via Cholesky solves.
FisherTerms fisher_terms(const Eigen::Ref<const VectorXd>& dmu, const MatrixXd& sigma,
                         const MatrixXd& dsigma);
double fisher_information(const Eigen::Ref<const VectorXd>& dmu, const MatrixXd& sigma,
                          const MatrixXd& dsigma);
/// Same quantity with the precision given directly.
double fisher_information_precision(const Eigen::Ref<const VectorXd>& dmu,
                                    const MatrixXd& precision, const MatrixXd& dsigma);

struct FisherPoint {
  VectorXd x;
  std::vector<double> draws;
  double mean = 0.0;
  double lower = 0.0;  // 5% quantile
  double upper = 0.0;  // 95% quantile
};

struct FisherEstimate {
  Index axis = 0;
  std::vector<FisherPoint> points;
};

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// FI along `axis` at every row of X_eval; point j uses seed
/// derive_seed(seed, j).
FisherEstimate fisher_curve(const Posterior& post, const Coords& X_eval, Index axis, int samples,
                            std::uint64_t seed, PredictMode mode = PredictMode::kSample);

/// Largest |eigenvalue| of the symmetric difference A - B.
double operator_norm_error(const MatrixXd& A, const MatrixXd& B);

/// (sum lambda)^2 / sum lambda^2 of a symmetric PSD matrix.
double participation_ratio(const MatrixXd& sigma);

}  // namespace noisecov

#endif  // NOISECOV_ANALYSIS_HPP_
