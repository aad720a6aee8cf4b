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
  Classical covariance estimators.

  All per-condition estimators take a K x N trial matrix (rows are trials).
  The empirical covariance uses the 1/K normalization.
*/

#ifndef NOISECOV_BASELINES_HPP_
#define NOISECOV_BASELINES_HPP_

#include <string>
#include <vector>

#include "noisecov/common.hpp"

namespace noisecov {

/// Condition mean of the rows of Y.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> trial_mean(
    const Eigen::MatrixBase<Derived>& Y) {
  if (Y.rows() < 1) {
    throw InvalidInput("trial_mean needs at least one trial");
  }
  return Y.colwise().mean().transpose();
}

/// Sum of outer products of the centered rows of Y (not normalized).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> centered_scatter(
    const Eigen::MatrixBase<Derived>& Y) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Mat centered = Y.rowwise() - Y.colwise().mean();
  Mat out = Mat::Zero(Y.cols(), Y.cols());
  out.template selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  out.template triangularView<Eigen::StrictlyUpper>() = out.transpose();
  return out;
}

/// (1/K) sum_k (y_k - ybar)(y_k - ybar)^T.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> empirical(
    const Eigen::MatrixBase<Derived>& Y) {
  using Scalar = typename Derived::Scalar;
  if (Y.rows() < 1) {
    throw InvalidInput("empirical covariance needs at least one trial");
  }
  return centered_scatter(Y) / static_cast<Scalar>(Y.rows());
}

/// Pools every condition-centered trial with weight 1 / sum_c K_c. With
/// balanced trials this is the plain average of the per-condition empirical
/// covariances.
MatrixXd grand_empirical(const std::vector<MatrixXd>& trials);

/// alpha * empirical(c) + (1 - alpha) * grand, for every condition.
std::vector<MatrixXd> weighted_average(const std::vector<MatrixXd>& trials, double alpha);

enum class ShrinkageTarget { kScaledIdentity, kDiagonal };

struct LedoitWolfResult {
  MatrixXd covariance;
  double intensity = 0.0;
};

/// Ledoit-Wolf shrinkage of the 1/K empirical covariance toward
/// (trace/N) I, or toward diag(S) with kDiagonal.
LedoitWolfResult ledoit_wolf(const MatrixXd& Y,
                             ShrinkageTarget target = ShrinkageTarget::kScaledIdentity);

struct GraphicalLassoResult {
  MatrixXd covariance;
  MatrixXd precision;
  bool converged = false;
  int sweeps = 0;
  /// Penalized objective after initialization and after every sweep.
  std::vector<double> objective_trace;
};

/// Penalized negative log-likelihood
///   -log det Theta + tr(S Theta) + rho sum_{i != j} |Theta_ij|.
double graphical_lasso_objective(const MatrixXd& S, const MatrixXd& precision, double rho);

/// l1-penalized Gaussian maximum likelihood by coordinate descent on the
/// entries of the precision matrix; every update exactly minimizes the
/// objective along one symmetric coordinate pair, so the objective never
/// increases. Off-diagonal entries only are penalized. Stops when the largest
/// entry change in a sweep is below `tolerance` or after `max_sweeps`.
GraphicalLassoResult graphical_lasso(const MatrixXd& S, double rho, double tolerance = 1e-6,
                                     int max_sweeps = 500);

enum class BaselineMethod { kEmpirical, kGrand, kWeightedAverage, kLedoitWolf, kGraphicalLasso };

std::string_view to_string(BaselineMethod m);
BaselineMethod parse_baseline(std::string_view s);

struct BaselineEstimate {
  BaselineMethod method = BaselineMethod::kEmpirical;
  std::vector<VectorXd> mu;
  std::vector<MatrixXd> sigma;
  /// alpha (weighted average), rho (graphical lasso); Ledoit-Wolf intensities
  /// go to `intensity` per condition.
  double hyperparameter = 0.0;
  std::vector<double> intensity;
  std::vector<bool> singular;
};

/// Flags a covariance whose smallest eigenvalue is below 1e-12 trace / N.
bool is_singular(const MatrixXd& sigma);

/// Runs one estimator on every condition; means are the trial means.
BaselineEstimate estimate(BaselineMethod method, const std::vector<MatrixXd>& trials,
                          double hyperparameter = 0.0,
                          ShrinkageTarget target = ShrinkageTarget::kScaledIdentity);

}  // namespace noisecov

#endif  // NOISECOV_BASELINES_HPP_
