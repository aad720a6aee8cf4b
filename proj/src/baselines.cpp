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

#include "noisecov/baselines.hpp"

#include <algorithm>
#include <array>

namespace noisecov {

MatrixXd grand_empirical(const std::vector<MatrixXd>& trials) {
  if (trials.empty()) {
    throw InvalidInput("grand_empirical needs at least one condition");
  }
  const Index n = trials.front().cols();
  MatrixXd total = MatrixXd::Zero(n, n);
  Index count = 0;
  for (const auto& Y : trials) {
    if (Y.rows() < 1 || Y.cols() != n) {
      throw InvalidInput("grand_empirical: every condition needs >= 1 trial of equal width");
    }
    total += centered_scatter(Y);
    count += Y.rows();
  }
  return total / static_cast<double>(count);
}

std::vector<MatrixXd> weighted_average(const std::vector<MatrixXd>& trials, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("weighted_average requires 0 <= alpha <= 1");
  }
  const MatrixXd grand = grand_empirical(trials);
  std::vector<MatrixXd> out;
  out.reserve(trials.size());
  for (const auto& Y : trials) {
    out.push_back(alpha * empirical(Y) + (1.0 - alpha) * grand);
  }
  return out;
}

LedoitWolfResult ledoit_wolf(const MatrixXd& Y, ShrinkageTarget target) {
  const Index K = Y.rows();
  const Index N = Y.cols();
  if (K < 2) {
    throw InvalidInput("ledoit_wolf needs at least two trials");
  }
  const MatrixXd X = Y.rowwise() - Y.colwise().mean();
  const MatrixXd S = empirical(Y);
  const bool diag_target = target == ShrinkageTarget::kDiagonal;

  MatrixXd F;
  if (diag_target) {
    F = S.diagonal().asDiagonal();
  } else {
    F = MatrixXd::Identity(N, N) * (S.trace() / static_cast<double>(N));
  }
  // Dispersion of the sample covariance around the target, and the
  // estimated variance of its entries.
  const double delta = (S - F).squaredNorm() / static_cast<double>(N);
  double beta_bar = 0.0;
  for (Index k = 0; k < K; ++k) {
    MatrixXd D = X.row(k).transpose() * X.row(k) - S;
    if (diag_target) {
      D.diagonal().setZero();
    }
    beta_bar += D.squaredNorm();
  }
  beta_bar /= static_cast<double>(K) * static_cast<double>(K) * static_cast<double>(N);
  const double beta = std::min(beta_bar, delta);
  double intensity = delta > 0.0 ? beta / delta : 0.0;
  intensity = std::clamp(intensity, 0.0, 1.0);

  LedoitWolfResult out;
  out.intensity = intensity;
  out.covariance = intensity * F + (1.0 - intensity) * S;
  return out;
}

double graphical_lasso_objective(const MatrixXd& S, const MatrixXd& precision, double rho) {
  Eigen::LLT<MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    return std::numeric_limits<double>::infinity();
  }
  const MatrixXd Lf = llt.matrixL();
  const double logdet = 2.0 * Lf.diagonal().array().log().sum();
  const double off = precision.cwiseAbs().sum() - precision.diagonal().cwiseAbs().sum();
  return -logdet + (S.array() * precision.array()).sum() + rho * off;
}

namespace {

// Minimizes h(t) = -log(1 + 2 a t + (a^2 - b) t^2) + 2 s t + 2 rho |theta + t|
// over the interval where the log argument is positive. Here a = W_ij and
// b = W_ii W_jj for the current covariance W = Theta^{-1}.
double offdiagonal_step(double a, double b, double s, double theta, double rho) {
  const double q = a * a - b;  // < 0 for positive definite W
  auto smooth_grad = [&](double t) {
    const double D = 1.0 + 2.0 * a * t + q * t * t;
    return -(2.0 * a + 2.0 * q * t) / D + 2.0 * s;
  };
  auto domain = [&](double t) { return 1.0 + 2.0 * a * t + q * t * t > 0.0; };

  // Zero is optimal when the subgradient at theta + t = 0 contains 0.
  const double t0 = -theta;
  if (domain(t0) && std::abs(smooth_grad(t0)) <= 2.0 * rho) {
    return t0;
  }
  for (double sign : {1.0, -1.0}) {
    // Stationary points of the smooth part plus 2 rho sign:
    //   c D(t) - a - q t = 0,  c = s + rho sign.
    const double c = s + rho * sign;
    const double A = c * q;
    const double B = 2.0 * a * c - q;
    const double Cc = c - a;
    std::array<double, 2> roots{std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::quiet_NaN()};
    if (std::abs(A) < 1e-300) {
      if (B != 0.0) {
        roots[0] = -Cc / B;
      }
    } else {
      const double disc = B * B - 4.0 * A * Cc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        // Numerically stable pair.
        const double qq = -0.5 * (B + std::copysign(sq, B));
        roots[0] = qq / A;
        roots[1] = qq != 0.0 ? Cc / qq : std::numeric_limits<double>::quiet_NaN();
      }
    }
    for (double t : roots) {
      if (std::isfinite(t) && domain(t) && (theta + t) * sign > 0.0) {
        return t;
      }
    }
  }
  // Numerically on the kink.
  return domain(t0) ? t0 : 0.0;
}

}  // namespace

GraphicalLassoResult graphical_lasso(const MatrixXd& S, double rho, double tolerance,
                                     int max_sweeps) {
  const Index n = S.rows();
  if (S.cols() != n || n == 0) {
    throw InvalidInput("graphical_lasso needs a square matrix");
  }
  if (!(rho >= 0.0)) {
    throw InvalidInput("graphical_lasso needs rho >= 0");
  }
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
    throw InvalidInput("graphical_lasso needs a symmetric matrix");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(S(i, i) > 0.0)) {
      throw InvalidInput("graphical_lasso needs a positive diagonal");
    }
  }

  GraphicalLassoResult out;
  MatrixXd theta = MatrixXd::Zero(n, n);
  MatrixXd W = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    theta(i, i) = 1.0 / S(i, i);
    W(i, i) = S(i, i);
  }
  out.objective_trace.push_back(graphical_lasso_objective(S, theta, rho));

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) {
        const double t = offdiagonal_step(W(i, j), W(i, i) * W(j, j), S(i, j), theta(i, j), rho);
        if (t == 0.0) {
          continue;
        }
        // Woodbury update for Theta += t (e_i e_j^T + e_j e_i^T).
        Eigen::Matrix2d core;
        core << W(i, i), W(i, j) + 1.0 / t, W(j, i) + 1.0 / t, W(j, j);
        const Eigen::Matrix2d core_inv = core.inverse();
        MatrixXd cols(n, 2);
        cols.col(0) = W.col(i);
        cols.col(1) = W.col(j);
        W.noalias() -= cols * core_inv * cols.transpose();
        theta(i, j) += t;
        theta(j, i) = theta(i, j);
        max_change = std::max(max_change, std::abs(t));
      }
      // Diagonal entry: minimizes -log(1 + t W_jj) + t S_jj.
      const double t = 1.0 / S(j, j) - 1.0 / W(j, j);
      if (t != 0.0) {
        const VectorXd wj = W.col(j);
        W.noalias() -= (t / (1.0 + t * wj(j))) * wj * wj.transpose();
        theta(j, j) += t;
        max_change = std::max(max_change, std::abs(t));
      }
    }
    W = 0.5 * (W + W.transpose()).eval();
    out.sweeps = sweep + 1;
    out.objective_trace.push_back(graphical_lasso_objective(S, theta, rho));
    if (max_change < tolerance) {
      out.converged = true;
      break;
    }
  }
  out.precision = theta;
  // The running W accumulates rounding; recompute from the final precision.
  Eigen::LLT<MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("graphical_lasso produced a non-definite precision");
  }
  out.covariance = llt.solve(MatrixXd::Identity(n, n));
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  return out;
}

std::string_view to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::kEmpirical:
      return "empirical";
    case BaselineMethod::kGrand:
      return "grand";
    case BaselineMethod::kWeightedAverage:
      return "wa";
    case BaselineMethod::kLedoitWolf:
      return "lw";
    case BaselineMethod::kGraphicalLasso:
      return "glasso";
  }
  return "?";
}

BaselineMethod parse_baseline(std::string_view s) {
  if (s == "empirical") return BaselineMethod::kEmpirical;
  if (s == "grand") return BaselineMethod::kGrand;
  if (s == "wa") return BaselineMethod::kWeightedAverage;
  if (s == "lw") return BaselineMethod::kLedoitWolf;
  if (s == "glasso") return BaselineMethod::kGraphicalLasso;
  throw InvalidInput("unknown baseline method '" + std::string(s) + "'");
}

bool is_singular(const MatrixXd& sigma) {
  const Index n = sigma.rows();
  const double scale = sigma.trace() / static_cast<double>(n);
  if (!(scale > 0.0)) {
    return true;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() < 1e-12 * scale;
}

BaselineEstimate estimate(BaselineMethod method, const std::vector<MatrixXd>& trials,
                          double hyperparameter, ShrinkageTarget target) {
  BaselineEstimate out;
  out.method = method;
  out.hyperparameter = hyperparameter;
  for (const auto& Y : trials) {
    out.mu.push_back(trial_mean(Y));
  }
  switch (method) {
    case BaselineMethod::kEmpirical:
      for (const auto& Y : trials) {
        out.sigma.push_back(empirical(Y));
      }
      break;
    case BaselineMethod::kGrand:
      out.sigma.assign(trials.size(), grand_empirical(trials));
      break;
    case BaselineMethod::kWeightedAverage:
      out.sigma = weighted_average(trials, hyperparameter);
      break;
    case BaselineMethod::kLedoitWolf:
      for (const auto& Y : trials) {
        auto lw = ledoit_wolf(Y, target);
        out.sigma.push_back(std::move(lw.covariance));
        out.intensity.push_back(lw.intensity);
      }
      break;
    case BaselineMethod::kGraphicalLasso:
      for (const auto& Y : trials) {
        out.sigma.push_back(graphical_lasso(empirical(Y), hyperparameter).covariance);
      }
      break;
  }
  for (const auto& s : out.sigma) {
    out.singular.push_back(is_singular(s));
  }
  return out;
}

}  // namespace noisecov
