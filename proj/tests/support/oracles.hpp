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

// Dense reference implementations shared by the unit and acceptance tests.

#ifndef NOISECOV_TESTS_ORACLES_HPP_
#define NOISECOV_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>

#include "noisecov/common.hpp"
#include "noisecov/kernels.hpp"
#include "noisecov/posterior.hpp"

namespace oracles {

using namespace noisecov;

// Per-entry loop form of the 1/K covariance.
inline MatrixXd loop_empirical(const MatrixXd& Y) {
  const Index K = Y.rows(), N = Y.cols();
  VectorXd m = VectorXd::Zero(N);
  for (Index k = 0; k < K; ++k) m += Y.row(k).transpose();
  m /= static_cast<double>(K);
  MatrixXd S = MatrixXd::Zero(N, N);
  for (Index k = 0; k < K; ++k) {
    for (Index i = 0; i < N; ++i) {
      for (Index j = 0; j < N; ++j) S(i, j) += (Y(k, i) - m(i)) * (Y(k, j) - m(j));
    }
  }
  return S / static_cast<double>(K);
}

// Ledoit-Wolf intensity written through fourth moments of the centered
// rows rather than per-trial outer-product deviations.
inline double lw_oracle(const MatrixXd& Y) {
  const double K = static_cast<double>(Y.rows()), N = static_cast<double>(Y.cols());
  const MatrixXd X = Y.rowwise() - Y.colwise().mean();
  const MatrixXd S = X.transpose() * X / K;
  const double mu = S.trace() / N;
  const MatrixXd X2 = X.array().square().matrix();
  const double beta_ = ((X2.transpose() * X2).sum() / K - S.squaredNorm()) / (N * K);
  const double delta = (S.squaredNorm() - 2 * mu * S.trace() + N * mu * mu) / N;
  const double beta = std::min(beta_, delta);
  return beta == 0.0 ? 0.0 : beta / delta;
}

// Proximal gradient on the penalized objective with backtracking.
inline MatrixXd glasso_oracle(const MatrixXd& S, double rho) {
  const Index n = S.rows();
  MatrixXd T = S.diagonal().cwiseInverse().asDiagonal();
  auto smooth = [&](const MatrixXd& A) {
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    return -2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum() +
           (S.array() * A.array()).sum();
  };
  auto prox = [&](MatrixXd A, double t) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double v = A(i, j);
        A(i, j) = std::copysign(std::max(std::abs(v) - t * rho, 0.0), v);
      }
    }
    return A;
  };
  double step = 1.0;
  for (int it = 0; it < 200000; ++it) {
    const MatrixXd G = S - T.inverse();
    const double f = smooth(T);
    MatrixXd next;
    for (;;) {
      next = prox(T - step * G, step);
      const MatrixXd D = next - T;
      if (smooth(next) <= f + (G.array() * D.array()).sum() + D.squaredNorm() / (2 * step)) break;
      step *= 0.5;
    }
    const double change = (next - T).cwiseAbs().maxCoeff();
    T = next;
    step = std::min(1.0, step * 1.5);
    if (change < 1e-13) break;
  }
  return T;
}

inline double k_eff(const ProductKernel& k, const VectorXd& a, const VectorXd& b) {
  return eval_kernel(k, a, b) + ((a.array() == b.array()).all() ? solver_jitter(k) : 0.0);
}

// Dense joint-Gaussian conditioning through an explicit inverse.
inline GpPrediction dense_condition(const ProductKernel& k, const MatrixXd& X, const VectorXd& v,
                             const VectorXd& xs) {
  const Index C = X.rows();
  MatrixXd J(C + 1, C + 1);
  MatrixXd pts(C + 1, X.cols());
  pts.topRows(C) = X;
  pts.row(C) = xs.transpose();
  for (Index i = 0; i <= C; ++i) {
    for (Index j = 0; j <= C; ++j) {
      J(i, j) = k_eff(k, pts.row(i).transpose(), pts.row(j).transpose());
    }
  }
  const MatrixXd Kinv = J.topLeftCorner(C, C).inverse();
  const VectorXd kx = J.col(C).head(C);
  return {kx.dot(Kinv * v), J(C, C) - kx.dot(Kinv * kx)};
}

}  // namespace oracles

#endif  // NOISECOV_TESTS_ORACLES_HPP_
