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
  Kernels over condition space.

  Every coordinate of a condition x gets its own one-dimensional kernel

    squared exponential:  k(x, x') = gamma d(x,x') + beta exp(-(x - x')^2 / lambda)
    periodic:             k(x, x') = gamma d(x,x') + beta exp(-sin^2(pi |x - x'| / T) / lambda)

  where d(x, x') is 1 when the two coordinates compare equal as doubles and 0
  otherwise. Conditions that share a coordinate therefore share the jitter
  atom; perturb duplicates if that is not wanted. A ProductKernel multiplies
  the per-axis kernels.

  Derivatives treat the jitter atom as absent on the differentiated axis.
  Along axis a:

    dk/dx_a(x, x')        = d/dx_a [smooth_a(x_a, x'_a)] * prod_{i != a} k_i(x_i, x'_i)
    d2k/dx_a dx'_a(x, x)  = smooth_a''(0) * prod_{i != a} k_i(x_i, x_i)
*/

#ifndef NOISECOV_KERNELS_HPP_
#define NOISECOV_KERNELS_HPP_

#include <vector>

#include "noisecov/common.hpp"

namespace noisecov {

enum class KernelKind { kSquaredExponential, kPeriodic };

struct AxisKernel {
  KernelKind kind = KernelKind::kSquaredExponential;
  double gamma = 0.0;
  double beta = 1.0;
  double lambda = 1.0;
  double period = 2.0 * std::numbers::pi;  // periodic only

  static AxisKernel squared_exponential(double gamma, double beta, double lambda);
  static AxisKernel periodic(double gamma, double beta, double lambda, double period);

  /// Throws InvalidInput unless beta > 0, lambda > 0, gamma >= 0 (and T > 0).
  void validate() const;

  double operator()(double x, double xp) const;
  /// beta-term only.
  double smooth(double x, double xp) const;
  /// d smooth / dx.
  double smooth_dx(double x, double xp) const;
  /// d^2 smooth / dx dx'.
  double smooth_dxdxp(double x, double xp) const;
};

struct ProductKernel {
  std::vector<AxisKernel> axes;

  ProductKernel() = default;
  explicit ProductKernel(std::vector<AxisKernel> a) : axes(std::move(a)) {}

  Index dims() const { return static_cast<Index>(axes.size()); }
  /// k(x, x) for any x.
  double diagonal() const;
  void validate() const;
};

/// Matrix of condition coordinates, one row per condition.
using Coords = MatrixXd;

double eval_kernel(const ProductKernel& k, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& xp);

/// Product of the beta-terms only.
double eval_kernel_smooth(const ProductKernel& k, const Eigen::Ref<const VectorXd>& x,
                          const Eigen::Ref<const VectorXd>& xp);

/// Gram matrix over the rows of X. Exactly symmetric.
MatrixXd gram(const ProductKernel& k, const Coords& X);

/// Cross-covariance column k(X_i, x*) for every row of X.
VectorXd cross_kernel(const ProductKernel& k, const Coords& X,
                      const Eigen::Ref<const VectorXd>& x_star);

/// Diagonal jitter added to every Gram matrix before factorization.
inline double solver_jitter(const ProductKernel& k) { return 1e-8 * k.diagonal(); }

struct GramDerivatives {
  /// d k(x*, X_i) / d x*_axis, one entry per training point.
  VectorXd cross;
  /// d^2 k(x, x') / dx_axis dx'_axis at x = x' = x*.
  double second = 0.0;
};

GramDerivatives gram_derivatives(const ProductKernel& k, const Coords& X_train,
                                 const Eigen::Ref<const VectorXd>& x_star, Index axis);

/// Cholesky factor of gram(k, X) + solver_jitter(k) I. Throws
/// SingularMatrixError when the factorization fails.
Eigen::LLT<MatrixXd> factor_gram(const ProductKernel& k, const Coords& X);

}  // namespace noisecov

#endif  // NOISECOV_KERNELS_HPP_
