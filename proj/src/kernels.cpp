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

#include "noisecov/kernels.hpp"

#include <string>

namespace noisecov {

AxisKernel AxisKernel::squared_exponential(double gamma, double beta, double lambda) {
  AxisKernel k;
  k.kind = KernelKind::kSquaredExponential;
  k.gamma = gamma;
  k.beta = beta;
  k.lambda = lambda;
  k.validate();
  return k;
}

AxisKernel AxisKernel::periodic(double gamma, double beta, double lambda, double period) {
  AxisKernel k;
  k.kind = KernelKind::kPeriodic;
  k.gamma = gamma;
  k.beta = beta;
  k.lambda = lambda;
  k.period = period;
  k.validate();
  return k;
}

void AxisKernel::validate() const {
  if (!(beta > 0.0) || !(lambda > 0.0) || !(gamma >= 0.0)) {
    throw InvalidInput("kernel requires beta > 0, lambda > 0, gamma >= 0");
  }
  if (kind == KernelKind::kPeriodic && !(period > 0.0)) {
    throw InvalidInput("periodic kernel requires period > 0");
  }
}

double AxisKernel::smooth(double x, double xp) const {
  const double d = x - xp;
  if (kind == KernelKind::kSquaredExponential) {
    return beta * std::exp(-d * d / lambda);
  }
  const double s = std::sin(std::numbers::pi * std::abs(d) / period);
  return beta * std::exp(-s * s / lambda);
}

double AxisKernel::operator()(double x, double xp) const {
  return (x == xp ? gamma : 0.0) + smooth(x, xp);
}

double AxisKernel::smooth_dx(double x, double xp) const {
  const double d = x - xp;
  const double ks = smooth(x, xp);
  if (kind == KernelKind::kSquaredExponential) {
    return -2.0 * d / lambda * ks;
  }
  const double a = std::numbers::pi / period;
  return -(a / lambda) * std::sin(2.0 * a * d) * ks;
}

double AxisKernel::smooth_dxdxp(double x, double xp) const {
  const double d = x - xp;
  const double ks = smooth(x, xp);
  if (kind == KernelKind::kSquaredExponential) {
    return (2.0 / lambda - 4.0 * d * d / (lambda * lambda)) * ks;
  }
  const double a = std::numbers::pi / period;
  const double s2 = std::sin(2.0 * a * d);
  return ks * (2.0 * a * a * std::cos(2.0 * a * d) / lambda - a * a * s2 * s2 / (lambda * lambda));
}

double ProductKernel::diagonal() const {
  double out = 1.0;
  for (const auto& a : axes) {
    out *= a.gamma + a.beta;
  }
  return out;
}

void ProductKernel::validate() const {
  if (axes.empty()) {
    throw InvalidInput("product kernel needs at least one axis");
  }
  for (const auto& a : axes) {
    a.validate();
  }
}

namespace {

void check_dims(const ProductKernel& k, Index n) {
  if (n != k.dims()) {
    throw InvalidInput("coordinate dimension " + std::to_string(n) +
                       " does not match kernel dimension " + std::to_string(k.dims()));
  }
}

}  // namespace

double eval_kernel(const ProductKernel& k, const Eigen::Ref<const VectorXd>& x,
                   const Eigen::Ref<const VectorXd>& xp) {
  check_dims(k, x.size());
  check_dims(k, xp.size());
  double out = 1.0;
  for (Index i = 0; i < k.dims(); ++i) {
    out *= k.axes[i](x(i), xp(i));
  }
  return out;
}

double eval_kernel_smooth(const ProductKernel& k, const Eigen::Ref<const VectorXd>& x,
                          const Eigen::Ref<const VectorXd>& xp) {
  check_dims(k, x.size());
  check_dims(k, xp.size());
  double out = 1.0;
  for (Index i = 0; i < k.dims(); ++i) {
    out *= k.axes[i].smooth(x(i), xp(i));
  }
  return out;
}

MatrixXd gram(const ProductKernel& k, const Coords& X) {
  if (X.rows() == 0) {
    throw InvalidInput("gram over an empty point set");
  }
  check_dims(k, X.cols());
  const Index n = X.rows();
  MatrixXd out(n, n);
  for (Index i = 0; i < n; ++i) {
    out(i, i) = eval_kernel(k, X.row(i).transpose(), X.row(i).transpose());
    for (Index j = 0; j < i; ++j) {
      out(i, j) = eval_kernel(k, X.row(i).transpose(), X.row(j).transpose());
      out(j, i) = out(i, j);
    }
  }
  return out;
}

VectorXd cross_kernel(const ProductKernel& k, const Coords& X,
                      const Eigen::Ref<const VectorXd>& x_star) {
  check_dims(k, X.cols());
  VectorXd out(X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    out(i) = eval_kernel(k, X.row(i).transpose(), x_star);
  }
  return out;
}

GramDerivatives gram_derivatives(const ProductKernel& k, const Coords& X_train,
                                 const Eigen::Ref<const VectorXd>& x_star, Index axis) {
  check_dims(k, X_train.cols());
  check_dims(k, x_star.size());
  if (axis < 0 || axis >= k.dims()) {
    throw InvalidInput("derivative axis " + std::to_string(axis) + " out of range");
  }
  GramDerivatives out;
  out.cross.resize(X_train.rows());
  for (Index r = 0; r < X_train.rows(); ++r) {
    double v = k.axes[axis].smooth_dx(x_star(axis), X_train(r, axis));
    for (Index i = 0; i < k.dims(); ++i) {
      if (i != axis) {
        v *= k.axes[i](x_star(i), X_train(r, i));
      }
    }
    out.cross(r) = v;
  }
  double second = k.axes[axis].smooth_dxdxp(x_star(axis), x_star(axis));
  for (Index i = 0; i < k.dims(); ++i) {
    if (i != axis) {
      second *= k.axes[i].gamma + k.axes[i].beta;
    }
  }
  out.second = second;
  return out;
}

Eigen::LLT<MatrixXd> factor_gram(const ProductKernel& k, const Coords& X) {
  MatrixXd K = gram(k, X);
  K.diagonal().array() += solver_jitter(k);
  Eigen::LLT<MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("kernel Gram matrix is not positive definite");
  }
  return llt;
}

}  // namespace noisecov
