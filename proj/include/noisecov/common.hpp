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

#ifndef NOISECOV_COMMON_HPP_
#define NOISECOV_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace noisecov {

using Index = Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Raised for malformed arguments (shape mismatches, out-of-range values).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a matrix that must be positive definite fails to factorize.
/// `index()` names the condition (or class) that failed, -1 when not
/// applicable.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, Index index = -1)
      : std::runtime_error(what), index_(index) {}
  Index index() const { return index_; }

 private:
  Index index_;
};

/// Raised by the optimizer when the objective leaves the finite range.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, long iteration, std::string term)
      : std::runtime_error(what), iteration_(iteration), term_(std::move(term)) {}
  long iteration() const { return iteration_; }
  const std::string& term() const { return term_; }

 private:
  long iteration_;
  std::string term_;
};

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// log(1 + e^x) without overflow.
template <typename Scalar>
inline Scalar softplus(Scalar x) {
  using std::abs;
  using std::exp;
  using std::log1p;
  using std::max;
  return max(x, Scalar(0)) + log1p(exp(-abs(x)));
}

/// Logistic function, the derivative of softplus.
template <typename Scalar>
inline Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + exp(-x));
  }
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

/// Inverse of softplus for y > 0.
template <typename Scalar>
inline Scalar softplus_inverse(Scalar y) {
  using std::exp;
  using std::expm1;
  using std::log;
  if (!(y > Scalar(0))) {
    throw InvalidInput("softplus_inverse requires a positive argument");
  }
  // log(e^y - 1) = y + log(1 - e^-y)
  return y > Scalar(20) ? y + std::log1p(-exp(-y)) : log(expm1(y));
}

/// log(mean(exp(v))) computed stably.
inline double log_mean_exp(const VectorXd& values) {
  if (values.size() == 0) {
    throw InvalidInput("log_mean_exp of an empty vector");
  }
  const double m = values.maxCoeff();
  if (!std::isfinite(m)) {
    return m;
  }
  return m + std::log((values.array() - m).exp().mean());
}

// Random streams ------------------------------------------------------------

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Child seeds are derived as
/// mix(seed ^ mix(stream + golden)), so that (seed, stream) pairs map to
/// well-separated generator states.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline MatrixXd standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      out(i, j) = normal(rng);
    }
  }
  return out;
}

inline VectorXd standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    out(i) = normal(rng);
  }
  return out;
}

}  // namespace noisecov

#endif  // NOISECOV_COMMON_HPP_
