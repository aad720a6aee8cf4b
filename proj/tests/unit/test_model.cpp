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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "noisecov/model.hpp"

using namespace noisecov;
using doctest::Approx;

namespace {

double op_norm(const MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

// Normal density through an explicit determinant and inverse.
double brute_normal(const MatrixXd& Y, const VectorXd& mu, const MatrixXd& S) {
  const double det = S.determinant();
  const MatrixXd inv = S.inverse();
  double total = 0.0;
  for (Index k = 0; k < Y.rows(); ++k) {
    const VectorXd d = Y.row(k).transpose() - mu;
    total += -0.5 * (S.rows() * std::log(2 * std::numbers::pi) + std::log(det) + d.dot(inv * d));
  }
  return total;
}

MatrixXd random_lower(Index n, Rng& rng, double spread = 1.0) {
  MatrixXd L = standard_normal(n, n, rng).triangularView<Eigen::Lower>();
  for (Index i = 0; i < n; ++i) L(i, i) = std::exp(spread * standard_normal(1, rng)(0));
  return L;
}

}  // namespace

TEST_CASE("assemble_covariance examples") {
  const MatrixXd I2 = MatrixXd::Identity(2, 2);
  CHECK(assemble_covariance(I2, VectorXd::Zero(2), I2, Variant::kVanilla).isApprox(I2, 0.0));

  const MatrixXd none(3, 0);
  MatrixXd S = assemble_covariance(none, VectorXd::Zero(3), MatrixXd::Identity(3, 3),
                                   Variant::kLowRankDiag);
  CHECK((S - std::log(2.0) * MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::log(2.0) == Approx(0.693147).epsilon(1e-6));

  const double z1 = softplus_inverse(1.0);
  CHECK(z1 == Approx(0.541325).epsilon(1e-6));
  S = assemble_covariance(MatrixXd::Zero(2, 1), VectorXd::Constant(2, z1),
                          2.0 * MatrixXd::Identity(2, 2), Variant::kScaledLowRankDiag);
  CHECK((S - 4.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

  S = assemble_covariance(MatrixXd::Zero(2, 1), VectorXd::Constant(2, z1), MatrixXd::Identity(2, 2),
                          Variant::kInverseScaledLowRankDiag);
  CHECK((S - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("use_diag off fixes Lambda at the identity") {
  Rng rng(1);
  const MatrixXd U = standard_normal(3, 2, rng);
  const VectorXd z = standard_normal(3, rng);
  const MatrixXd S = assemble_covariance(U, z, MatrixXd::Identity(3, 3), Variant::kLowRankDiag,
                                         false);
  CHECK(S.isApprox(U * U.transpose() + MatrixXd::Identity(3, 3), 1e-14));
}

TEST_CASE("assembled covariances are symmetric positive definite") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index N = 1 + trial % 8;
    const Index P = trial % 3;
    const MatrixXd U = standard_normal(N, P, rng);
    const VectorXd z = standard_normal(N, rng);
    const MatrixXd L = random_lower(N, rng, 0.5);
    for (Variant v : {Variant::kLowRankDiag, Variant::kScaledLowRankDiag,
                      Variant::kInverseScaledLowRankDiag}) {
      const MatrixXd S = assemble_covariance(U, z, L, v);
      CHECK((S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, op_norm(S)));
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
    }
    // Scaled variant: Sigma >= sigma_min(L)^2 min softplus(z) I.
    const MatrixXd S = assemble_covariance(U, z, L, Variant::kScaledLowRankDiag);
    Eigen::JacobiSVD<MatrixXd> svd(L);
    const double smin = svd.singularValues().minCoeff();
    double min_sp = softplus(z(0));
    for (Index i = 0; i < N; ++i) min_sp = std::min(min_sp, softplus(z(i)));
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S);
    CHECK(eig.eigenvalues().minCoeff() >= smin * smin * min_sp - 1e-10);
    // With a diagonal L the bound is in terms of its diagonal.
    const MatrixXd D = L.diagonal().asDiagonal();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig_d(
        assemble_covariance(U, z, D, Variant::kScaledLowRankDiag));
    const double dmin = D.diagonal().minCoeff();
    CHECK(eig_d.eigenvalues().minCoeff() >= dmin * dmin * min_sp - 1e-10);
  }
}

TEST_CASE("inverse variant inverts the scaled variant") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Index N = 1 + trial % 20;
    const MatrixXd U = standard_normal(N, 2, rng);
    const VectorXd z = standard_normal(N, rng);
    const MatrixXd L = random_lower(N, rng, 0.3) / std::sqrt(static_cast<double>(N));
    const Covariance inv = assemble_covariance_full(U, z, L, Variant::kInverseScaledLowRankDiag);
    const MatrixXd fwd = assemble_covariance(U, z, L, Variant::kScaledLowRankDiag);
    const double cond = op_norm(fwd) * op_norm(inv.covariance);
    CHECK(op_norm(inv.covariance * fwd - MatrixXd::Identity(N, N)) < 1e-13 * cond);
    CHECK(inv.has_precision);
    CHECK(inv.precision().isApprox(fwd, 1e-14));
  }
}

TEST_CASE("inverse variant reports a singular precision with the condition") {
  MatrixXd L = MatrixXd::Identity(2, 2);
  L(1, 1) = 0.0;
  try {
    assemble_covariance(MatrixXd::Zero(2, 1), VectorXd::Zero(2), L,
                        Variant::kInverseScaledLowRankDiag, true, 7);
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.index() == 7);
  }
}

TEST_CASE("ModelSpec validation") {
  ModelSpec s = fixtures::tiny_spec(3, 0, Variant::kVanilla);
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = fixtures::tiny_spec(3, 0, Variant::kLowRankDiag, Observation::kNormal, false);
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = fixtures::tiny_spec(3, 0, Variant::kLowRankDiag);
  CHECK_NOTHROW(s.validate());
  s = fixtures::tiny_spec(3, 2, Variant::kInverseScaledLowRankDiag, Observation::kNormal, false);
  CHECK_THROWS_AS(s.validate(), InvalidInput);
  s = fixtures::tiny_spec(3, 3, Variant::kInverseScaledLowRankDiag, Observation::kNormal, false);
  CHECK_NOTHROW(s.validate());
  CHECK(parse_variant("inverse-scaled-lrd") == Variant::kInverseScaledLowRankDiag);
  CHECK(to_string(parse_variant("scaled-lrd")) == "scaled-lrd");
  CHECK_THROWS_AS(parse_variant("wishart"), InvalidInput);
}

TEST_CASE("prior Wishart first moment") {
  ModelSpec spec = fixtures::tiny_spec(2, 3, Variant::kVanilla);
  spec.k_sigma = ProductKernel({AxisKernel::periodic(0.0, 1.0, 1.0, 2 * std::numbers::pi)});
  MatrixXd X = MatrixXd::Zero(1, 1);
  MatrixXd total = MatrixXd::Zero(2, 2);
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    total += sample_prior(spec, X, static_cast<std::uint64_t>(s)).moments.sigma[0];
  }
  total /= draws;
  CHECK((total - 3.0 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05 * 3.0);
}

TEST_CASE("prior means average to zero") {
  ModelSpec spec = fixtures::tiny_spec(3, 1, Variant::kLowRankDiag);
  MatrixXd X(2, 1);
  X << 0.0, 1.0;
  const int draws = 10000;
  MatrixXd sum = MatrixXd::Zero(3, 2), sq = MatrixXd::Zero(3, 2);
  for (int s = 0; s < draws; ++s) {
    const MatrixXd m = sample_prior(spec, X, static_cast<std::uint64_t>(s)).latents.mu;
    sum += m;
    sq += m.cwiseAbs2();
  }
  const MatrixXd mean = sum / draws;
  const MatrixXd se = ((sq / draws - mean.cwiseAbs2()) / draws).cwiseSqrt();
  CHECK((mean.cwiseAbs().array() <= 4.0 * se.array()).all());
}

TEST_CASE("prior samples are deterministic per seed") {
  ModelSpec spec = fixtures::tiny_spec(4, 2, Variant::kScaledLowRankDiag);
  MatrixXd X(3, 1);
  X << 0.0, 1.0, 2.0;
  PriorSample a = sample_prior(spec, X, 99), b = sample_prior(spec, X, 99);
  CHECK((a.latents.mu.array() == b.latents.mu.array()).all());
  CHECK((a.latents.U.array() == b.latents.U.array()).all());
  CHECK((a.latents.z.array() == b.latents.z.array()).all());
  PriorSample c = sample_prior(spec, X, 100);
  CHECK((a.latents.U.array() != c.latents.U.array()).any());
}

TEST_CASE("very wide kernel gives nearly constant covariance") {
  ModelSpec spec = fixtures::tiny_spec(3, 2, Variant::kLowRankDiag);
  spec.k_sigma = ProductKernel({AxisKernel::squared_exponential(0.0, 1.0, 1e6)});
  MatrixXd X(2, 1);
  X << 0.0, 1.0;
  // The solver nugget leaves independent noise of sd sqrt(2e-8) between the
  // two conditions in every latent.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PriorSample p = sample_prior(spec, X, seed);
    const double scale = op_norm(p.moments.sigma[0]);
    CHECK(op_norm(p.moments.sigma[0] - p.moments.sigma[1]) < 1e-2 * scale);
  }
}

TEST_CASE("normal log-likelihood examples") {
  const MatrixXd one = MatrixXd::Identity(1, 1);
  CHECK(loglik_normal(MatrixXd::Zero(1, 1), VectorXd::Zero(1), one) ==
        Approx(-0.918938533205).epsilon(1e-12));
  CHECK(loglik_normal(MatrixXd::Ones(1, 1), VectorXd::Zero(1), one) ==
        Approx(-1.418938533205).epsilon(1e-12));
  CHECK(loglik_normal(MatrixXd::Zero(1, 2), VectorXd::Zero(2), MatrixXd::Identity(2, 2)) ==
        Approx(-1.837877066410).epsilon(1e-12));
  CHECK_THROWS_AS(loglik_normal(MatrixXd::Zero(1, 2), VectorXd::Zero(2), MatrixXd::Zero(2, 2)),
                  SingularMatrixError);
}

TEST_CASE("normal log-likelihood matches a brute-force density") {
  Rng rng(6);
  for (int trial = 0; trial < 60; ++trial) {
    const Index N = 1 + trial % 8;
    const MatrixXd A = standard_normal(N, N, rng);
    const MatrixXd S = A * A.transpose() + 0.5 * MatrixXd::Identity(N, N);
    const VectorXd mu = standard_normal(N, rng);
    const MatrixXd Y = standard_normal(4, N, rng);
    const double want = brute_normal(Y, mu, S);
    CHECK(std::abs(loglik_normal(Y, mu, S) - want) < 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("Poisson log-likelihood examples") {
  const VectorXd zero = VectorXd::Zero(1);
  CHECK(loglik_poisson_given_gain(zero, zero, zero) == Approx(-std::log(2.0)).epsilon(1e-14));
  const VectorXd z1 = VectorXd::Constant(1, softplus_inverse(1.0));
  CHECK(loglik_poisson_given_gain(VectorXd::Ones(1), z1, zero) == Approx(-1.0).epsilon(1e-13));
  CHECK(loglik_poisson_given_gain(VectorXd::Constant(1, 2.0), z1, zero) ==
        Approx(-1.0 - std::log(2.0)).epsilon(1e-13));
  CHECK_THROWS_AS(loglik_poisson_given_gain(VectorXd::Constant(1, -1.0), zero, zero),
                  InvalidInput);
  CHECK_THROWS_AS(loglik_poisson_given_gain(VectorXd::Constant(1, 0.5), zero, zero),
                  InvalidInput);
}

TEST_CASE("softplus is stable at extreme arguments") {
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) == 0.0);
  CHECK(softplus(0.0) == Approx(std::log(2.0)).epsilon(1e-15));
  for (double y : {1e-6, 0.3, 1.0, 5.0, 40.0}) {
    CHECK(softplus(softplus_inverse(y)) == Approx(y).epsilon(1e-12));
  }
}

TEST_CASE("raw scale parameterization round-trips") {
  Rng rng(9);
  const MatrixXd L = random_lower(5, rng);
  CHECK(scale_from_raw(raw_from_scale(L)).isApprox(L, 1e-14));
}
