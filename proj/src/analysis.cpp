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

#include "noisecov/analysis.hpp"

#include <algorithm>

namespace noisecov {

std::string_view to_string(DecoderMode m) { return m == DecoderMode::kQda ? "qda" : "lda"; }

DecoderMode parse_decoder_mode(std::string_view s) {
  if (s == "qda") return DecoderMode::kQda;
  if (s == "lda") return DecoderMode::kLda;
  throw InvalidInput("unknown decoder mode '" + std::string(s) + "'");
}

namespace {

Eigen::LLT<MatrixXd> factor_class(const MatrixXd& sigma, Index c, Index n) {
  if (sigma.rows() != n || sigma.cols() != n) {
    throw InvalidInput("class covariance has the wrong shape");
  }
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("covariance of class " + std::to_string(c) + " is not positive definite",
                              c);
  }
  return llt;
}

void check_means(const std::vector<VectorXd>& means) {
  if (means.empty()) {
    throw InvalidInput("class model needs at least one class");
  }
  for (const auto& m : means) {
    if (m.size() != means.front().size()) {
      throw InvalidInput("class means differ in dimension");
    }
  }
}

}  // namespace

ClassModel ClassModel::qda(std::vector<VectorXd> means, const std::vector<MatrixXd>& covariances) {
  check_means(means);
  if (covariances.size() != means.size()) {
    throw InvalidInput("qda needs one covariance per class");
  }
  ClassModel m;
  m.mode_ = DecoderMode::kQda;
  const Index n = means.front().size();
  for (std::size_t c = 0; c < covariances.size(); ++c) {
    m.factors_.push_back(factor_class(covariances[c], static_cast<Index>(c), n));
    m.logdets_.push_back(2.0 * MatrixXd(m.factors_.back().matrixL()).diagonal().array().log().sum());
  }
  m.means_ = std::move(means);
  return m;
}

ClassModel ClassModel::lda(std::vector<VectorXd> means, const MatrixXd& shared) {
  check_means(means);
  ClassModel m;
  m.mode_ = DecoderMode::kLda;
  m.factors_.push_back(factor_class(shared, 0, means.front().size()));
  m.logdets_.push_back(2.0 * MatrixXd(m.factors_.back().matrixL()).diagonal().array().log().sum());
  m.means_ = std::move(means);
  return m;
}

double ClassModel::log_density(Index c, const Eigen::Ref<const VectorXd>& y) const {
  if (c < 0 || c >= classes()) {
    throw InvalidInput("class index out of range");
  }
  if (y.size() != dims()) {
    throw InvalidInput("observation has the wrong dimension");
  }
  const std::size_t f = mode_ == DecoderMode::kLda ? 0 : static_cast<std::size_t>(c);
  VectorXd d = y - means_[static_cast<std::size_t>(c)];
  factors_[f].matrixL().solveInPlace(d);
  return -0.5 * (static_cast<double>(dims()) * kLog2Pi + logdets_[f] + d.squaredNorm());
}

Index classify(const ClassModel& model, const Eigen::Ref<const VectorXd>& y) {
  if (model.classes() == 0) {
    throw InvalidInput("empty class model");
  }
  Index best = 0;
  double best_value = model.log_density(0, y);
  for (Index c = 1; c < model.classes(); ++c) {
    const double v = model.log_density(c, y);
    if (v > best_value) {
      best_value = v;
      best = c;
    }
  }
  return best;
}

DecodeResult decode_accuracy(const ClassModel& model, const std::vector<MatrixXd>& trials) {
  if (static_cast<Index>(trials.size()) > model.classes()) {
    throw InvalidInput("test labels exceed the model classes");
  }
  DecodeResult out;
  out.confusion = Eigen::MatrixX<long>::Zero(model.classes(), model.classes());
  long correct = 0;
  for (std::size_t c = 0; c < trials.size(); ++c) {
    for (Index k = 0; k < trials[c].rows(); ++k) {
      const Index p = classify(model, trials[c].row(k).transpose());
      out.confusion(static_cast<Index>(c), p) += 1;
      correct += (p == static_cast<Index>(c)) ? 1 : 0;
      ++out.trials;
    }
  }
  if (out.trials == 0) {
    throw InvalidInput("decode_accuracy needs at least one test trial");
  }
  out.accuracy = static_cast<double>(correct) / static_cast<double>(out.trials);
  return out;
}

FisherTerms fisher_terms(const Eigen::Ref<const VectorXd>& dmu, const MatrixXd& sigma,
                         const MatrixXd& dsigma) {
  const Index n = sigma.rows();
  if (sigma.cols() != n || dmu.size() != n || dsigma.rows() != n || dsigma.cols() != n) {
    throw InvalidInput("fisher_information: inconsistent shapes");
  }
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("covariance is not positive definite");
  }
  FisherTerms t;
  VectorXd a = dmu;
  llt.matrixL().solveInPlace(a);
  t.mean_term = a.squaredNorm();
  // tr((S^-1 S')^2) = ||L^-1 S' L^-T||_F^2 for symmetric S'.
  MatrixXd B = dsigma;
  llt.matrixL().solveInPlace(B);
  MatrixXd Bt = B.transpose();
  llt.matrixL().solveInPlace(Bt);
  t.covariance_term = 0.5 * Bt.squaredNorm();
  return t;
}

double fisher_information(const Eigen::Ref<const VectorXd>& dmu, const MatrixXd& sigma,
                          const MatrixXd& dsigma) {
  return fisher_terms(dmu, sigma, dsigma).total();
}

double fisher_information_precision(const Eigen::Ref<const VectorXd>& dmu,
                                    const MatrixXd& precision, const MatrixXd& dsigma) {
  const Index n = precision.rows();
  if (precision.cols() != n || dmu.size() != n || dsigma.rows() != n || dsigma.cols() != n) {
    throw InvalidInput("fisher_information: inconsistent shapes");
  }
  Eigen::LLT<MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("precision is not positive definite");
  }
  // With Q = R R^T: mu'^T Q mu' = ||R^T mu'||^2, tr((Q S')^2) = ||R^T S' R||_F^2.
  const MatrixXd R = llt.matrixL();
  const double mean_term = (R.transpose() * dmu).squaredNorm();
  const double cov_term = 0.5 * (R.transpose() * dsigma * R).squaredNorm();
  return mean_term + cov_term;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw InvalidInput("quantile of an empty set");
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

FisherEstimate fisher_curve(const Posterior& post, const Coords& X_eval, Index axis, int samples,
                            std::uint64_t seed, PredictMode mode) {
  FisherEstimate out;
  out.axis = axis;
  for (Index j = 0; j < X_eval.rows(); ++j) {
    const GradientSamples g = posterior_gradients(post, X_eval.row(j).transpose(), axis, samples,
                                                  derive_seed(seed, static_cast<std::uint64_t>(j)),
                                                  mode);
    FisherPoint p;
    p.x = X_eval.row(j).transpose();
    for (std::size_t s = 0; s < g.mu.size(); ++s) {
      p.draws.push_back(fisher_information(g.dmu[s], g.sigma[s], g.dsigma[s]));
    }
    double sum = 0.0;
    for (double v : p.draws) sum += v;
    p.mean = sum / static_cast<double>(p.draws.size());
    p.lower = quantile(p.draws, 0.05);
    p.upper = quantile(p.draws, 0.95);
    out.points.push_back(std::move(p));
  }
  return out;
}

double operator_norm_error(const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != A.cols()) {
    throw InvalidInput("operator_norm_error: shape mismatch");
  }
  const MatrixXd D = A - B;
  const MatrixXd Ds = 0.5 * (D + D.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Ds, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double participation_ratio(const MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw InvalidInput("participation_ratio needs a square matrix");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma, Eigen::EigenvaluesOnly);
  const VectorXd lam = eig.eigenvalues();
  const double sq = lam.squaredNorm();
  if (!(sq > 0.0)) {
    throw InvalidInput("participation_ratio of a zero matrix");
  }
  const double s = lam.sum();
  return s * s / sq;
}

}  // namespace noisecov
