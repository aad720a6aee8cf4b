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

#include "noisecov/inference.hpp"

#include <algorithm>
#include <numeric>

#include "noisecov/baselines.hpp"

namespace noisecov {

std::string_view to_string(Family f) { return f == Family::kGaussian ? "gaussian" : "delta"; }

Family parse_family(std::string_view s) {
  if (s == "gaussian") return Family::kGaussian;
  if (s == "delta") return Family::kDelta;
  throw InvalidInput("unknown variational family '" + std::string(s) + "'");
}

Index VariationalState::latent_count() const {
  return mean.mu.size() + mean.U.size() + mean.z.size() + mean.g.size();
}

void FitConfig::validate() const {
  if (!(adam.step > 0.0)) throw InvalidInput("Adam step must be positive");
  if (iterations < 0) throw InvalidInput("iterations must be >= 0");
  if (elbo_samples < 1) throw InvalidInput("elbo_samples must be >= 1");
  if (minibatch < 0) throw InvalidInput("minibatch must be >= 0");
}

FitConfig FitConfig::poisson_defaults() {
  FitConfig c;
  c.adam.step = 0.005;
  c.iterations = 50000;
  return c;
}

std::string Terms::first_non_finite() const {
  const std::pair<const char*, double> items[] = {
      {"observation", observation}, {"prior_mu", prior_mu},     {"prior_U", prior_U},
      {"prior_z", prior_z},         {"gain_prior", gain_prior}, {"entropy", entropy}};
  for (const auto& [name, v] : items) {
    if (!std::isfinite(v)) return name;
  }
  return {};
}

// Layout ---------------------------------------------------------------------

Layout::Layout(const ModelSpec& spec, Index C_, Index total_trials, Family f)
    : N(spec.N),
      P(spec.P),
      C(C_),
      T(spec.observation == Observation::kPoisson ? total_trials : 0),
      family(f) {}

namespace {

void put(VectorXd& flat, Index& at, const MatrixXd& m) {
  flat.segment(at, m.size()) = Eigen::Map<const VectorXd>(m.data(), m.size());
  at += m.size();
}

void take(const Eigen::Ref<const VectorXd>& flat, Index& at, MatrixXd& m, Index rows,
          Index cols) {
  m = Eigen::Map<const MatrixXd>(flat.data() + at, rows, cols);
  at += rows * cols;
}

}  // namespace

VectorXd Layout::pack(const VariationalState& q, const Params& theta) const {
  VectorXd flat = VectorXd::Zero(size());
  Index at = 0;
  put(flat, at, q.mean.mu);
  put(flat, at, q.mean.U);
  put(flat, at, q.mean.z);
  if (T > 0) put(flat, at, q.mean.g);
  if (family == Family::kGaussian) {
    put(flat, at, q.log_scale.mu);
    put(flat, at, q.log_scale.U);
    put(flat, at, q.log_scale.z);
    if (T > 0) put(flat, at, q.log_scale.g);
  }
  MatrixXd rel = theta.L;
  if (L_ref.size() > 0) {
    rel = L_ref.triangularView<Eigen::Lower>().solve(theta.L);
  }
  const MatrixXd raw = raw_from_scale(rel);
  for (Index j = 0; j < N; ++j) {
    for (Index i = j; i < N; ++i) {
      flat(at++) = raw(i, j);
    }
  }
  flat.segment(at, N) = theta.r;
  return flat;
}

void Layout::unpack(const Eigen::Ref<const VectorXd>& flat, VariationalState& q,
                    Params& theta) const {
  if (flat.size() != size()) {
    throw InvalidInput("flat parameter vector has the wrong size");
  }
  Index at = 0;
  q.family = family;
  take(flat, at, q.mean.mu, N, C);
  take(flat, at, q.mean.U, N * P, C);
  take(flat, at, q.mean.z, N, C);
  if (T > 0) {
    take(flat, at, q.mean.g, N, T);
  } else {
    q.mean.g.resize(N, 0);
  }
  if (family == Family::kGaussian) {
    take(flat, at, q.log_scale.mu, N, C);
    take(flat, at, q.log_scale.U, N * P, C);
    take(flat, at, q.log_scale.z, N, C);
    if (T > 0) {
      take(flat, at, q.log_scale.g, N, T);
    } else {
      q.log_scale.g.resize(N, 0);
    }
  } else {
    q.log_scale = LatentState{};
  }
  MatrixXd raw = MatrixXd::Zero(N, N);
  for (Index j = 0; j < N; ++j) {
    for (Index i = j; i < N; ++i) {
      raw(i, j) = flat(at++);
    }
  }
  theta.L = scale_from_raw(raw);
  if (L_ref.size() > 0) {
    theta.L = (L_ref.triangularView<Eigen::Lower>() * theta.L).eval();
  }
  theta.r = flat.segment(at, N);
}

// Objective ------------------------------------------------------------------

namespace {

double log_det(const Eigen::LLT<MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

struct BlockResult {
  double value = 0.0;
  VectorXd d_mu;
  MatrixXd d_inner;  // d value / d (U U^T + Lambda)
  MatrixXd d_L;      // d value / d L
  MatrixXd precision;
};

// Gaussian log density of `count` vectors with the given mean and scatter
// (sum of outer products about `mean`) under N(mu, Sigma(U, z, L)).
BlockResult gaussian_block(const ModelSpec& spec, const Eigen::Ref<const VectorXd>& mu,
                           const Eigen::Ref<const MatrixXd>& U,
                           const Eigen::Ref<const VectorXd>& z, const MatrixXd& L, double count,
                           const VectorXd& mean, const MatrixXd& scatter, bool want_grad,
                           Index condition) {
  const Index n = spec.N;
  const MatrixXd M = inner_matrix(U, z, spec.variant, spec.use_diag);
  MatrixXd S;
  MatrixXd LM;
  if (spec.uses_scale()) {
    LM = L.triangularView<Eigen::Lower>() * M;
    S = LM * L.transpose();
    S = 0.5 * (S + S.transpose()).eval();
  } else {
    S = M;
  }
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("covariance factorization failed at condition " +
                                  std::to_string(condition),
                              condition);
  }
  const double logdet = log_det(llt);
  const VectorXd d = mean - mu;
  MatrixXd full = scatter;
  full.noalias() += count * d * d.transpose();
  const MatrixXd inv = llt.solve(MatrixXd::Identity(n, n));
  const double nlog2pi = static_cast<double>(n) * kLog2Pi;

  BlockResult out;
  MatrixXd G;
  if (!spec.is_inverse()) {
    out.value = -0.5 * (count * (nlog2pi + logdet) + (inv.array() * full.array()).sum());
    if (!want_grad) return out;
    out.d_mu = count * (inv * d);
    G = -0.5 * (count * inv - inv * full * inv);
    out.precision = inv;
  } else {
    // S is the precision.
    out.value = -0.5 * (count * (nlog2pi - logdet) + (S.array() * full.array()).sum());
    if (!want_grad) return out;
    out.d_mu = count * (S * d);
    G = 0.5 * (count * inv - full);
    out.precision = S;
  }
  if (spec.uses_scale()) {
    out.d_inner = L.transpose() * G * L.triangularView<Eigen::Lower>();
    out.d_L = 2.0 * (G * L.triangularView<Eigen::Lower>()) * M;
  } else {
    out.d_inner = std::move(G);
  }
  return out;
}

}  // namespace

Objective::Objective(const ModelSpec& spec, const ConditionGrid& grid, const Dataset& data,
                     Index minibatch)
    : spec_(spec), grid_(grid), trials_(data.trials), minibatch_(minibatch) {
  spec_.validate();
  data.validate();
  if (data.neurons() != spec_.N) {
    throw InvalidInput("dataset neuron count does not match the model");
  }
  if (grid_.size() != data.conditions()) {
    throw InvalidInput("grid size does not match the dataset");
  }
  if (minibatch_ < 0) {
    throw InvalidInput("minibatch must be >= 0");
  }
  chol_mu_ = factor_gram(spec_.k_mu, grid_.coords);
  chol_sigma_ = factor_gram(spec_.k_sigma, grid_.coords);
  logdet_mu_ = log_det(chol_mu_);
  logdet_sigma_ = log_det(chol_sigma_);
  Index at = 0;
  for (const auto& Y : trials_) {
    offsets_.push_back(at);
    at += Y.rows();
    if (spec_.observation == Observation::kPoisson) {
      check_counts(Y);
    } else {
      mean_.push_back(trial_mean(Y));
      scatter_.push_back(centered_scatter(Y));
    }
  }
  total_trials_ = at;
  gauss_ = Layout(spec_, grid_.size(), total_trials_, Family::kGaussian);
  delta_ = Layout(spec_, grid_.size(), total_trials_, Family::kDelta);
}

Objective::Batch Objective::draw_batch(Rng& rng) const {
  Batch b;
  for (const auto& Y : trials_) {
    const Index K = Y.rows();
    std::vector<Index> rows(static_cast<std::size_t>(K));
    std::iota(rows.begin(), rows.end(), Index{0});
    const Index take = std::min(minibatch_, K);
    // Partial Fisher-Yates; the first `take` entries are the batch.
    for (Index i = 0; i < take; ++i) {
      std::uniform_int_distribution<Index> pick(i, K - 1);
      std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(static_cast<std::size_t>(take));
    std::sort(rows.begin(), rows.end());
    b.weight.push_back(static_cast<double>(K) / static_cast<double>(take));
    b.rows.push_back(std::move(rows));
  }
  return b;
}

double Objective::evaluate(const LatentState& x, const Batch* batch, Gradients* grad,
                           Terms* terms) const {
  const Index N = spec_.N;
  const Index P = spec_.P;
  const Index C = grid_.size();
  const bool want = grad != nullptr;
  const bool poisson = spec_.observation == Observation::kPoisson;
  Terms t;

  if (want) {
    LatentState& g = grad->latents;
    g.mu = MatrixXd::Zero(N, C);
    g.U = MatrixXd::Zero(N * P, C);
    g.z = MatrixXd::Zero(N, C);
    g.g = MatrixXd::Zero(N, poisson ? total_trials_ : 0);
    g.L = MatrixXd::Zero(N, N);
    g.r = VectorXd::Zero(N);
  }

  // GP priors: each row of a latent block is one function over conditions.
  auto gp_prior = [&](const MatrixXd& F, const Eigen::LLT<MatrixXd>& chol, double logdet,
                      MatrixXd* dF) {
    if (F.rows() == 0) return 0.0;
    const MatrixXd A = chol.solve(F.transpose());  // C x rows
    const double quad = (F.transpose().array() * A.array()).sum();
    if (dF) *dF -= A.transpose();
    return -0.5 * (static_cast<double>(F.rows()) * (static_cast<double>(C) * kLog2Pi + logdet) +
                   quad);
  };
  t.prior_mu = gp_prior(x.mu, chol_mu_, logdet_mu_, want ? &grad->latents.mu : nullptr);
  t.prior_U = gp_prior(x.U, chol_sigma_, logdet_sigma_, want ? &grad->latents.U : nullptr);
  t.prior_z = gp_prior(x.z, chol_sigma_, logdet_sigma_, want ? &grad->latents.z : nullptr);

  for (Index c = 0; c < C; ++c) {
    const MatrixXd& Y = trials_[c];
    const Index K = Y.rows();
    const double w = batch ? batch->weight[c] : 1.0;
    const std::vector<Index>* rows = batch ? &batch->rows[c] : nullptr;
    const Index b = rows ? static_cast<Index>(rows->size()) : K;
    const Eigen::Map<const MatrixXd> Uc(x.U.col(c).data(), N, P);

    // Vectors entering the Gaussian block: trials or gains.
    VectorXd mean;
    MatrixXd scatter;
    MatrixXd vecs;  // N x b, only when per-vector gradients are needed
    if (!poisson && !rows) {
      mean = mean_[c];
      scatter = scatter_[c];
    } else {
      vecs.resize(N, b);
      for (Index i = 0; i < b; ++i) {
        const Index k = rows ? (*rows)[static_cast<std::size_t>(i)] : i;
        vecs.col(i) = poisson ? VectorXd(x.g.col(offsets_[c] + k)) : VectorXd(Y.row(k).transpose());
      }
      mean = vecs.rowwise().mean();
      const MatrixXd centered = vecs.colwise() - mean;
      scatter = centered * centered.transpose();
    }
    BlockResult blk = gaussian_block(spec_, x.mu.col(c), Uc, x.z.col(c), x.L,
                                     static_cast<double>(b), mean, scatter, want, c);
    (poisson ? t.gain_prior : t.observation) += w * blk.value;

    if (want) {
      LatentState& g = grad->latents;
      g.mu.col(c) += w * blk.d_mu;
      if (P > 0) {
        Eigen::Map<MatrixXd> dU(g.U.col(c).data(), N, P);
        dU.noalias() += (2.0 * w) * blk.d_inner * Uc;
      }
      if (spec_.uses_diag_field()) {
        for (Index i = 0; i < N; ++i) {
          g.z(i, c) += w * blk.d_inner(i, i) * sigmoid(x.z(i, c));
        }
      }
      if (spec_.uses_scale()) {
        g.L += w * blk.d_L;
      }
      if (poisson) {
        const MatrixXd dg = -(blk.precision * (vecs.colwise() - x.mu.col(c)));
        for (Index i = 0; i < b; ++i) {
          const Index k = rows ? (*rows)[static_cast<std::size_t>(i)] : i;
          g.g.col(offsets_[c] + k) += w * dg.col(i);
        }
      }
    }

    if (poisson) {
      double obs = 0.0;
      for (Index i = 0; i < b; ++i) {
        const Index k = rows ? (*rows)[static_cast<std::size_t>(i)] : i;
        const Index col = offsets_[c] + k;
        for (Index n = 0; n < N; ++n) {
          const double a = x.r(n) + x.g(n, col);
          const double rate = softplus(a);
          const double y = Y(k, n);
          obs += -rate - std::lgamma(y + 1.0) + (y > 0.0 ? y * std::log(rate) : 0.0);
          if (want) {
            const double d = (y / rate - 1.0) * sigmoid(a);
            grad->latents.g(n, col) += w * d;
            grad->latents.r(n) += w * d;
          }
        }
      }
      t.observation += w * obs;
    }
  }
  if (want) {
    grad->latents.L = grad->latents.L.triangularView<Eigen::Lower>();
  }
  if (terms) *terms = t;
  return t.total();
}

double Objective::log_joint(const LatentState& latents, Terms* terms) const {
  return evaluate(latents, nullptr, nullptr, terms);
}

void Objective::set_scale_reference(const MatrixXd& L0) {
  if (L0.rows() != spec_.N || L0.cols() != spec_.N) {
    throw InvalidInput("scale reference has the wrong shape");
  }
  MatrixXd lower = L0.triangularView<Eigen::Lower>();
  gauss_.L_ref = lower;
  delta_.L_ref = std::move(lower);
}

double Objective::elbo(const Eigen::Ref<const VectorXd>& flat, Family family, int samples,
                       std::uint64_t seed, VectorXd* gradient, Terms* terms) const {
  if (samples < 1) {
    throw InvalidInput("elbo needs at least one sample");
  }
  const Layout& lay = layout(family);
  VariationalState q;
  Params theta;
  lay.unpack(flat, q, theta);
  const bool gauss = family == Family::kGaussian;

  double total = 0.0;
  Terms acc;
  if (gradient) *gradient = VectorXd::Zero(lay.size());

  for (int s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    LatentState x;
    LatentState eps;
    if (gauss) {
      auto draw = [&](const MatrixXd& m, const MatrixXd& ls, MatrixXd& out, MatrixXd& e) {
        e = standard_normal(m.rows(), m.cols(), rng);
        out = m.array() + ls.array().exp() * e.array();
      };
      draw(q.mean.mu, q.log_scale.mu, x.mu, eps.mu);
      draw(q.mean.U, q.log_scale.U, x.U, eps.U);
      draw(q.mean.z, q.log_scale.z, x.z, eps.z);
      draw(q.mean.g, q.log_scale.g, x.g, eps.g);
    } else {
      x.mu = q.mean.mu;
      x.U = q.mean.U;
      x.z = q.mean.z;
      x.g = q.mean.g;
    }
    x.L = theta.L;
    x.r = theta.r;
    Batch batch;
    const Batch* bp = nullptr;
    if (minibatch_ > 0) {
      batch = draw_batch(rng);
      bp = &batch;
    }

    Gradients g;
    Terms t;
    double value = evaluate(x, bp, gradient ? &g : nullptr, &t);
    if (gauss) {
      // -log q at the draw: sum of 0.5 log 2 pi + s + 0.5 eps^2.
      double ent = 0.0;
      auto add = [&](const MatrixXd& ls, const MatrixXd& e) {
        ent += 0.5 * kLog2Pi * static_cast<double>(ls.size()) + ls.sum() + 0.5 * e.squaredNorm();
      };
      add(q.log_scale.mu, eps.mu);
      add(q.log_scale.U, eps.U);
      add(q.log_scale.z, eps.z);
      add(q.log_scale.g, eps.g);
      t.entropy = ent;
      value += ent;
    }
    total += value;
    acc.observation += t.observation;
    acc.prior_mu += t.prior_mu;
    acc.prior_U += t.prior_U;
    acc.prior_z += t.prior_z;
    acc.gain_prior += t.gain_prior;
    acc.entropy += t.entropy;

    if (gradient) {
      VectorXd& out = *gradient;
      Index at = 0;
      auto emit_mean = [&](const MatrixXd& d) {
        out.segment(at, d.size()) += Eigen::Map<const VectorXd>(d.data(), d.size());
        at += d.size();
      };
      emit_mean(g.latents.mu);
      emit_mean(g.latents.U);
      emit_mean(g.latents.z);
      if (lay.T > 0) emit_mean(g.latents.g);
      if (gauss) {
        // d/ds [log p(m + e^s eps)] = grad * eps * e^s; d/ds [-log q] = 1.
        auto emit_scale = [&](const MatrixXd& d, const MatrixXd& ls, const MatrixXd& e) {
          const MatrixXd v = (d.array() * e.array() * ls.array().exp() + 1.0).matrix();
          out.segment(at, v.size()) += Eigen::Map<const VectorXd>(v.data(), v.size());
          at += v.size();
        };
        emit_scale(g.latents.mu, q.log_scale.mu, eps.mu);
        emit_scale(g.latents.U, q.log_scale.U, eps.U);
        emit_scale(g.latents.z, q.log_scale.z, eps.z);
        if (lay.T > 0) emit_scale(g.latents.g, q.log_scale.g, eps.g);
      }
      MatrixXd dL = g.latents.L;
      MatrixXd rel = theta.L;
      if (lay.L_ref.size() > 0) {
        dL = lay.L_ref.transpose() * dL;
        rel = lay.L_ref.triangularView<Eigen::Lower>().solve(theta.L);
      }
      for (Index j = 0; j < lay.N; ++j) {
        for (Index i = j; i < lay.N; ++i) {
          out(at++) += (i == j) ? dL(i, i) * rel(i, i) : dL(i, j);
        }
      }
      out.segment(at, lay.N) += g.latents.r;
    }
  }
  const double inv = 1.0 / static_cast<double>(samples);
  if (gradient) *gradient *= inv;
  if (terms) {
    acc.observation *= inv;
    acc.prior_mu *= inv;
    acc.prior_U *= inv;
    acc.prior_z *= inv;
    acc.gain_prior *= inv;
    acc.entropy *= inv;
    *terms = acc;
  }
  return total * inv;
}

// Free functions -------------------------------------------------------------

double log_joint(const ModelSpec& spec, const ConditionGrid& grid, const LatentState& latents,
                 const Dataset& data) {
  return Objective(spec, grid, data).log_joint(latents);
}

double elbo(const ModelSpec& spec, const ConditionGrid& grid, const VariationalState& q,
            const Params& theta, const Dataset& data, int samples, std::uint64_t seed) {
  Objective obj(spec, grid, data);
  const Layout& lay = obj.layout(q.family);
  return obj.elbo(lay.pack(q, theta), q.family, samples, seed);
}

VectorXd elbo_gradient(const ModelSpec& spec, const ConditionGrid& grid,
                       const VariationalState& q, const Params& theta, const Dataset& data,
                       int samples, std::uint64_t seed) {
  Objective obj(spec, grid, data);
  const Layout& lay = obj.layout(q.family);
  VectorXd grad;
  obj.elbo(lay.pack(q, theta), q.family, samples, seed, &grad);
  return grad;
}

void adam_step(Eigen::Ref<VectorXd> params, const Eigen::Ref<const VectorXd>& grads,
               AdamMoments& moments, long t, const AdamConfig& config) {
  if (t < 1) {
    throw InvalidInput("adam_step needs t >= 1");
  }
  if (moments.first.size() != params.size()) moments.first = VectorXd::Zero(params.size());
  if (moments.second.size() != params.size()) moments.second = VectorXd::Zero(params.size());
  moments.first = config.beta1 * moments.first + (1.0 - config.beta1) * grads;
  moments.second =
      config.beta2 * moments.second + (1.0 - config.beta2) * grads.array().square().matrix();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  params.array() -= config.step * (moments.first.array() / c1) /
                    ((moments.second.array() / c2).sqrt() + config.epsilon);
}

// Posterior ------------------------------------------------------------------

const Eigen::LLT<MatrixXd>& Posterior::chol_mu() const {
  if (!chol_mu_) chol_mu_ = factor_gram(spec.k_mu, grid.coords);
  return *chol_mu_;
}

const Eigen::LLT<MatrixXd>& Posterior::chol_sigma() const {
  if (!chol_sigma_) chol_sigma_ = factor_gram(spec.k_sigma, grid.coords);
  return *chol_sigma_;
}

LatentState Posterior::point_latents() const {
  LatentState x;
  x.mu = q.mean.mu;
  x.U = q.mean.U;
  x.z = q.mean.z;
  x.g = q.mean.g;
  x.L = theta.L;
  x.r = theta.r;
  return x;
}

LatentState Posterior::draw_latents(Rng& rng) const {
  if (q.family == Family::kDelta) {
    return point_latents();
  }
  LatentState x;
  auto draw = [&](const MatrixXd& m, const MatrixXd& ls) -> MatrixXd {
    const MatrixXd e = standard_normal(m.rows(), m.cols(), rng);
    return (m.array() + ls.array().exp() * e.array()).matrix();
  };
  x.mu = draw(q.mean.mu, q.log_scale.mu);
  x.U = draw(q.mean.U, q.log_scale.U);
  x.z = draw(q.mean.z, q.log_scale.z);
  x.g = draw(q.mean.g, q.log_scale.g);
  x.L = theta.L;
  x.r = theta.r;
  return x;
}

MomentField Posterior::fitted_moments() const { return moment_field(spec, point_latents()); }

// Fitting --------------------------------------------------------------------

namespace {

MatrixXd floored_grand(const std::vector<MatrixXd>& vecs, double floor_rel) {
  MatrixXd G = grand_empirical(vecs);
  const double scale = std::max(G.trace() / static_cast<double>(G.rows()), 1e-300);
  G.diagonal().array() += floor_rel * scale;
  return G;
}

MatrixXd lower_cholesky(const MatrixXd& A) {
  Eigen::LLT<MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("initial scale matrix is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

void initialize(const ModelSpec& spec, const Dataset& data, const FitConfig& config,
                VariationalState& q, Params& theta) {
  const Index N = spec.N;
  const Index P = spec.P;
  const Index C = data.conditions();
  const bool poisson = spec.observation == Observation::kPoisson;
  Rng rng(derive_seed(config.seed, 0x1417));

  q.family = config.family;
  theta.r = VectorXd::Zero(N);

  // Pseudo-observations in the space where Sigma lives: the trials
  // themselves, or for counts a gain per trial matching its rate.
  std::vector<MatrixXd> pseudo;
  MatrixXd gains;
  if (poisson) {
    Index T = data.total_trials();
    VectorXd rate = VectorXd::Zero(N);
    for (const auto& Y : data.trials) rate += Y.colwise().sum().transpose();
    rate /= static_cast<double>(T);
    for (Index n = 0; n < N; ++n) theta.r(n) = softplus_inverse(std::max(rate(n), 0.05));
    gains.resize(N, T);
    Index at = 0;
    for (const auto& Y : data.trials) {
      MatrixXd G(Y.rows(), N);
      for (Index k = 0; k < Y.rows(); ++k) {
        for (Index n = 0; n < N; ++n) {
          G(k, n) = softplus_inverse(std::max(Y(k, n), 0.5)) - theta.r(n);
        }
        gains.col(at++) = G.row(k).transpose();
      }
      pseudo.push_back(std::move(G));
    }
  } else {
    pseudo = data.trials;
  }

  q.mean.mu.resize(N, C);
  for (Index c = 0; c < C; ++c) q.mean.mu.col(c) = trial_mean(pseudo[c]);
  q.mean.z = MatrixXd::Constant(N, C, softplus_inverse(1.0));
  q.mean.U = 0.01 * standard_normal(N * P, C, rng);
  q.mean.g = poisson ? gains : MatrixXd(N, 0);

  const MatrixXd grand = floored_grand(pseudo, config.init_floor);
  theta.L = MatrixXd::Identity(N, N);
  if (spec.variant == Variant::kScaledLowRankDiag) {
    theta.L = lower_cholesky(grand);
  } else if (spec.variant == Variant::kInverseScaledLowRankDiag) {
    theta.L = lower_cholesky(grand.llt().solve(MatrixXd::Identity(N, N)));
  } else if (spec.variant == Variant::kVanilla) {
    // Sigma = U U^T has no other term; start the leading columns at the
    // Cholesky factor of the grand covariance.
    const MatrixXd Lg = lower_cholesky(grand);
    const Index m = std::min(N, P);
    for (Index c = 0; c < C; ++c) {
      Eigen::Map<MatrixXd> Uc(q.mean.U.col(c).data(), N, P);
      Uc.leftCols(m) += Lg.leftCols(m);
    }
  }

  q.log_scale.mu = MatrixXd::Constant(N, C, std::log(0.01));
  q.log_scale.U = MatrixXd::Constant(N * P, C, std::log(0.01));
  q.log_scale.z = MatrixXd::Constant(N, C, std::log(0.01));
  q.log_scale.g = MatrixXd::Constant(N, q.mean.g.cols(), std::log(0.01));
  if (config.family == Family::kDelta) {
    q.log_scale = LatentState{};
    q.log_scale.g.resize(N, 0);
  }
}

Posterior fit(const ModelSpec& spec, const Dataset& data, const FitConfig& config) {
  config.validate();
  Objective obj(spec, data.grid, data, config.minibatch);
  Posterior post;
  post.spec = spec;
  post.grid = data.grid;
  post.config = config;
  initialize(spec, data, config, post.q, post.theta);

  if (spec.uses_scale()) obj.set_scale_reference(post.theta.L);
  const Layout& lay = obj.layout(config.family);
  VectorXd flat = lay.pack(post.q, post.theta);
  VectorXd mask = VectorXd::Ones(lay.size());
  if (!config.learn_L || !spec.uses_scale()) {
    mask.segment(lay.L_offset(), lay.L_size()).setZero();
  }
  if (!config.learn_r || spec.observation != Observation::kPoisson) {
    mask.segment(lay.r_offset(), lay.N).setZero();
  }

  AdamMoments moments;
  VectorXd grad;
  post.elbo_trace.reserve(static_cast<std::size_t>(config.iterations));
  for (long t = 1; t <= config.iterations; ++t) {
    Terms terms;
    double value;
    try {
      value = obj.elbo(flat, config.family, config.elbo_samples,
                       derive_seed(config.seed, static_cast<std::uint64_t>(t)), &grad, &terms);
    } catch (const SingularMatrixError& e) {
      throw NonFiniteError("ELBO is not finite at iteration " + std::to_string(t - 1) + ": " +
                               e.what(),
                           t - 1, spec.observation == Observation::kPoisson ? "gain_prior"
                                                                            : "observation");
    }
    if (!std::isfinite(value) || !grad.allFinite()) {
      std::string term = terms.first_non_finite();
      if (term.empty()) term = "gradient";
      throw NonFiniteError("ELBO is not finite at iteration " + std::to_string(t - 1) +
                               " (term: " + term + ")",
                           t - 1, term);
    }
    post.elbo_trace.push_back(value);
    grad = -(grad.array() * mask.array()).matrix();
    adam_step(flat, grad, moments, t, config.adam);
  }
  lay.unpack(flat, post.q, post.theta);
  return post;
}

}  // namespace noisecov
