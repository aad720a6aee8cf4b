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

#include "noisecov/experiment.hpp"

#include <algorithm>
#include <numbers>

#include "noisecov/analysis.hpp"
#include "noisecov/parallel.hpp"
#include "noisecov/posterior.hpp"
#include "noisecov/synthetic.hpp"

namespace noisecov {

std::vector<CvPoint> cv_grid(const CvConfig& cv, const ModelSpec& base) {
  const std::vector<double> lm =
      cv.lambda_mu.empty() ? std::vector<double>{base.k_mu.axes.front().lambda} : cv.lambda_mu;
  const std::vector<double> ls = cv.lambda_sigma.empty()
                                     ? std::vector<double>{base.k_sigma.axes.front().lambda}
                                     : cv.lambda_sigma;
  const std::vector<Index> ps = cv.P.empty() ? std::vector<Index>{base.P} : cv.P;
  const std::vector<Variant> vs = cv.variant.empty() ? std::vector<Variant>{base.variant} : cv.variant;
  std::vector<CvPoint> out;
  for (Variant v : vs) {
    for (Index p : ps) {
      for (double a : lm) {
        for (double b : ls) {
          out.push_back({a, b, p, v});
        }
      }
    }
  }
  return out;
}

ModelSpec apply_point(const ModelSpec& base, const CvPoint& p) {
  ModelSpec s = base;
  for (auto& a : s.k_mu.axes) a.lambda = p.lambda_mu;
  for (auto& a : s.k_sigma.axes) a.lambda = p.lambda_sigma;
  s.P = p.P;
  s.variant = p.variant;
  return s;
}

CvResult cv_select(const Dataset& data, const ModelSpec& base, const std::vector<CvPoint>& grid,
                   const FitConfig& fit_config, int folds, double f_train, double f_val,
                   double f_test, std::uint64_t seed, int threads) {
  if (grid.empty()) {
    throw InvalidInput("cv_select needs a non-empty hyperparameter grid");
  }
  const CvPlan plan = trial_fraction_plan(data, f_train, f_val, f_test, seed, folds);
  CvResult out;
  out.grid = grid;
  const Index G = static_cast<Index>(grid.size());
  out.table.resize(static_cast<std::size_t>(G * folds));
  parallel_for(G * folds, threads, [&](Index cell) {
    const Index g = cell / folds;
    const int f = static_cast<int>(cell % folds);
    CvCell& c = out.table[static_cast<std::size_t>(cell)];
    c.point = g;
    c.fold = f;
    try {
      const Fold& fold = plan.folds[static_cast<std::size_t>(f)];
      const Dataset train = extract(data, fold, Part::kTrain);
      const Dataset val = extract(data, fold, Part::kValidation, true);
      const ModelSpec spec = apply_point(base, grid[static_cast<std::size_t>(g)]);
      const Posterior post = fit(spec, train, fit_config);
      c.score = heldout_loglik(post, val, HeldoutMode::single_sample(),
                               derive_seed(seed, 1000 + static_cast<std::uint64_t>(cell)));
      if (std::isnan(c.score)) c.score = -std::numeric_limits<double>::infinity();
    } catch (const std::exception& e) {
      c.score = -std::numeric_limits<double>::infinity();
      c.error = e.what();
    }
  });
  out.mean_score.assign(static_cast<std::size_t>(G), 0.0);
  for (const auto& c : out.table) out.mean_score[static_cast<std::size_t>(c.point)] += c.score / folds;
  out.best = 0;
  for (Index g = 1; g < G; ++g) {
    if (out.mean_score[static_cast<std::size_t>(g)] > out.mean_score[static_cast<std::size_t>(out.best)]) {
      out.best = g;
    }
  }
  for (int f = 0; f < folds; ++f) {
    Index best = 0;
    for (Index g = 1; g < G; ++g) {
      if (out.table[static_cast<std::size_t>(g * folds + f)].score >
          out.table[static_cast<std::size_t>(best * folds + f)].score) {
        best = g;
      }
    }
    out.best_per_fold.push_back(best);
  }
  return out;
}

double plugin_heldout_loglik(const std::vector<VectorXd>& mu, const std::vector<MatrixXd>& sigma,
                             const std::vector<MatrixXd>& test) {
  if (mu.size() != test.size() || sigma.size() != test.size()) {
    throw InvalidInput("held-out set does not match the estimate's conditions");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < test.size(); ++c) {
    if (test[c].rows() == 0) continue;
    try {
      total += loglik_normal(test[c], mu[c], sigma[c], static_cast<Index>(c));
    } catch (const SingularMatrixError&) {
      return -std::numeric_limits<double>::infinity();
    }
  }
  return total;
}

ExperimentData prepare_data(const ExperimentConfig& config) {
  ExperimentData d;
  Dataset extra;
  if (config.data.source == "synthetic") {
    SyntheticBundle b = generate_synthetic_bundle(config.data.synthetic, config.data.test_trials);
    d.full = std::move(b.train);
    extra = std::move(b.test);
  } else {
    d.full = read_dataset(config.data.path);
  }
  const SplitConfig& s = config.split;
  const std::uint64_t split_seed = derive_seed(config.seed, 2);
  if (s.scheme == "trial_fraction") {
    const Fold fold = trial_fraction(d.full, s.train, s.val, s.test, split_seed);
    d.train = extract(d.full, fold, Part::kTrain);
    d.test = extract(d.full, fold, Part::kTest, true);
    for (Index c = 0; c < d.full.conditions(); ++c) d.test_conditions.push_back(c);
  } else if (s.scheme == "extra_trials") {
    if (extra.trials.empty()) {
      throw InvalidInput("split 'extra_trials' needs synthetic data with test_trials > 0");
    }
    d.train = d.full;
    d.test = std::move(extra);
    for (Index c = 0; c < d.full.conditions(); ++c) d.test_conditions.push_back(c);
  } else {
    const std::vector<Index> held =
        s.scheme == "holdout" ? s.conditions
                              : random_conditions(d.full.conditions(), s.count, split_seed);
    const Fold fold = holdout_conditions(d.full, held);
    d.train = extract(d.full, fold, Part::kTrain);
    d.test = extract(d.full, fold, Part::kTest);
    d.test_conditions = fold.held_out;
    d.holdout = true;
  }
  return d;
}

namespace {

struct MethodOutcome {
  std::string name;
  Json report;
  // Artifacts: relative path -> contents.
  std::vector<std::pair<std::string, std::string>> files;
};

Json unavailable(const std::string& reason) { return {{"available", false}, {"reason", reason}}; }

void evaluate_moments(const ExperimentConfig& config, const ExperimentData& data,
                      const std::vector<VectorXd>& mu, const std::vector<MatrixXd>& sigma,
                      MethodOutcome& out) {
  // Operator norm against ground truth at the test conditions.
  if (!config.evaluate.operator_norm) {
    out.report["operator_norm"] = unavailable("not requested");
  } else if (!data.full.truth) {
    out.report["operator_norm"] = unavailable("dataset has no ground truth");
  } else {
    Json per = Json::array();
    std::string csv = "condition,error\n";
    double total = 0.0;
    for (std::size_t i = 0; i < data.test_conditions.size(); ++i) {
      const Index c = data.test_conditions[i];
      const double e = operator_norm_error(sigma[i], data.full.truth->sigma[c]);
      per.push_back(json_number(e));
      total += e;
      csv += std::to_string(c) + "," + format_double(e) + "\n";
    }
    out.report["operator_norm"] = {
        {"available", true},
        {"mean", json_number(total / static_cast<double>(data.test_conditions.size()))},
        {"per_condition", per}};
    out.files.emplace_back(out.name + "/operator_norm.csv", csv);
  }
  // Decoding of the test trials with the estimated moments.
  if (!config.evaluate.decode) {
    out.report["decode"] = unavailable("not requested");
    return;
  }
  try {
    ClassModel model = config.evaluate.decoder == DecoderMode::kQda
                           ? ClassModel::qda(mu, sigma)
                           : ClassModel::lda(mu, [&] {
                               MatrixXd avg = MatrixXd::Zero(sigma[0].rows(), sigma[0].cols());
                               for (const auto& s : sigma) avg += s;
                               return MatrixXd(avg / static_cast<double>(sigma.size()));
                             }());
    const DecodeResult r = decode_accuracy(model, data.test.trials);
    Json confusion = Json::array();
    for (Index i = 0; i < r.confusion.rows(); ++i) {
      Json row = Json::array();
      for (Index j = 0; j < r.confusion.cols(); ++j) row.push_back(r.confusion(i, j));
      confusion.push_back(row);
    }
    out.report["decode"] = {{"available", true},
                            {"decoder", to_string(config.evaluate.decoder)},
                            {"accuracy", r.accuracy},
                            {"trials", r.trials},
                            {"confusion", confusion}};
  } catch (const std::exception& e) {
    out.report["decode"] = unavailable(e.what());
  }
}

MethodOutcome run_wishart(const ExperimentConfig& config, const ExperimentData& data) {
  MethodOutcome out;
  out.name = "wishart";
  const ModelSpec spec = config.model.resolve(data.train.neurons(), data.train.grid);
  const Posterior post = fit(spec, data.train, config.fit);
  out.files.emplace_back("wishart/elbo_trace.csv", elbo_trace_csv(post.elbo_trace));
  out.report["status"] = "ok";
  out.report["spec"] = spec_to_json(spec);
  out.report["elbo_final"] =
      post.elbo_trace.empty() ? Json(nullptr) : json_number(post.elbo_trace.back());

  const std::uint64_t s = config.seed;
  if (spec.observation == Observation::kPoisson) {
    out.report["heldout_loglik"] = json_number(marginal_loglik_poisson(
        post, data.test, std::max(1, config.evaluate.heldout.samples), derive_seed(s, 101)));
    out.report["heldout_kind"] = "poisson_marginal";
  } else {
    long lifted = 0;
    out.report["heldout_loglik"] =
        json_number(heldout_loglik(post, data.test, config.evaluate.heldout, derive_seed(s, 101), &lifted));
    out.report["heldout_kind"] =
        config.evaluate.heldout.kind == HeldoutMode::kSingleSample ? "single_sample" : "mc";
    out.report["spd_lifts"] = lifted;
  }

  const PredictMode mode = config.evaluate.predict_mode;
  const MomentSamples ms =
      predict_moments(post, data.test.grid.coords,
                      mode == PredictMode::kPlugIn ? 1 : config.evaluate.moment_samples,
                      derive_seed(s, 102), mode);
  const MomentField mf = mean_moments(ms);
  out.report["moments"] = {{"mode", to_string(mode)}, {"samples", ms.mu.empty() ? 0 : ms.mu[0].size()}};
  evaluate_moments(config, data, mf.mu, mf.sigma, out);

  const FisherConfig& fc = config.evaluate.fisher;
  if (fc.points > 0) {
    const Index axis = fc.axis;
    if (axis < 0 || axis >= data.train.grid.dims()) {
      throw InvalidInput("fisher axis out of range");
    }
    const GridAxis& ax = data.train.grid.axes[static_cast<std::size_t>(axis)];
    double lo = data.train.grid.coords.col(axis).minCoeff();
    double hi = data.train.grid.coords.col(axis).maxCoeff();
    if (ax.periodic) {
      lo = 0.0;
      hi = ax.period;
    }
    Coords X(fc.points, data.train.grid.dims());
    for (Index j = 0; j < fc.points; ++j) {
      X.row(j) = data.train.grid.coords.colwise().mean();
      const double t = ax.periodic ? static_cast<double>(j) / static_cast<double>(fc.points)
                                   : (fc.points == 1 ? 0.0
                                                     : static_cast<double>(j) /
                                                           static_cast<double>(fc.points - 1));
      X(j, axis) = lo + t * (hi - lo);
    }
    const FisherEstimate fe = fisher_curve(post, X, axis, fc.samples, derive_seed(s, 103), mode);
    std::string csv = "x,mean,lower,upper\n";
    Json pts = Json::array();
    for (const auto& p : fe.points) {
      csv += format_double(p.x(axis)) + "," + format_double(p.mean) + "," +
             format_double(p.lower) + "," + format_double(p.upper) + "\n";
      pts.push_back({{"x", p.x(axis)},
                     {"mean", json_number(p.mean)},
                     {"lower", json_number(p.lower)},
                     {"upper", json_number(p.upper)}});
    }
    out.report["fisher"] = {{"available", true}, {"axis", axis}, {"samples", fc.samples}, {"points", pts}};
    out.files.emplace_back("wishart/fisher.csv", csv);
  } else {
    out.report["fisher"] = unavailable("not requested");
  }
  return out;
}

MethodOutcome run_baseline(const ExperimentConfig& config, const ExperimentData& data,
                           const std::string& name, const Dataset& validation) {
  MethodOutcome out;
  out.name = name;
  const BaselineMethod method = parse_baseline(name);
  if (data.holdout) {
    out.report["status"] = "unavailable";
    out.report["reason"] = "baseline estimators cannot predict unseen conditions";
    out.report["heldout_loglik"] = nullptr;
    out.report["operator_norm"] = unavailable("baseline estimators cannot predict unseen conditions");
    out.report["decode"] = unavailable("baseline estimators cannot predict unseen conditions");
    return out;
  }
  double hyper = 0.0;
  if (method == BaselineMethod::kWeightedAverage) {
    // Choose alpha on the validation trials when there are any.
    const bool have_val = validation.total_trials() > 0;
    const Dataset& sel = have_val ? validation : data.test;
    double best = -std::numeric_limits<double>::infinity();
    hyper = config.baselines.wa_alphas.empty() ? 0.5 : config.baselines.wa_alphas.front();
    for (double a : config.baselines.wa_alphas) {
      const BaselineEstimate e = estimate(method, data.train.trials, a);
      const double v = plugin_heldout_loglik(e.mu, e.sigma, sel.trials);
      if (v > best) {
        best = v;
        hyper = a;
      }
    }
    out.report["alpha_selected_on"] = have_val ? "validation" : "test";
  } else if (method == BaselineMethod::kGraphicalLasso) {
    hyper = config.baselines.glasso_rho;
  }
  const BaselineEstimate e = estimate(method, data.train.trials, hyper, config.baselines.lw_target);
  out.report["status"] = "ok";
  out.report["hyperparameter"] = hyper;
  long singular = 0;
  for (bool b : e.singular) singular += b ? 1 : 0;
  out.report["singular_conditions"] = singular;
  if (!e.intensity.empty()) {
    Json it = Json::array();
    for (double v : e.intensity) it.push_back(v);
    out.report["intensity"] = it;
  }
  out.report["heldout_loglik"] = json_number(plugin_heldout_loglik(e.mu, e.sigma, data.test.trials));
  evaluate_moments(config, data, e.mu, e.sigma, out);
  return out;
}

}  // namespace

Json run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  const ExperimentData data = prepare_data(config);
  Dataset validation;
  if (config.split.scheme == "trial_fraction") {
    const Fold fold = trial_fraction(data.full, config.split.train, config.split.val,
                                     config.split.test, derive_seed(config.seed, 2));
    validation = extract(data.full, fold, Part::kValidation, true);
  }

  std::vector<MethodOutcome> outcomes(config.methods.size());
  parallel_for(static_cast<Index>(config.methods.size()), config.threads, [&](Index i) {
    const std::string& name = config.methods[static_cast<std::size_t>(i)];
    MethodOutcome& out = outcomes[static_cast<std::size_t>(i)];
    try {
      out = name == "wishart" ? run_wishart(config, data)
                              : run_baseline(config, data, name, validation);
    } catch (const std::exception& e) {
      out = MethodOutcome{};
      out.name = name;
      out.report = {{"status", "failed"}, {"error", e.what()}, {"heldout_loglik", nullptr}};
    }
  });

  bool complete = true;
  Json methods = Json::object();
  std::string summary = "method,status,heldout_loglik,operator_norm_mean,decode_accuracy\n";
  for (const auto& o : outcomes) {
    methods[o.name] = o.report;
    const std::string status = o.report.value("status", "failed");
    if (status == "failed") complete = false;
    auto field = [&](const Json& j) -> std::string {
      if (j.is_null()) return "";
      if (j.is_string()) return j.get<std::string>();
      return format_double(j.get<double>());
    };
    std::string opn, acc;
    if (o.report.contains("operator_norm") && o.report["operator_norm"].value("available", false)) {
      opn = field(o.report["operator_norm"]["mean"]);
    }
    if (o.report.contains("decode") && o.report["decode"].value("available", false)) {
      acc = field(o.report["decode"]["accuracy"]);
    }
    summary += o.name + "," + status + "," +
               field(o.report.value("heldout_loglik", Json(nullptr))) + "," + opn + "," + acc + "\n";
  }
  Json report = {{"schema_version", kSchemaVersion},
                 {"config", config_to_json(config)},
                 {"dataset",
                  {{"N", data.full.neurons()},
                   {"C", data.full.conditions()},
                   {"train_trials", data.train.total_trials()},
                   {"test_trials", data.test.total_trials()},
                   {"test_conditions", data.test_conditions},
                   {"has_truth", data.full.truth.has_value()},
                   {"split", config.split.scheme}}},
                 {"methods", methods},
                 {"complete", complete}};
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    for (const auto& o : outcomes) {
      for (const auto& [rel, contents] : o.files) write_file(out_dir / rel, contents);
    }
    write_file(out_dir / "summary.csv", summary);
    write_file(out_dir / "report.json", report.dump(2) + "\n");
  }
  return report;
}

}  // namespace noisecov
