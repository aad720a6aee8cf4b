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

// Command-line front end. Every subcommand prints a JSON summary on success;
// failures print {"error": {...}} to stderr and exit nonzero.

#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "noisecov/analysis.hpp"
#include "noisecov/baselines.hpp"
#include "noisecov/config.hpp"
#include "noisecov/experiment.hpp"
#include "noisecov/io.hpp"
#include "noisecov/posterior.hpp"
#include "noisecov/synthetic.hpp"

using namespace noisecov;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  int threads = 1;
};

ExperimentConfig load_config(const Globals& g) {
  Json j = Json::object();
  if (!g.config_path.empty()) {
    j = Json::parse(read_file(g.config_path));
  } else {
    j["schema_version"] = kSchemaVersion;
  }
  if (g.seed) j["seed"] = *g.seed;
  j["threads"] = g.threads;
  return config_from_json(j);
}

// "a,b;c,d" -> 2 x 2 coordinates.
Coords parse_points(const std::string& text, Index dims) {
  std::vector<std::vector<double>> rows;
  std::stringstream rs(text);
  std::string row;
  while (std::getline(rs, row, ';')) {
    if (row.empty()) continue;
    std::vector<double> r;
    std::stringstream cs(row);
    std::string cell;
    while (std::getline(cs, cell, ',')) r.push_back(parse_double(cell));
    if (static_cast<Index>(r.size()) != dims) {
      throw InvalidInput("query point '" + row + "' has the wrong dimension");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw InvalidInput("no query points given");
  Coords x(static_cast<Index>(rows.size()), dims);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index d = 0; d < dims; ++d) x(static_cast<Index>(i), d) = rows[i][static_cast<std::size_t>(d)];
  }
  return x;
}

Coords even_points(const ConditionGrid& grid, Index axis, Index n) {
  const GridAxis& ax = grid.axes.at(static_cast<std::size_t>(axis));
  double lo = grid.coords.col(axis).minCoeff();
  double hi = grid.coords.col(axis).maxCoeff();
  if (ax.periodic) {
    lo = 0.0;
    hi = ax.period;
  }
  Coords x(n, grid.dims());
  for (Index j = 0; j < n; ++j) {
    x.row(j) = grid.coords.colwise().mean();
    const double t = ax.periodic ? static_cast<double>(j) / static_cast<double>(n)
                                 : (n == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(n - 1));
    x(j, axis) = lo + t * (hi - lo);
  }
  return x;
}

Dataset load_data(const std::string& dir, const ExperimentConfig& cfg) {
  if (!dir.empty()) return read_dataset(dir);
  if (cfg.data.source == "directory") return read_dataset(cfg.data.path);
  return generate_synthetic(cfg.data.synthetic);
}

void print(const Json& j) { std::cout << j.dump(2) << "\n"; }

int fail(const std::string& kind, const std::string& message, int code) {
  Json e = {{"error", {{"type", kind}, {"message", message}}}};
  std::cerr << e.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisecov: condition-dependent noise covariance estimation"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  app.add_option("--config", g.config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();

  std::string data_dir, test_dir, posterior_path, method = "lw", points, mode;
  double hyper = 0.0;
  int samples = 100, n_points = 32;
  Index axis = 0;
  std::string heldout = "single_sample";

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset");
  Index test_trials = 0;
  simulate->add_option("--test-trials", test_trials, "Extra held-out trials per condition");

  auto* fit_cmd = app.add_subcommand("fit", "Fit the model by variational inference");
  fit_cmd->add_option("--data", data_dir, "Dataset directory (default: config data)");

  auto* estimate_cmd = app.add_subcommand("estimate", "Run a classical estimator");
  estimate_cmd->add_option("--data", data_dir, "Dataset directory");
  estimate_cmd->add_option("--method", method, "empirical|grand|wa|lw|glasso");
  estimate_cmd->add_option("--hyper", hyper, "alpha (wa) or rho (glasso)");

  auto* predict_cmd = app.add_subcommand("predict", "Sample moments at query conditions");
  auto* interp_cmd = app.add_subcommand("interpolate", "Point estimates of moments at query conditions");
  for (auto* c : {predict_cmd, interp_cmd}) {
    c->add_option("--posterior", posterior_path, "Posterior bundle")->required();
    c->add_option("--x", points, "Query points, 'a,b;c,d'");
    c->add_option("--points", n_points, "Evenly spaced query points along --axis");
    c->add_option("--axis", axis, "Axis for evenly spaced points");
    c->add_option("--samples", samples, "Posterior draws");
    c->add_option("--mode", mode, "sample|plugin (default: sample for predict, plugin for interpolate)");
  }

  auto* decode_cmd = app.add_subcommand("decode", "Decode test trials by condition");
  decode_cmd->add_option("--posterior", posterior_path, "Posterior bundle (else --method on --data)");
  decode_cmd->add_option("--data", data_dir, "Training dataset for a baseline");
  decode_cmd->add_option("--test", test_dir, "Test dataset directory")->required();
  decode_cmd->add_option("--method", method, "Baseline method");
  decode_cmd->add_option("--hyper", hyper, "Baseline hyperparameter");
  std::string decoder = "qda";
  decode_cmd->add_option("--decoder", decoder, "qda|lda");
  decode_cmd->add_option("--mode", mode, "sample|plugin (default plugin)");
  decode_cmd->add_option("--samples", samples, "Draws averaged in sample mode");

  auto* fisher_cmd = app.add_subcommand("fisher", "Fisher information along one axis");
  fisher_cmd->add_option("--posterior", posterior_path, "Posterior bundle")->required();
  fisher_cmd->add_option("--points", n_points, "Evaluation points");
  fisher_cmd->add_option("--axis", axis, "Axis");
  fisher_cmd->add_option("--samples", samples, "Draws per point");
  fisher_cmd->add_option("--mode", mode, "sample|plugin (default sample)");

  auto* eval_cmd = app.add_subcommand("evaluate", "Held-out log-likelihood");
  eval_cmd->add_option("--posterior", posterior_path, "Posterior bundle")->required();
  eval_cmd->add_option("--test", test_dir, "Test dataset directory")->required();
  eval_cmd->add_option("--heldout", heldout, "single_sample|mc");
  eval_cmd->add_option("--samples", samples, "Draws for mc / Poisson marginalization");

  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate kernel and rank hyperparameters");
  cv_cmd->add_option("--data", data_dir, "Dataset directory (default: config data)");

  auto* run_cmd = app.add_subcommand("run", "Run a full experiment from --config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }
  if (*seed_opt) g.seed = seed_value;
  if (mode.empty()) mode = (*predict_cmd || *fisher_cmd) ? "sample" : "plugin";

  try {
    const ExperimentConfig cfg = load_config(g);
    const fs::path out = g.out;
    const std::uint64_t seed = cfg.seed;

    if (*simulate) {
      const SyntheticBundle b = generate_synthetic_bundle(cfg.data.synthetic, test_trials);
      write_dataset(out, b.train);
      if (test_trials > 0) write_dataset(out / "test", b.test);
      print({{"dataset", out.string()},
             {"N", b.train.neurons()},
             {"C", b.train.conditions()},
             {"trials", b.train.total_trials()},
             {"test_trials", b.test.total_trials()}});
    } else if (*fit_cmd) {
      const Dataset data = load_data(data_dir, cfg);
      const ModelSpec spec = cfg.model.resolve(data.neurons(), data.grid);
      const Posterior post = fit(spec, data, cfg.fit);
      save_posterior(out / "posterior.bundle", post);
      write_file(out / "elbo_trace.csv", elbo_trace_csv(post.elbo_trace));
      write_moment_field(out, "fitted", post.fitted_moments(), post.grid.coords);
      print({{"posterior", (out / "posterior.bundle").string()},
             {"iterations", post.elbo_trace.size()},
             {"elbo_final", post.elbo_trace.empty() ? Json(nullptr) : json_number(post.elbo_trace.back())}});
    } else if (*estimate_cmd) {
      const Dataset data = load_data(data_dir, cfg);
      const BaselineEstimate e =
          estimate(parse_baseline(method), data.trials, hyper, cfg.baselines.lw_target);
      MomentField m{e.mu, e.sigma};
      write_moment_field(out, "estimate", m, data.grid.coords);
      long singular = 0;
      for (bool b : e.singular) singular += b ? 1 : 0;
      print({{"method", method}, {"conditions", m.size()}, {"singular_conditions", singular},
             {"index", (out / "estimate.json").string()}});
    } else if (*predict_cmd || *interp_cmd) {
      const Posterior post = load_posterior(posterior_path);
      const Coords x = points.empty() ? even_points(post.grid, axis, n_points)
                                      : parse_points(points, post.grid.dims());
      const PredictMode pm = parse_predict_mode(mode);
      const MomentSamples ms =
          predict_moments(post, x, pm == PredictMode::kPlugIn ? 1 : samples, seed, pm);
      if (*predict_cmd) {
        write_moment_samples(out, "predict", ms);
      } else {
        write_moment_field(out, "interpolate", mean_moments(ms), x);
      }
      print({{"points", x.rows()}, {"samples", ms.mu.front().size()}, {"lifted", ms.lifted},
             {"mode", to_string(pm)}});
    } else if (*decode_cmd) {
      const Dataset test = read_dataset(test_dir);
      std::vector<VectorXd> mu;
      std::vector<MatrixXd> sigma;
      if (!posterior_path.empty()) {
        const Posterior post = load_posterior(posterior_path);
        const PredictMode pm = parse_predict_mode(mode);
        const MomentField mf = mean_moments(
            predict_moments(post, test.grid.coords, pm == PredictMode::kPlugIn ? 1 : samples, seed, pm));
        mu = mf.mu;
        sigma = mf.sigma;
      } else {
        const Dataset train = load_data(data_dir, cfg);
        const BaselineEstimate e = estimate(parse_baseline(method), train.trials, hyper);
        mu = e.mu;
        sigma = e.sigma;
      }
      const DecoderMode dm = parse_decoder_mode(decoder);
      MatrixXd shared = MatrixXd::Zero(sigma[0].rows(), sigma[0].cols());
      for (const auto& s : sigma) shared += s / static_cast<double>(sigma.size());
      const ClassModel model = dm == DecoderMode::kQda ? ClassModel::qda(mu, sigma) : ClassModel::lda(mu, shared);
      const DecodeResult r = decode_accuracy(model, test.trials);
      Json confusion = Json::array();
      for (Index i = 0; i < r.confusion.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < r.confusion.cols(); ++j) row.push_back(r.confusion(i, j));
        confusion.push_back(row);
      }
      const Json result = {{"decoder", decoder}, {"accuracy", r.accuracy}, {"trials", r.trials},
                           {"confusion", confusion}};
      write_file(out / "decode.json", result.dump(2) + "\n");
      print(result);
    } else if (*fisher_cmd) {
      const Posterior post = load_posterior(posterior_path);
      const Coords x = even_points(post.grid, axis, n_points);
      const FisherEstimate fe = fisher_curve(post, x, axis, samples, seed, parse_predict_mode(mode));
      std::string csv = "x,mean,lower,upper\n";
      Json pts = Json::array();
      for (const auto& p : fe.points) {
        csv += format_double(p.x(axis)) + "," + format_double(p.mean) + "," +
               format_double(p.lower) + "," + format_double(p.upper) + "\n";
        pts.push_back({{"x", p.x(axis)}, {"mean", json_number(p.mean)},
                       {"lower", json_number(p.lower)}, {"upper", json_number(p.upper)}});
      }
      write_file(out / "fisher.csv", csv);
      const Json result = {{"axis", axis}, {"samples", samples}, {"points", pts}};
      write_file(out / "fisher.json", result.dump(2) + "\n");
      print(result);
    } else if (*eval_cmd) {
      const Posterior post = load_posterior(posterior_path);
      const Dataset test = read_dataset(test_dir);
      Json result;
      if (post.spec.observation == Observation::kPoisson) {
        result = {{"kind", "poisson_marginal"}, {"samples", samples},
                  {"heldout_loglik", json_number(marginal_loglik_poisson(post, test, samples, seed))}};
      } else {
        const HeldoutMode hm =
            heldout == "mc" ? HeldoutMode::monte_carlo(samples) : HeldoutMode::single_sample();
        if (heldout != "mc" && heldout != "single_sample") {
          throw InvalidInput("unknown heldout mode '" + heldout + "'");
        }
        long lifted = 0;
        const double v = heldout_loglik(post, test, hm, seed, &lifted);
        result = {{"kind", heldout}, {"samples", hm.samples}, {"heldout_loglik", json_number(v)},
                  {"spd_lifts", lifted}};
      }
      write_file(out / "evaluate.json", result.dump(2) + "\n");
      print(result);
    } else if (*cv_cmd) {
      const Dataset data = load_data(data_dir, cfg);
      const ModelSpec base = cfg.model.resolve(data.neurons(), data.grid);
      const std::vector<CvPoint> grid = cv_grid(cfg.cv, base);
      const CvResult r = cv_select(data, base, grid, cfg.fit, cfg.cv.folds, cfg.cv.train,
                                   cfg.cv.val, cfg.cv.test, seed, cfg.threads);
      Json points_json = Json::array();
      for (std::size_t i = 0; i < grid.size(); ++i) {
        points_json.push_back({{"lambda_mu", grid[i].lambda_mu},
                               {"lambda_sigma", grid[i].lambda_sigma},
                               {"P", grid[i].P},
                               {"variant", to_string(grid[i].variant)},
                               {"mean_score", json_number(r.mean_score[i])}});
      }
      Json table = Json::array();
      std::string csv = "point,fold,score,error\n";
      for (const auto& c : r.table) {
        table.push_back({{"point", c.point}, {"fold", c.fold}, {"score", json_number(c.score)},
                         {"error", c.error}});
        csv += std::to_string(c.point) + "," + std::to_string(c.fold) + "," +
               format_double(c.score) + "," + Json(c.error).dump() + "\n";
      }
      const Json result = {{"best", r.best}, {"best_per_fold", r.best_per_fold},
                           {"grid", points_json}, {"table", table}};
      write_file(out / "cv.json", result.dump(2) + "\n");
      write_file(out / "cv_table.csv", csv);
      print(result);
    } else if (*run_cmd) {
      if (g.config_path.empty()) throw InvalidInput("run needs --config");
      const Json report = run_experiment(cfg, out);
      print({{"report", (out / "report.json").string()}, {"complete", report.at("complete")}});
    }
  } catch (const InvalidInput& e) {
    return fail("invalid_input", e.what(), 3);
  } catch (const SingularMatrixError& e) {
    return fail("singular_matrix", e.what(), 4);
  } catch (const NonFiniteError& e) {
    return fail("non_finite", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("error", e.what(), 1);
  }
  return 0;
}
