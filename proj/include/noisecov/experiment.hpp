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
  Experiment orchestration: hyperparameter selection by cross-validation and
  the end-to-end comparison pipeline.

  Seeds used by run_experiment, all derived from the config seed s:
    data (synthetic, unless given)  s
    split                           derive_seed(s, 2)
    held-out likelihood             derive_seed(s, 101)
    moment estimates                derive_seed(s, 102)
    Fisher curves                   derive_seed(s, 103)
*/

#ifndef NOISECOV_EXPERIMENT_HPP_
#define NOISECOV_EXPERIMENT_HPP_

#include <limits>
#include <string>
#include <vector>

#include "noisecov/baselines.hpp"
#include "noisecov/config.hpp"
#include "noisecov/inference.hpp"
#include "noisecov/io.hpp"
#include "noisecov/split.hpp"

namespace noisecov {

struct CvPoint {
  double lambda_mu = 1.0;
  double lambda_sigma = 1.0;
  Index P = 2;
  Variant variant = Variant::kScaledLowRankDiag;
};

/// Cartesian product of the configured lists, falling back to the model's
/// own values for empty lists.
std::vector<CvPoint> cv_grid(const CvConfig& cv, const ModelSpec& base);

/// base with every axis lambda replaced and P/variant set from the point.
ModelSpec apply_point(const ModelSpec& base, const CvPoint& p);

struct CvCell {
  Index point = 0;
  int fold = 0;
  double score = -std::numeric_limits<double>::infinity();
  std::string error;
};

struct CvResult {
  std::vector<CvPoint> grid;
  /// |grid| x folds cells, point-major.
  std::vector<CvCell> table;
  /// Mean validation score per point across folds.
  std::vector<double> mean_score;
  /// Point with the best mean score (ties: lowest index).
  Index best = 0;
  /// Best point within each fold.
  std::vector<Index> best_per_fold;
};

/// Fits every (point, fold) pair on the training part of a trial-fraction
/// fold and scores it with the single-sample held-out log-likelihood of the
/// validation part. Failed fits score -inf.
CvResult cv_select(const Dataset& data, const ModelSpec& base, const std::vector<CvPoint>& grid,
                   const FitConfig& fit, int folds, double f_train, double f_val, double f_test,
                   std::uint64_t seed, int threads = 1);

/// Sum of normal log densities of the test trials under per-condition
/// moments; -inf when a covariance is singular.
double plugin_heldout_loglik(const std::vector<VectorXd>& mu, const std::vector<MatrixXd>& sigma,
                             const std::vector<MatrixXd>& test);

/// The train/test datasets an experiment config describes.
struct ExperimentData {
  Dataset full;
  Dataset train;
  Dataset test;
  /// Conditions of `test` as indices into `full`.
  std::vector<Index> test_conditions;
  bool holdout = false;
};

ExperimentData prepare_data(const ExperimentConfig& config);

/// Runs the pipeline and writes report.json plus CSV artifacts into out_dir
/// (when non-empty). Returns the report.
Json run_experiment(const ExperimentConfig& config, const fs::path& out_dir);

}  // namespace noisecov

#endif  // NOISECOV_EXPERIMENT_HPP_
