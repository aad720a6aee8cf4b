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
  JSON configuration schema (schema_version 1).

  {
    "schema_version": 1,
    "seed": 0,
    "threads": 1,
    "data": {
      "source": "synthetic" | "directory",
      "path": "...",                                  // directory source
      "synthetic": { "N", "C", "K", "P", "lambda_sigma", "lambda_mu",
                     "gamma", "beta", "scale": "structured" | "identity",
                     "observation": "normal" | "poisson", "baseline" },
      "test_trials": 0                                 // extra synthetic trials
    },
    "split": { "scheme": "trial_fraction", "train", "val", "test" }
           | { "scheme": "holdout", "conditions": [...] }
           | { "scheme": "holdout_random", "count": n }
           | { "scheme": "extra_trials" },                // synthetic test_trials
    "model": { "variant", "P", "use_diag", "observation",
               "k_mu": [axis...], "k_sigma": [axis...] },  // axis: kind, gamma, beta, lambda, period
    "fit": { "step", "iterations", "elbo_samples", "minibatch", "family",
             "learn_L", "learn_r", "init_floor" },
    "methods": ["wishart", "empirical", "grand", "wa", "lw", "glasso"],
    "baselines": { "wa_alphas": [...], "glasso_rho": 0.1,
                   "lw_target": "identity" | "diagonal" },
    "evaluate": { "heldout": "single_sample" | "mc", "heldout_samples": 1,
                  "operator_norm": true, "decode": true, "decoder": "qda",
                  "fisher": { "points": 0, "samples": 100, "axis": 0 },
                  "predict_mode": "plugin" | "sample", "moment_samples": 64 },
    "cv": { "lambda_mu": [...], "lambda_sigma": [...], "P": [...],
            "variant": [...], "folds": 3, "train", "val", "test" }
  }

  Missing keys take the defaults of the corresponding structs. Unknown keys
  are rejected so that typos do not silently fall back to defaults.
*/

#ifndef NOISECOV_CONFIG_HPP_
#define NOISECOV_CONFIG_HPP_

#include <optional>
#include <string>
#include <vector>

#include "noisecov/analysis.hpp"
#include "noisecov/baselines.hpp"
#include "noisecov/inference.hpp"
#include "noisecov/io.hpp"
#include "noisecov/synthetic.hpp"

namespace noisecov {

inline constexpr int kSchemaVersion = 1;

struct DataConfig {
  std::string source = "synthetic";
  std::string path;
  SyntheticParams synthetic;
  Index test_trials = 0;
};

struct SplitConfig {
  std::string scheme = "trial_fraction";
  double train = 0.6;
  double val = 0.25;
  double test = 0.15;
  std::vector<Index> conditions;
  Index count = 0;
};

struct ModelConfig {
  Variant variant = Variant::kScaledLowRankDiag;
  Index P = 2;
  bool use_diag = true;
  Observation observation = Observation::kNormal;
  /// Empty means: derived from the grid axes (periodic axes get a periodic
  /// kernel, linear axes a squared exponential), gamma 1e-3, beta 1, lambda 1.
  std::vector<AxisKernel> k_mu;
  std::vector<AxisKernel> k_sigma;

  /// ModelSpec for a dataset with N neurons on `grid`.
  ModelSpec resolve(Index N, const ConditionGrid& grid) const;
};

struct BaselineConfig {
  std::vector<double> wa_alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  double glasso_rho = 0.1;
  ShrinkageTarget lw_target = ShrinkageTarget::kScaledIdentity;
};

struct FisherConfig {
  Index points = 0;
  int samples = 100;
  Index axis = 0;
};

struct EvaluateConfig {
  HeldoutMode heldout = HeldoutMode::single_sample();
  bool operator_norm = true;
  bool decode = true;
  DecoderMode decoder = DecoderMode::kQda;
  FisherConfig fisher;
  PredictMode predict_mode = PredictMode::kPlugIn;
  /// Draws averaged for point estimates in sample mode.
  int moment_samples = 64;
};

/// Hyperparameter grid for cross-validation; empty lists mean "keep the
/// model's value".
struct CvConfig {
  std::vector<double> lambda_mu;
  std::vector<double> lambda_sigma;
  std::vector<Index> P;
  std::vector<Variant> variant;
  int folds = 3;
  double train = 0.6;
  double val = 0.25;
  double test = 0.15;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  int threads = 1;
  DataConfig data;
  SplitConfig split;
  ModelConfig model;
  FitConfig fit;
  std::vector<std::string> methods{"wishart", "grand", "lw"};
  BaselineConfig baselines;
  EvaluateConfig evaluate;
  CvConfig cv;
};

ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& c);

Json kernel_to_json(const ProductKernel& k);
ProductKernel kernel_from_json(const Json& j);
Json spec_to_json(const ModelSpec& s);
ModelSpec spec_from_json(const Json& j);
Json fit_config_to_json(const FitConfig& c);
FitConfig fit_config_from_json(const Json& j, const FitConfig& defaults = FitConfig{});
Json synthetic_to_json(const SyntheticParams& p);
SyntheticParams synthetic_from_json(const Json& j);

}  // namespace noisecov

#endif  // NOISECOV_CONFIG_HPP_
