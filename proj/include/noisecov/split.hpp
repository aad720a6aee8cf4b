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
  Cross-validation plans.

  A trial-fraction split shuffles the trials of every condition with its own
  stream and takes floor(f_train K) for training, floor(f_val K) for
  validation and the remainder for testing. A condition holdout keeps whole
  conditions out of training.
*/

#ifndef NOISECOV_SPLIT_HPP_
#define NOISECOV_SPLIT_HPP_

#include <cstdint>
#include <vector>

#include "noisecov/dataset.hpp"

namespace noisecov {

struct Fold {
  /// Per condition, sorted trial indices. Held-out conditions have empty
  /// train and validation lists and all their trials in `test`.
  std::vector<std::vector<Index>> train;
  std::vector<std::vector<Index>> validation;
  std::vector<std::vector<Index>> test;
  /// Sorted indices of conditions excluded from training.
  std::vector<Index> held_out;
};

struct CvPlan {
  std::vector<Fold> folds;
};

/// One fold of per-condition stratified trial splits.
Fold trial_fraction(const Dataset& data, double f_train, double f_val, double f_test,
                    std::uint64_t seed);

/// Whole-condition holdout: held-out conditions go entirely to `test`.
Fold holdout_conditions(const Dataset& data, std::vector<Index> conditions);

/// `count` distinct conditions chosen uniformly with the given seed, sorted.
std::vector<Index> random_conditions(Index C, Index count, std::uint64_t seed);

/// `folds` trial-fraction folds with seeds derive_seed(seed, f).
CvPlan trial_fraction_plan(const Dataset& data, double f_train, double f_val, double f_test,
                           std::uint64_t seed, int folds);

enum class Part { kTrain, kValidation, kTest };

/// Dataset with the chosen part of every fold. Training and validation
/// parts drop held-out conditions; the test part of a condition holdout keeps
/// only held-out conditions. Conditions with no trials in the part are
/// dropped unless keep_empty is set.
Dataset extract(const Dataset& data, const Fold& fold, Part part, bool keep_empty = false);

}  // namespace noisecov

#endif  // NOISECOV_SPLIT_HPP_
