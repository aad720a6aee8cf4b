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

#include "noisecov/split.hpp"

#include <algorithm>
#include <numeric>

namespace noisecov {

Fold trial_fraction(const Dataset& data, double f_train, double f_val, double f_test,
                    std::uint64_t seed) {
  data.validate();
  if (!(f_train > 0.0) || f_val < 0.0 || f_test < 0.0 ||
      std::abs(f_train + f_val + f_test - 1.0) > 1e-9) {
    throw InvalidInput("split fractions must be nonnegative, train > 0, and sum to 1");
  }
  Fold fold;
  for (Index c = 0; c < data.conditions(); ++c) {
    const Index K = data.trials[c].rows();
    const auto n_train = static_cast<Index>(std::floor(f_train * static_cast<double>(K) + 1e-9));
    const auto n_val = static_cast<Index>(std::floor(f_val * static_cast<double>(K) + 1e-9));
    if (n_train < 1) {
      throw InvalidInput("split leaves condition " + std::to_string(c) + " without train trials");
    }
    std::vector<Index> order(static_cast<std::size_t>(K));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    for (Index i = K - 1; i > 0; --i) {
      std::uniform_int_distribution<Index> pick(0, i);
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    auto part = [&](Index from, Index to) {
      std::vector<Index> v(order.begin() + from, order.begin() + to);
      std::sort(v.begin(), v.end());
      return v;
    };
    fold.train.push_back(part(0, n_train));
    fold.validation.push_back(part(n_train, n_train + n_val));
    fold.test.push_back(part(n_train + n_val, K));
  }
  return fold;
}

Fold holdout_conditions(const Dataset& data, std::vector<Index> conditions) {
  data.validate();
  const Index C = data.conditions();
  std::sort(conditions.begin(), conditions.end());
  if (std::adjacent_find(conditions.begin(), conditions.end()) != conditions.end()) {
    throw InvalidInput("held-out conditions must be distinct");
  }
  for (Index c : conditions) {
    if (c < 0 || c >= C) {
      throw InvalidInput("held-out condition " + std::to_string(c) + " out of range");
    }
  }
  if (static_cast<Index>(conditions.size()) >= C) {
    throw InvalidInput("holdout leaves no training conditions");
  }
  Fold fold;
  fold.held_out = conditions;
  for (Index c = 0; c < C; ++c) {
    std::vector<Index> all(static_cast<std::size_t>(data.trials[c].rows()));
    std::iota(all.begin(), all.end(), Index{0});
    const bool out = std::binary_search(conditions.begin(), conditions.end(), c);
    fold.train.push_back(out ? std::vector<Index>{} : all);
    fold.validation.emplace_back();
    fold.test.push_back(out ? all : std::vector<Index>{});
  }
  return fold;
}

std::vector<Index> random_conditions(Index C, Index count, std::uint64_t seed) {
  if (count < 0 || count > C) {
    throw InvalidInput("cannot choose that many conditions");
  }
  std::vector<Index> order(static_cast<std::size_t>(C));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, C - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

CvPlan trial_fraction_plan(const Dataset& data, double f_train, double f_val, double f_test,
                           std::uint64_t seed, int folds) {
  if (folds < 1) {
    throw InvalidInput("at least one fold is required");
  }
  CvPlan plan;
  for (int f = 0; f < folds; ++f) {
    plan.folds.push_back(
        trial_fraction(data, f_train, f_val, f_test, derive_seed(seed, static_cast<std::uint64_t>(f))));
  }
  return plan;
}

Dataset extract(const Dataset& data, const Fold& fold, Part part, bool keep_empty) {
  const auto& lists = part == Part::kTrain ? fold.train
                      : part == Part::kValidation ? fold.validation
                                                  : fold.test;
  if (static_cast<Index>(lists.size()) != data.conditions()) {
    throw InvalidInput("fold does not match the dataset");
  }
  std::vector<Index> keep;
  std::vector<MatrixXd> trials;
  for (Index c = 0; c < data.conditions(); ++c) {
    const auto& rows = lists[static_cast<std::size_t>(c)];
    if (rows.empty() && !keep_empty) continue;
    MatrixXd Y(static_cast<Index>(rows.size()), data.neurons());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Y.row(static_cast<Index>(i)) = data.trials[c].row(rows[i]);
    }
    keep.push_back(c);
    trials.push_back(std::move(Y));
  }
  Dataset out = data.subset_conditions(keep);
  out.trials = std::move(trials);
  return out;
}

}  // namespace noisecov
