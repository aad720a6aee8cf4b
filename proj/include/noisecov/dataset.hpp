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

#ifndef NOISECOV_DATASET_HPP_
#define NOISECOV_DATASET_HPP_

#include <optional>
#include <string>
#include <vector>

#include "noisecov/common.hpp"
#include "noisecov/kernels.hpp"
#include "noisecov/model.hpp"

namespace noisecov {

struct GridAxis {
  std::string name;
  bool periodic = false;
  double period = 0.0;
};

/// Condition coordinates, one row per condition. Periodic coordinates are
/// kept in [0, T).
struct ConditionGrid {
  std::vector<GridAxis> axes;
  Coords coords;

  ConditionGrid() = default;
  ConditionGrid(std::vector<GridAxis> a, Coords x);

  Index size() const { return coords.rows(); }
  Index dims() const { return static_cast<Index>(axes.size()); }
  ConditionGrid subset(const std::vector<Index>& rows) const;
  /// Index of the row equal to x, or -1.
  Index find(const Eigen::Ref<const VectorXd>& x) const;
};

/// One periodic axis with C equispaced points on [0, period).
ConditionGrid periodic_grid(Index C, double period = 2.0 * std::numbers::pi,
                            const std::string& name = "angle");

struct Dataset {
  ConditionGrid grid;
  /// trials[c] is K_c x N.
  std::vector<MatrixXd> trials;
  std::optional<MomentField> truth;

  Index conditions() const { return static_cast<Index>(trials.size()); }
  Index neurons() const { return trials.empty() ? 0 : trials.front().cols(); }
  Index total_trials() const;
  /// Throws InvalidInput unless N is consistent and every K_c >= 1.
  void validate(bool allow_empty_conditions = false) const;
  Dataset subset_conditions(const std::vector<Index>& rows) const;
};

}  // namespace noisecov

#endif  // NOISECOV_DATASET_HPP_
