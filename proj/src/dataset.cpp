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

#include "noisecov/dataset.hpp"

namespace noisecov {

ConditionGrid::ConditionGrid(std::vector<GridAxis> a, Coords x)
    : axes(std::move(a)), coords(std::move(x)) {
  if (coords.cols() != dims()) {
    throw InvalidInput("grid coordinates do not match the number of axes");
  }
  for (Index j = 0; j < dims(); ++j) {
    const GridAxis& ax = axes[j];
    if (!ax.periodic) {
      continue;
    }
    if (!(ax.period > 0.0)) {
      throw InvalidInput("periodic axis '" + ax.name + "' needs a positive period");
    }
    for (Index i = 0; i < coords.rows(); ++i) {
      double v = std::fmod(coords(i, j), ax.period);
      if (v < 0.0) {
        v += ax.period;
      }
      if (v >= ax.period) {
        v = 0.0;
      }
      coords(i, j) = v;
    }
  }
}

ConditionGrid ConditionGrid::subset(const std::vector<Index>& rows) const {
  Coords x(static_cast<Index>(rows.size()), dims());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= size()) {
      throw InvalidInput("grid subset index out of range");
    }
    x.row(static_cast<Index>(i)) = coords.row(rows[i]);
  }
  return ConditionGrid(axes, std::move(x));
}

Index ConditionGrid::find(const Eigen::Ref<const VectorXd>& x) const {
  for (Index i = 0; i < size(); ++i) {
    if ((coords.row(i).transpose().array() == x.array()).all()) {
      return i;
    }
  }
  return -1;
}

ConditionGrid periodic_grid(Index C, double period, const std::string& name) {
  Coords x(C, 1);
  for (Index c = 0; c < C; ++c) {
    x(c, 0) = period * static_cast<double>(c) / static_cast<double>(C);
  }
  return ConditionGrid({GridAxis{name, true, period}}, std::move(x));
}

Index Dataset::total_trials() const {
  Index total = 0;
  for (const auto& t : trials) {
    total += t.rows();
  }
  return total;
}

void Dataset::validate(bool allow_empty_conditions) const {
  if (trials.empty()) {
    throw InvalidInput("dataset has no conditions");
  }
  if (static_cast<Index>(trials.size()) != grid.size()) {
    throw InvalidInput("dataset trials do not match the number of grid conditions");
  }
  const Index n = neurons();
  for (std::size_t c = 0; c < trials.size(); ++c) {
    if (trials[c].cols() != n) {
      throw InvalidInput("condition " + std::to_string(c) + " has a different neuron count");
    }
    if (!allow_empty_conditions && trials[c].rows() < 1) {
      throw InvalidInput("condition " + std::to_string(c) + " has no trials");
    }
  }
}

Dataset Dataset::subset_conditions(const std::vector<Index>& rows) const {
  Dataset out;
  out.grid = grid.subset(rows);
  for (Index r : rows) {
    out.trials.push_back(trials[r]);
  }
  if (truth) {
    MomentField t;
    for (Index r : rows) {
      t.mu.push_back(truth->mu[r]);
      t.sigma.push_back(truth->sigma[r]);
    }
    out.truth = std::move(t);
  }
  return out;
}

}  // namespace noisecov
