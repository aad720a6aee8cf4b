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
  On-disk formats.

  Dataset directory:
    grid.json                  axes (name, topology, period) and coordinates
    condition_0000/trials.csv  one row per trial, header n0,n1,...
    truth/mu_0000.csv,
    truth/sigma_0000.csv       ground truth, synthetic data only
    manifest.json              N, C, K per condition, FNV-1a checksum per file

  Floats are written in the shortest form that parses back to the same
  double; non-finite values are written as nan, inf, -inf.

  Posterior bundle: one line of JSON (model, grid, fit settings, array
  shapes and offsets) followed by the raw little-endian doubles.
*/

#ifndef NOISECOV_IO_HPP_
#define NOISECOV_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "noisecov/dataset.hpp"
#include "noisecov/inference.hpp"
#include "noisecov/posterior.hpp"

namespace noisecov {

using Json = nlohmann::json;
namespace fs = std::filesystem;

/// Raised for unreadable or corrupt files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v);
double parse_double(std::string_view s);

/// JSON value for a double: a number when finite, else "nan", "inf", "-inf".
Json json_number(double v);
double number_from_json(const Json& j);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string read_file(const fs::path& path);
/// Writes atomically enough for our purposes: to a sibling temp file, then
/// renames.
void write_file(const fs::path& path, std::string_view contents);

std::string matrix_csv(const MatrixXd& m, const std::vector<std::string>& header = {});
MatrixXd parse_matrix_csv(std::string_view text, bool has_header);

void write_dataset(const fs::path& dir, const Dataset& data);
Dataset read_dataset(const fs::path& dir);

Json grid_to_json(const ConditionGrid& grid);
ConditionGrid grid_from_json(const Json& j);

/// Writes <dir>/<name>.json (index) and one CSV per matrix under
/// <dir>/<name>/.
void write_moment_field(const fs::path& dir, const std::string& name, const MomentField& m,
                        const Coords& x);
void write_moment_samples(const fs::path& dir, const std::string& name, const MomentSamples& m);
void write_gradient_samples(const fs::path& dir, const std::string& name,
                            const GradientSamples& g);

std::string elbo_trace_csv(const std::vector<double>& trace);

void save_posterior(const fs::path& path, const Posterior& post);
Posterior load_posterior(const fs::path& path);

}  // namespace noisecov

#endif  // NOISECOV_IO_HPP_
