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

#include "noisecov/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "noisecov/config.hpp"

namespace noisecov {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError("not a number: '" + std::string(s) + "'");
  }
  return v;
}

Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_double(j.get<std::string>());
  throw FormatError("expected a number");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw FormatError("cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      throw FormatError("write failed for " + path.string());
    }
  }
  fs::rename(tmp, path);
}

std::string matrix_csv(const MatrixXd& m, const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  if (!header.empty()) out += '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

MatrixXd parse_matrix_csv(std::string_view text, bool has_header) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  bool first = true;
  Index header_cols = -1;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t c0 = 0;
    while (true) {
      const std::size_t c1 = line.find(',', c0);
      cells.push_back(line.substr(c0, c1 == std::string_view::npos ? line.size() - c0 : c1 - c0));
      if (c1 == std::string_view::npos) break;
      c0 = c1 + 1;
    }
    if (first && has_header) {
      header_cols = static_cast<Index>(cells.size());
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    for (auto cell : cells) row.push_back(parse_double(cell));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged CSV");
    }
    rows.push_back(std::move(row));
  }
  const Index cols = rows.empty() ? std::max<Index>(header_cols, 0)
                                  : static_cast<Index>(rows.front().size());
  if (header_cols >= 0 && cols != header_cols) {
    throw FormatError("CSV header width does not match the data");
  }
  MatrixXd m(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

Json grid_to_json(const ConditionGrid& grid) {
  Json axes = Json::array();
  for (const auto& a : grid.axes) {
    Json ax = {{"name", a.name}, {"topology", a.periodic ? "periodic" : "linear"}};
    if (a.periodic) ax["period"] = a.period;
    axes.push_back(ax);
  }
  Json coords = Json::array();
  for (Index i = 0; i < grid.size(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < grid.dims(); ++j) row.push_back(grid.coords(i, j));
    coords.push_back(row);
  }
  return {{"axes", axes}, {"coordinates", coords}};
}

ConditionGrid grid_from_json(const Json& j) {
  std::vector<GridAxis> axes;
  for (const auto& a : j.at("axes")) {
    GridAxis ax;
    ax.name = a.at("name").get<std::string>();
    const std::string topo = a.at("topology").get<std::string>();
    if (topo == "periodic") {
      ax.periodic = true;
      ax.period = a.at("period").get<double>();
    } else if (topo != "linear") {
      throw FormatError("unknown axis topology '" + topo + "'");
    }
    axes.push_back(ax);
  }
  const auto& rows = j.at("coordinates");
  Coords x(static_cast<Index>(rows.size()), static_cast<Index>(axes.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != axes.size()) {
      throw FormatError("grid coordinate has the wrong dimension");
    }
    for (std::size_t d = 0; d < axes.size(); ++d) {
      x(static_cast<Index>(i), static_cast<Index>(d)) = rows[i][d].get<double>();
    }
  }
  return ConditionGrid(std::move(axes), std::move(x));
}

namespace {

std::string condition_name(Index c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04ld", static_cast<long>(c));
  return buf;
}

std::vector<std::string> neuron_header(Index N) {
  std::vector<std::string> h;
  for (Index n = 0; n < N; ++n) h.push_back("n" + std::to_string(n));
  return h;
}

}  // namespace

void write_dataset(const fs::path& dir, const Dataset& data) {
  data.validate();
  fs::create_directories(dir);
  Json files = Json::object();
  auto emit = [&](const std::string& rel, const std::string& contents) {
    write_file(dir / rel, contents);
    files[rel] = hex64(fnv1a64(contents));
  };
  emit("grid.json", grid_to_json(data.grid).dump(2) + "\n");
  Json K = Json::array();
  for (Index c = 0; c < data.conditions(); ++c) {
    emit("condition_" + condition_name(c) + "/trials.csv",
         matrix_csv(data.trials[c], neuron_header(data.neurons())));
    K.push_back(data.trials[c].rows());
  }
  if (data.truth) {
    for (Index c = 0; c < data.conditions(); ++c) {
      emit("truth/mu_" + condition_name(c) + ".csv", matrix_csv(data.truth->mu[c]));
      emit("truth/sigma_" + condition_name(c) + ".csv", matrix_csv(data.truth->sigma[c]));
    }
  }
  Json manifest = {{"schema_version", kSchemaVersion},
                   {"N", data.neurons()},
                   {"C", data.conditions()},
                   {"K", K},
                   {"has_truth", data.truth.has_value()},
                   {"files", files}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  const Json manifest = Json::parse(read_file(dir / "manifest.json"));
  const auto& files = manifest.at("files");
  auto load = [&](const std::string& rel) {
    std::string contents = read_file(dir / rel);
    if (files.contains(rel) && files.at(rel).get<std::string>() != hex64(fnv1a64(contents))) {
      throw FormatError("checksum mismatch for " + rel);
    }
    return contents;
  };
  Dataset d;
  d.grid = grid_from_json(Json::parse(load("grid.json")));
  const Index C = manifest.at("C").get<Index>();
  const Index N = manifest.at("N").get<Index>();
  if (C != d.grid.size()) {
    throw FormatError("manifest condition count does not match grid.json");
  }
  for (Index c = 0; c < C; ++c) {
    MatrixXd Y = parse_matrix_csv(load("condition_" + condition_name(c) + "/trials.csv"), true);
    if (Y.cols() != N) {
      throw FormatError("condition " + std::to_string(c) + " has the wrong neuron count");
    }
    d.trials.push_back(std::move(Y));
  }
  if (manifest.value("has_truth", false)) {
    MomentField t;
    for (Index c = 0; c < C; ++c) {
      t.mu.push_back(parse_matrix_csv(load("truth/mu_" + condition_name(c) + ".csv"), false).col(0));
      t.sigma.push_back(parse_matrix_csv(load("truth/sigma_" + condition_name(c) + ".csv"), false));
    }
    d.truth = std::move(t);
  }
  d.validate();
  return d;
}

void write_moment_field(const fs::path& dir, const std::string& name, const MomentField& m,
                        const Coords& x) {
  Json entries = Json::array();
  for (Index j = 0; j < m.size(); ++j) {
    const std::string mu_rel = name + "/mu_" + condition_name(j) + ".csv";
    const std::string sg_rel = name + "/sigma_" + condition_name(j) + ".csv";
    write_file(dir / mu_rel, matrix_csv(m.mu[j]));
    write_file(dir / sg_rel, matrix_csv(m.sigma[j]));
    Json xs = Json::array();
    for (Index d = 0; d < x.cols(); ++d) xs.push_back(x(j, d));
    entries.push_back({{"x", xs}, {"mu", mu_rel}, {"sigma", sg_rel}});
  }
  write_file(dir / (name + ".json"), Json{{"points", entries}}.dump(2) + "\n");
}

void write_moment_samples(const fs::path& dir, const std::string& name, const MomentSamples& m) {
  Json entries = Json::array();
  for (std::size_t j = 0; j < m.mu.size(); ++j) {
    Json draws = Json::array();
    for (std::size_t s = 0; s < m.mu[j].size(); ++s) {
      const std::string stem =
          name + "/" + condition_name(static_cast<Index>(j)) + "_" + condition_name(static_cast<Index>(s));
      write_file(dir / (stem + "_mu.csv"), matrix_csv(m.mu[j][s]));
      write_file(dir / (stem + "_sigma.csv"), matrix_csv(m.sigma[j][s]));
      draws.push_back({{"mu", stem + "_mu.csv"}, {"sigma", stem + "_sigma.csv"}});
    }
    Json xs = Json::array();
    for (Index d = 0; d < m.x_star.cols(); ++d) xs.push_back(m.x_star(static_cast<Index>(j), d));
    entries.push_back({{"x", xs}, {"draws", draws}});
  }
  Json index = {{"seed", m.seed}, {"lifted", m.lifted}, {"points", entries}};
  write_file(dir / (name + ".json"), index.dump(2) + "\n");
}

void write_gradient_samples(const fs::path& dir, const std::string& name,
                            const GradientSamples& g) {
  Json draws = Json::array();
  for (std::size_t s = 0; s < g.mu.size(); ++s) {
    const std::string stem = name + "/" + condition_name(static_cast<Index>(s));
    write_file(dir / (stem + "_mu.csv"), matrix_csv(g.mu[s]));
    write_file(dir / (stem + "_sigma.csv"), matrix_csv(g.sigma[s]));
    write_file(dir / (stem + "_dmu.csv"), matrix_csv(g.dmu[s]));
    write_file(dir / (stem + "_dsigma.csv"), matrix_csv(g.dsigma[s]));
    draws.push_back({{"mu", stem + "_mu.csv"},
                     {"sigma", stem + "_sigma.csv"},
                     {"dmu", stem + "_dmu.csv"},
                     {"dsigma", stem + "_dsigma.csv"}});
  }
  Json xs = Json::array();
  for (Index d = 0; d < g.x_star.size(); ++d) xs.push_back(g.x_star(d));
  Json index = {{"seed", g.seed}, {"axis", g.axis}, {"x", xs}, {"lifted", g.lifted}, {"draws", draws}};
  write_file(dir / (name + ".json"), index.dump(2) + "\n");
}

std::string elbo_trace_csv(const std::vector<double>& trace) {
  std::string out = "iteration,elbo\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += std::to_string(i) + "," + format_double(trace[i]) + "\n";
  }
  return out;
}

// Posterior bundle ----------------------------------------------------------

namespace {

constexpr std::string_view kBundleMagic = "noisecov-posterior";

struct ArrayRef {
  const char* name;
  MatrixXd* m;
};

struct ConstArrayRef {
  const char* name;
  const MatrixXd* m;
};

}  // namespace

void save_posterior(const fs::path& path, const Posterior& post) {
  const Posterior& p = post;
  const MatrixXd r = p.theta.r;
  const MatrixXd trace = Eigen::Map<const VectorXd>(post.elbo_trace.data(),
                                                    static_cast<Index>(post.elbo_trace.size()));
  const std::vector<ConstArrayRef> arrays = {{"mean.mu", &p.q.mean.mu},         {"mean.U", &p.q.mean.U},
                                  {"mean.z", &p.q.mean.z},           {"mean.g", &p.q.mean.g},
                                  {"log_scale.mu", &p.q.log_scale.mu}, {"log_scale.U", &p.q.log_scale.U},
                                  {"log_scale.z", &p.q.log_scale.z}, {"log_scale.g", &p.q.log_scale.g},
                                  {"L", &p.theta.L},                 {"r", &r},
                                  {"elbo_trace", &trace}};
  Json index = Json::array();
  std::string payload;
  for (const auto& a : arrays) {
    const std::size_t bytes = static_cast<std::size_t>(a.m->size()) * sizeof(double);
    index.push_back({{"name", a.name}, {"rows", a.m->rows()}, {"cols", a.m->cols()},
                     {"offset", payload.size()}});
    payload.append(reinterpret_cast<const char*>(a.m->data()), bytes);
  }
  Json header = {{"format", kBundleMagic},
                 {"schema_version", kSchemaVersion},
                 {"spec", spec_to_json(post.spec)},
                 {"grid", grid_to_json(post.grid)},
                 {"fit", fit_config_to_json(post.config)},
                 {"family", to_string(post.q.family)},
                 {"arrays", index},
                 {"payload_bytes", payload.size()},
                 {"checksum", hex64(fnv1a64(payload))}};
  write_file(path, header.dump() + "\n" + payload);
}

Posterior load_posterior(const fs::path& path) {
  const std::string data = read_file(path);
  const std::size_t nl = data.find('\n');
  if (nl == std::string::npos) {
    throw FormatError("posterior bundle has no header");
  }
  const Json header = Json::parse(data.substr(0, nl));
  if (header.value("format", "") != kBundleMagic) {
    throw FormatError("not a posterior bundle");
  }
  const std::string_view payload(data.data() + nl + 1, data.size() - nl - 1);
  if (payload.size() != header.at("payload_bytes").get<std::size_t>() ||
      hex64(fnv1a64(payload)) != header.at("checksum").get<std::string>()) {
    throw FormatError("posterior bundle payload is corrupt");
  }
  Posterior post;
  post.spec = spec_from_json(header.at("spec"));
  post.grid = grid_from_json(header.at("grid"));
  post.config = fit_config_from_json(header.at("fit"));
  post.q.family = parse_family(header.at("family").get<std::string>());
  MatrixXd r, trace;
  std::vector<ArrayRef> arrays = {{"mean.mu", &post.q.mean.mu},         {"mean.U", &post.q.mean.U},
                                  {"mean.z", &post.q.mean.z},           {"mean.g", &post.q.mean.g},
                                  {"log_scale.mu", &post.q.log_scale.mu}, {"log_scale.U", &post.q.log_scale.U},
                                  {"log_scale.z", &post.q.log_scale.z}, {"log_scale.g", &post.q.log_scale.g},
                                  {"L", &post.theta.L},                 {"r", &r},
                                  {"elbo_trace", &trace}};
  const auto& index = header.at("arrays");
  if (index.size() != arrays.size()) {
    throw FormatError("posterior bundle has an unexpected array list");
  }
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    const auto& e = index[i];
    if (e.at("name").get<std::string>() != arrays[i].name) {
      throw FormatError("posterior bundle array order mismatch");
    }
    const Index rows = e.at("rows").get<Index>();
    const Index cols = e.at("cols").get<Index>();
    const std::size_t off = e.at("offset").get<std::size_t>();
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    if (off + bytes > payload.size()) {
      throw FormatError("posterior bundle array out of range");
    }
    arrays[i].m->resize(rows, cols);
    std::memcpy(arrays[i].m->data(), payload.data() + off, bytes);
  }
  post.theta.r = r.reshaped();
  post.elbo_trace.assign(trace.data(), trace.data() + trace.size());
  return post;
}

}  // namespace noisecov
