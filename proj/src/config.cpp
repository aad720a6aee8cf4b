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

#include "noisecov/config.hpp"

#include <set>

namespace noisecov {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) {
    throw InvalidInput(where + " must be a JSON object");
  }
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) {
      throw InvalidInput("unknown key '" + k + "' in " + where);
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) {
    out = j.at(key).get<T>();
  }
}

void read_double(const Json& j, const char* key, double& out) {
  if (j.contains(key)) out = number_from_json(j.at(key));
}

Json axis_to_json(const AxisKernel& a) {
  Json j = {{"kind", a.kind == KernelKind::kPeriodic ? "periodic" : "squared_exponential"},
            {"gamma", a.gamma},
            {"beta", a.beta},
            {"lambda", a.lambda}};
  if (a.kind == KernelKind::kPeriodic) j["period"] = a.period;
  return j;
}

AxisKernel axis_from_json(const Json& j) {
  check_keys(j, {"kind", "gamma", "beta", "lambda", "period"}, "kernel axis");
  AxisKernel a;
  const std::string kind = j.value("kind", "squared_exponential");
  if (kind == "periodic") {
    a.kind = KernelKind::kPeriodic;
  } else if (kind != "squared_exponential") {
    throw InvalidInput("unknown kernel kind '" + kind + "'");
  }
  read_double(j, "gamma", a.gamma);
  read_double(j, "beta", a.beta);
  read_double(j, "lambda", a.lambda);
  read_double(j, "period", a.period);
  a.validate();
  return a;
}

}  // namespace

Json kernel_to_json(const ProductKernel& k) {
  Json out = Json::array();
  for (const auto& a : k.axes) out.push_back(axis_to_json(a));
  return out;
}

ProductKernel kernel_from_json(const Json& j) {
  if (!j.is_array()) {
    throw InvalidInput("kernel must be a list of axes");
  }
  ProductKernel k;
  for (const auto& a : j) k.axes.push_back(axis_from_json(a));
  return k;
}

Json spec_to_json(const ModelSpec& s) {
  return {{"N", s.N},
          {"P", s.P},
          {"variant", to_string(s.variant)},
          {"use_diag", s.use_diag},
          {"observation", to_string(s.observation)},
          {"k_mu", kernel_to_json(s.k_mu)},
          {"k_sigma", kernel_to_json(s.k_sigma)}};
}

ModelSpec spec_from_json(const Json& j) {
  check_keys(j, {"N", "P", "variant", "use_diag", "observation", "k_mu", "k_sigma"}, "model spec");
  ModelSpec s;
  s.N = j.at("N").get<Index>();
  s.P = j.at("P").get<Index>();
  s.variant = parse_variant(j.at("variant").get<std::string>());
  s.use_diag = j.at("use_diag").get<bool>();
  s.observation = parse_observation(j.at("observation").get<std::string>());
  s.k_mu = kernel_from_json(j.at("k_mu"));
  s.k_sigma = kernel_from_json(j.at("k_sigma"));
  s.validate();
  return s;
}

Json fit_config_to_json(const FitConfig& c) {
  return {{"step", c.adam.step},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"iterations", c.iterations},
          {"elbo_samples", c.elbo_samples},
          {"minibatch", c.minibatch},
          {"seed", c.seed},
          {"family", to_string(c.family)},
          {"learn_L", c.learn_L},
          {"learn_r", c.learn_r},
          {"init_floor", c.init_floor}};
}

FitConfig fit_config_from_json(const Json& j, const FitConfig& defaults) {
  check_keys(j,
             {"step", "beta1", "beta2", "epsilon", "iterations", "elbo_samples", "minibatch",
              "seed", "family", "learn_L", "learn_r", "init_floor"},
             "fit");
  FitConfig c = defaults;
  read_double(j, "step", c.adam.step);
  read_double(j, "beta1", c.adam.beta1);
  read_double(j, "beta2", c.adam.beta2);
  read_double(j, "epsilon", c.adam.epsilon);
  read(j, "iterations", c.iterations);
  read(j, "elbo_samples", c.elbo_samples);
  read(j, "minibatch", c.minibatch);
  read(j, "seed", c.seed);
  if (j.contains("family")) c.family = parse_family(j.at("family").get<std::string>());
  read(j, "learn_L", c.learn_L);
  read(j, "learn_r", c.learn_r);
  read_double(j, "init_floor", c.init_floor);
  c.validate();
  return c;
}

Json synthetic_to_json(const SyntheticParams& p) {
  return {{"N", p.N},
          {"C", p.C},
          {"K", p.K},
          {"P", p.P},
          {"lambda_sigma", p.lambda_sigma},
          {"lambda_mu", p.lambda_mu},
          {"gamma", p.gamma},
          {"beta", p.beta},
          {"scale", to_string(p.scale)},
          {"observation", to_string(p.observation)},
          {"baseline", p.baseline},
          {"seed", p.seed}};
}

SyntheticParams synthetic_from_json(const Json& j) {
  check_keys(j,
             {"N", "C", "K", "P", "lambda_sigma", "lambda_mu", "gamma", "beta", "scale",
              "observation", "baseline", "seed"},
             "synthetic");
  SyntheticParams p;
  read(j, "N", p.N);
  read(j, "C", p.C);
  read(j, "K", p.K);
  read(j, "P", p.P);
  read_double(j, "lambda_sigma", p.lambda_sigma);
  read_double(j, "lambda_mu", p.lambda_mu);
  read_double(j, "gamma", p.gamma);
  read_double(j, "beta", p.beta);
  if (j.contains("scale")) p.scale = parse_scale_mode(j.at("scale").get<std::string>());
  if (j.contains("observation")) {
    p.observation = parse_observation(j.at("observation").get<std::string>());
  }
  read_double(j, "baseline", p.baseline);
  read(j, "seed", p.seed);
  p.validate();
  return p;
}

ModelSpec ModelConfig::resolve(Index N, const ConditionGrid& grid) const {
  ModelSpec s;
  s.N = N;
  s.P = P;
  s.variant = variant;
  s.use_diag = use_diag;
  s.observation = observation;
  auto derived = [&]() {
    ProductKernel k;
    for (const auto& ax : grid.axes) {
      k.axes.push_back(ax.periodic ? AxisKernel::periodic(1e-3, 1.0, 1.0, ax.period)
                                   : AxisKernel::squared_exponential(1e-3, 1.0, 1.0));
    }
    return k;
  };
  s.k_mu = k_mu.empty() ? derived() : ProductKernel(k_mu);
  s.k_sigma = k_sigma.empty() ? derived() : ProductKernel(k_sigma);
  s.validate();
  return s;
}

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j,
             {"schema_version", "seed", "threads", "data", "split", "model", "fit", "methods",
              "baselines", "evaluate", "cv"},
             "config");
  ExperimentConfig c;
  if (!j.contains("schema_version")) {
    throw InvalidInput("config is missing schema_version");
  }
  c.schema_version = j.at("schema_version").get<int>();
  if (c.schema_version != kSchemaVersion) {
    throw InvalidInput("unsupported schema_version " + std::to_string(c.schema_version));
  }
  read(j, "seed", c.seed);
  read(j, "threads", c.threads);
  if (c.threads < 1) throw InvalidInput("threads must be >= 1");

  if (j.contains("data")) {
    const Json& d = j.at("data");
    check_keys(d, {"source", "path", "synthetic", "test_trials"}, "data");
    read(d, "source", c.data.source);
    read(d, "path", c.data.path);
    read(d, "test_trials", c.data.test_trials);
    if (d.contains("synthetic")) c.data.synthetic = synthetic_from_json(d.at("synthetic"));
    if (!d.contains("synthetic") || !d.at("synthetic").contains("seed")) {
      c.data.synthetic.seed = c.seed;
    }
    if (c.data.source != "synthetic" && c.data.source != "directory") {
      throw InvalidInput("data.source must be 'synthetic' or 'directory'");
    }
  }
  if (!j.contains("data")) {
    c.data.synthetic.seed = c.seed;
  }
  if (j.contains("split")) {
    const Json& s = j.at("split");
    check_keys(s, {"scheme", "train", "val", "test", "conditions", "count"}, "split");
    read(s, "scheme", c.split.scheme);
    read_double(s, "train", c.split.train);
    read_double(s, "val", c.split.val);
    read_double(s, "test", c.split.test);
    read(s, "conditions", c.split.conditions);
    read(s, "count", c.split.count);
    if (c.split.scheme != "trial_fraction" && c.split.scheme != "holdout" &&
        c.split.scheme != "holdout_random" && c.split.scheme != "extra_trials") {
      throw InvalidInput("unknown split scheme '" + c.split.scheme + "'");
    }
  }
  if (j.contains("model")) {
    const Json& m = j.at("model");
    check_keys(m, {"variant", "P", "use_diag", "observation", "k_mu", "k_sigma"}, "model");
    if (m.contains("variant")) c.model.variant = parse_variant(m.at("variant").get<std::string>());
    read(m, "P", c.model.P);
    read(m, "use_diag", c.model.use_diag);
    if (m.contains("observation")) {
      c.model.observation = parse_observation(m.at("observation").get<std::string>());
    }
    if (m.contains("k_mu")) c.model.k_mu = kernel_from_json(m.at("k_mu")).axes;
    if (m.contains("k_sigma")) c.model.k_sigma = kernel_from_json(m.at("k_sigma")).axes;
  }
  const FitConfig fit_defaults =
      c.model.observation == Observation::kPoisson ? FitConfig::poisson_defaults() : FitConfig{};
  c.fit = fit_config_from_json(j.value("fit", Json::object()), fit_defaults);
  if (!j.contains("fit") || !j.at("fit").contains("seed")) {
    c.fit.seed = c.seed;
  }
  if (j.contains("methods")) {
    c.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& m : c.methods) {
      if (m != "wishart") parse_baseline(m);
    }
  }
  if (j.contains("baselines")) {
    const Json& b = j.at("baselines");
    check_keys(b, {"wa_alphas", "glasso_rho", "lw_target"}, "baselines");
    read(b, "wa_alphas", c.baselines.wa_alphas);
    read_double(b, "glasso_rho", c.baselines.glasso_rho);
    if (b.contains("lw_target")) {
      const std::string t = b.at("lw_target").get<std::string>();
      if (t == "identity") {
        c.baselines.lw_target = ShrinkageTarget::kScaledIdentity;
      } else if (t == "diagonal") {
        c.baselines.lw_target = ShrinkageTarget::kDiagonal;
      } else {
        throw InvalidInput("unknown lw_target '" + t + "'");
      }
    }
  }
  if (j.contains("evaluate")) {
    const Json& e = j.at("evaluate");
    check_keys(e,
               {"heldout", "heldout_samples", "operator_norm", "decode", "decoder", "fisher",
                "predict_mode", "moment_samples"},
               "evaluate");
    read(e, "moment_samples", c.evaluate.moment_samples);
    if (c.evaluate.moment_samples < 1) throw InvalidInput("moment_samples must be >= 1");
    if (e.contains("heldout")) {
      const std::string h = e.at("heldout").get<std::string>();
      if (h == "single_sample") {
        c.evaluate.heldout = HeldoutMode::single_sample();
      } else if (h == "mc") {
        c.evaluate.heldout = HeldoutMode::monte_carlo(e.value("heldout_samples", 100));
      } else {
        throw InvalidInput("unknown heldout mode '" + h + "'");
      }
    }
    read(e, "operator_norm", c.evaluate.operator_norm);
    read(e, "decode", c.evaluate.decode);
    if (e.contains("decoder")) {
      c.evaluate.decoder = parse_decoder_mode(e.at("decoder").get<std::string>());
    }
    if (e.contains("predict_mode")) {
      c.evaluate.predict_mode = parse_predict_mode(e.at("predict_mode").get<std::string>());
    }
    if (e.contains("fisher")) {
      const Json& f = e.at("fisher");
      check_keys(f, {"points", "samples", "axis"}, "evaluate.fisher");
      read(f, "points", c.evaluate.fisher.points);
      read(f, "samples", c.evaluate.fisher.samples);
      read(f, "axis", c.evaluate.fisher.axis);
    }
  }
  if (j.contains("cv")) {
    const Json& v = j.at("cv");
    check_keys(v, {"lambda_mu", "lambda_sigma", "P", "variant", "folds", "train", "val", "test"},
               "cv");
    read(v, "lambda_mu", c.cv.lambda_mu);
    read(v, "lambda_sigma", c.cv.lambda_sigma);
    read(v, "P", c.cv.P);
    if (v.contains("variant")) {
      for (const auto& s : v.at("variant")) c.cv.variant.push_back(parse_variant(s.get<std::string>()));
    }
    read(v, "folds", c.cv.folds);
    read_double(v, "train", c.cv.train);
    read_double(v, "val", c.cv.val);
    read_double(v, "test", c.cv.test);
    if (c.cv.folds < 1) throw InvalidInput("cv.folds must be >= 1");
  }
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json split = {{"scheme", c.split.scheme}};
  if (c.split.scheme == "trial_fraction") {
    split["train"] = c.split.train;
    split["val"] = c.split.val;
    split["test"] = c.split.test;
  } else if (c.split.scheme == "holdout") {
    split["conditions"] = c.split.conditions;
  } else if (c.split.scheme == "holdout_random") {
    split["count"] = c.split.count;
  }
  Json model = {{"variant", to_string(c.model.variant)},
                {"P", c.model.P},
                {"use_diag", c.model.use_diag},
                {"observation", to_string(c.model.observation)}};
  if (!c.model.k_mu.empty()) model["k_mu"] = kernel_to_json(ProductKernel(c.model.k_mu));
  if (!c.model.k_sigma.empty()) model["k_sigma"] = kernel_to_json(ProductKernel(c.model.k_sigma));
  Json evaluate = {
      {"heldout", c.evaluate.heldout.kind == HeldoutMode::kSingleSample ? "single_sample" : "mc"},
      {"heldout_samples", c.evaluate.heldout.samples},
      {"operator_norm", c.evaluate.operator_norm},
      {"decode", c.evaluate.decode},
      {"decoder", to_string(c.evaluate.decoder)},
      {"predict_mode", to_string(c.evaluate.predict_mode)},
      {"moment_samples", c.evaluate.moment_samples},
      {"fisher",
       {{"points", c.evaluate.fisher.points},
        {"samples", c.evaluate.fisher.samples},
        {"axis", c.evaluate.fisher.axis}}}};
  Json variants = Json::array();
  for (Variant v : c.cv.variant) variants.push_back(to_string(v));
  Json cv = {{"lambda_mu", c.cv.lambda_mu},
             {"lambda_sigma", c.cv.lambda_sigma},
             {"P", c.cv.P},
             {"variant", variants},
             {"folds", c.cv.folds},
             {"train", c.cv.train},
             {"val", c.cv.val},
             {"test", c.cv.test}};
  return {{"schema_version", c.schema_version},
          {"seed", c.seed},
          {"threads", c.threads},
          {"data",
           {{"source", c.data.source},
            {"path", c.data.path},
            {"synthetic", synthetic_to_json(c.data.synthetic)},
            {"test_trials", c.data.test_trials}}},
          {"split", split},
          {"model", model},
          {"fit", fit_config_to_json(c.fit)},
          {"methods", c.methods},
          {"baselines",
           {{"wa_alphas", c.baselines.wa_alphas},
            {"glasso_rho", c.baselines.glasso_rho},
            {"lw_target",
             c.baselines.lw_target == ShrinkageTarget::kDiagonal ? "diagonal" : "identity"}}},
          {"evaluate", evaluate},
          {"cv", cv}};
}

}  // namespace noisecov
