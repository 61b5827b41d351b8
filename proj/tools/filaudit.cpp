//
// Copyright 2026 The filaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// filaudit: reproducible experiment runner for per-example leakage audits.
//
// Subcommands: audit | irfil | attack | validate | scatter.
// Exit codes: 0 success, 1 usage, 2 config/validation failure,
// 3 numerical failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fil/fil.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --------------------------------------------------------------------------
// Config schema (JSON file; CLI flags override individual fields)
// --------------------------------------------------------------------------

struct DatasetConfig {
  std::string kind = "synthetic.regression";
  std::string path;       // csv / snapshot
  std::string spec_path;  // csv
  std::size_t n = 200;
  std::size_t d = 5;
  double noise = 0.1;
  double heteroskedasticity = 1.0;
  double margin = 0.5;
  bool zero_one_targets = true;
  std::size_t candidates = 3;
  double effect_size = 0.5;
};

struct PipelineConfig {
  bool unit_ball = true;
  std::size_t pca_components = 0;  // 0 disables the projection
  bool renormalize_after_pca = true;
};

struct SplitConfig {
  double test_fraction = 0.0;  // 0 disables the split
};

struct AuditConfig {
  std::string granularity = "example";  // example | attribute | full
  int histogram_bins = 20;
  int top_k = 8;
};

struct IrfilCliConfig {
  int iterations = 10;
  std::optional<double> cv_stop;
  std::string eta_attribute;
};

struct AttackCliConfig {
  std::string kind = "whitebox";
  std::string attribute;
  int trials = 100;
  int irfil_iterations = 0;  // > 0 attacks the reweighted model as well
};

struct Config {
  std::uint64_t seed = 1;
  double sigma = 1.0;
  unsigned threads = 0;  // 0 = hardware concurrency
  std::string output = "-";
  DatasetConfig dataset;
  PipelineConfig pipeline;
  SplitConfig split;
  fil::LossKind loss = fil::LossKind::kSquared;
  double lambda = 0.01;
  double grad_tol = -1.0;
  AuditConfig audit;
  IrfilCliConfig irfil;
  AttackCliConfig attack;
  nlohmann::json echo;  // effective config, embedded in the manifest
};

template <typename T>
T field_as(const nlohmann::json& j, const std::string& key, T fallback,
           const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

Config parse_config(const nlohmann::json& j) {
  Config cfg;
  cfg.seed = field_as<std::uint64_t>(j, "seed", cfg.seed, "config");
  cfg.sigma = field_as<double>(j, "sigma", cfg.sigma, "config");
  cfg.threads = field_as<unsigned>(j, "threads", cfg.threads, "config");
  cfg.output = field_as<std::string>(j, "output", cfg.output, "config");

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    auto& out = cfg.dataset;
    out.kind = field_as<std::string>(d, "kind", out.kind, "config.dataset");
    out.path = field_as<std::string>(d, "path", out.path, "config.dataset");
    out.spec_path =
        field_as<std::string>(d, "spec_path", out.spec_path, "config.dataset");
    out.n = field_as<std::size_t>(d, "n", out.n, "config.dataset");
    out.d = field_as<std::size_t>(d, "d", out.d, "config.dataset");
    out.noise = field_as<double>(d, "noise", out.noise, "config.dataset");
    out.heteroskedasticity = field_as<double>(
        d, "heteroskedasticity", out.heteroskedasticity, "config.dataset");
    out.margin = field_as<double>(d, "margin", out.margin, "config.dataset");
    out.zero_one_targets = field_as<bool>(
        d, "zero_one_targets", out.zero_one_targets, "config.dataset");
    out.candidates = field_as<std::size_t>(d, "candidates", out.candidates,
                                           "config.dataset");
    out.effect_size =
        field_as<double>(d, "effect_size", out.effect_size, "config.dataset");
  }
  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    cfg.pipeline.unit_ball = field_as<bool>(
        p, "unit_ball", cfg.pipeline.unit_ball, "config.pipeline");
    cfg.pipeline.pca_components =
        field_as<std::size_t>(p, "pca_components", cfg.pipeline.pca_components,
                              "config.pipeline");
    cfg.pipeline.renormalize_after_pca =
        field_as<bool>(p, "renormalize_after_pca",
                       cfg.pipeline.renormalize_after_pca, "config.pipeline");
  }
  if (j.contains("split")) {
    cfg.split.test_fraction =
        field_as<double>(j.at("split"), "test_fraction",
                         cfg.split.test_fraction, "config.split");
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    const std::string loss =
        field_as<std::string>(m, "loss", "squared", "config.model");
    try {
      cfg.loss = fil::loss_kind_from_string(loss);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config.model.loss: ") + e.what());
    }
    cfg.lambda = field_as<double>(m, "lambda", cfg.lambda, "config.model");
    cfg.grad_tol =
        field_as<double>(m, "grad_tol", cfg.grad_tol, "config.model");
  }
  if (j.contains("audit")) {
    const auto& a = j.at("audit");
    cfg.audit.granularity = field_as<std::string>(
        a, "granularity", cfg.audit.granularity, "config.audit");
    cfg.audit.histogram_bins = field_as<int>(
        a, "histogram_bins", cfg.audit.histogram_bins, "config.audit");
    cfg.audit.top_k =
        field_as<int>(a, "top_k", cfg.audit.top_k, "config.audit");
  }
  if (j.contains("irfil")) {
    const auto& i = j.at("irfil");
    cfg.irfil.iterations =
        field_as<int>(i, "iterations", cfg.irfil.iterations, "config.irfil");
    if (i.contains("cv_stop") && !i.at("cv_stop").is_null()) {
      cfg.irfil.cv_stop = field_as<double>(i, "cv_stop", 0.0, "config.irfil");
    }
    cfg.irfil.eta_attribute = field_as<std::string>(
        i, "eta_attribute", cfg.irfil.eta_attribute, "config.irfil");
  }
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    cfg.attack.kind =
        field_as<std::string>(a, "kind", cfg.attack.kind, "config.attack");
    cfg.attack.attribute = field_as<std::string>(
        a, "attribute", cfg.attack.attribute, "config.attack");
    cfg.attack.trials =
        field_as<int>(a, "trials", cfg.attack.trials, "config.attack");
    cfg.attack.irfil_iterations = field_as<int>(
        a, "irfil_iterations", cfg.attack.irfil_iterations, "config.attack");
  }
  return cfg;
}

void validate_config(const Config& cfg) {
  if (!(cfg.sigma > 0.0)) throw ConfigError("config.sigma: must be > 0");
  if (cfg.lambda < 0.0) throw ConfigError("config.model.lambda: must be >= 0");
  if (cfg.dataset.kind == "csv") {
    if (cfg.dataset.path.empty()) {
      throw ConfigError("config.dataset.path: required for kind=csv");
    }
    if (cfg.dataset.spec_path.empty()) {
      throw ConfigError("config.dataset.spec_path: required for kind=csv");
    }
  } else if (cfg.dataset.kind == "snapshot") {
    if (cfg.dataset.path.empty()) {
      throw ConfigError("config.dataset.path: required for kind=snapshot");
    }
  } else if (cfg.dataset.kind != "synthetic.regression" &&
             cfg.dataset.kind != "synthetic.classification" &&
             cfg.dataset.kind != "synthetic.attack") {
    throw ConfigError("config.dataset.kind: unknown kind '" +
                      cfg.dataset.kind + "'");
  }
  if (cfg.split.test_fraction < 0.0 || cfg.split.test_fraction >= 1.0) {
    throw ConfigError("config.split.test_fraction: must be in [0, 1)");
  }
  if (cfg.audit.granularity != "example" &&
      cfg.audit.granularity != "attribute" &&
      cfg.audit.granularity != "full") {
    throw ConfigError(
        "config.audit.granularity: must be example, attribute or full");
  }
  if (cfg.irfil.iterations < 1) {
    throw ConfigError("config.irfil.iterations: must be >= 1");
  }
  if (cfg.attack.trials < 1) {
    throw ConfigError("config.attack.trials: must be >= 1");
  }
}

// Effective configuration embedded in the manifest. The output destination
// is deliberately left out: two runs that differ only in where the report
// lands must produce byte-identical content.
nlohmann::json config_echo(const Config& cfg) {
  return nlohmann::json{
      {"seed", cfg.seed},
      {"sigma", cfg.sigma},
      {"threads", cfg.threads},
      {"dataset",
       {{"kind", cfg.dataset.kind},
        {"path", cfg.dataset.path},
        {"spec_path", cfg.dataset.spec_path},
        {"n", cfg.dataset.n},
        {"d", cfg.dataset.d},
        {"noise", cfg.dataset.noise},
        {"heteroskedasticity", cfg.dataset.heteroskedasticity},
        {"margin", cfg.dataset.margin},
        {"zero_one_targets", cfg.dataset.zero_one_targets},
        {"candidates", cfg.dataset.candidates},
        {"effect_size", cfg.dataset.effect_size}}},
      {"pipeline",
       {{"unit_ball", cfg.pipeline.unit_ball},
        {"pca_components", cfg.pipeline.pca_components},
        {"renormalize_after_pca", cfg.pipeline.renormalize_after_pca}}},
      {"split", {{"test_fraction", cfg.split.test_fraction}}},
      {"model",
       {{"loss", fil::to_string(cfg.loss)},
        {"lambda", cfg.lambda},
        {"grad_tol", cfg.grad_tol}}},
      {"audit",
       {{"granularity", cfg.audit.granularity},
        {"histogram_bins", cfg.audit.histogram_bins},
        {"top_k", cfg.audit.top_k}}},
      {"irfil",
       {{"iterations", cfg.irfil.iterations},
        {"cv_stop", cfg.irfil.cv_stop.has_value()
                        ? nlohmann::json(*cfg.irfil.cv_stop)
                        : nlohmann::json(nullptr)},
        {"eta_attribute", cfg.irfil.eta_attribute}}},
      {"attack",
       {{"kind", cfg.attack.kind},
        {"attribute", cfg.attack.attribute},
        {"trials", cfg.attack.trials},
        {"irfil_iterations", cfg.attack.irfil_iterations}}}};
}

// --------------------------------------------------------------------------
// Dataset resolution
// --------------------------------------------------------------------------

struct ResolvedData {
  fil::Dataset data;
  std::optional<fil::Dataset> test;
  std::string attack_attribute;
  std::vector<int> true_category;  // attack ground truth if available
  std::size_t dropped_rows = 0;
};

ResolvedData resolve_dataset(const Config& cfg) {
  ResolvedData out;
  const DatasetConfig& d = cfg.dataset;

  if (d.kind == "csv") {
    const fil::FeatureSpec spec = fil::FeatureSpec::load(d.spec_path);
    const fil::RawTable raw = fil::load_csv(d.path, spec);
    out.dropped_rows = raw.dropped_rows;
    out.data = fil::encode(raw, spec);
    out.attack_attribute = spec.attack_attribute;
  } else if (d.kind == "snapshot") {
    out.data = fil::load_snapshot(d.path);
  } else if (d.kind == "synthetic.regression") {
    out.data =
        fil::gen_regression(d.n, d.d, d.noise, d.heteroskedasticity, cfg.seed);
  } else if (d.kind == "synthetic.classification") {
    out.data = fil::gen_classification(d.n, d.d, d.margin, cfg.seed,
                                       d.zero_one_targets);
  } else {  // synthetic.attack
    fil::AttackBench bench =
        fil::gen_attack_task(d.n, d.d, d.candidates, d.effect_size, cfg.seed);
    out.data = std::move(bench.data);
    out.attack_attribute = bench.attribute;
    out.true_category = std::move(bench.true_category);
  }

  if (cfg.pipeline.unit_ball) {
    std::string warning;
    out.data = fil::normalize_unit_ball(out.data, &warning);
    if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
  }
  if (cfg.pipeline.pca_components > 0) {
    out.data = fil::pca_project(out.data, cfg.pipeline.pca_components);
    if (cfg.pipeline.renormalize_after_pca) {
      out.data = fil::normalize_unit_ball(out.data);
    }
  }
  if (cfg.split.test_fraction > 0.0) {
    auto [train, test] = fil::split(out.data, cfg.split.test_fraction,
                                    cfg.seed);
    out.data = std::move(train);
    out.test = std::move(test);
    // Ground-truth labels no longer line up after a split.
    out.true_category.clear();
  }

  if (cfg.loss == fil::LossKind::kLogistic &&
      !fil::has_binary_targets(out.data.y)) {
    throw ConfigError(
        "config.model.loss: logistic requires targets in {0, 1}; this "
        "dataset has other values");
  }
  return out;
}

fil::TrainConfig train_config(const Config& cfg) {
  fil::TrainConfig tc;
  tc.loss = cfg.loss;
  tc.lambda = cfg.lambda;
  tc.grad_tol = cfg.grad_tol;
  return tc;
}

// --------------------------------------------------------------------------
// Output plumbing
// --------------------------------------------------------------------------

struct Sink {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = nullptr;

  explicit Sink(const std::string& target) {
    if (target == "-") {
      stream = &std::cout;
    } else {
      file = std::make_unique<std::ofstream>(target);
      if (!*file) throw ConfigError("config.output: cannot write " + target);
      stream = file.get();
    }
  }
};

fil::RunManifest make_manifest(const std::string& command, const Config& cfg) {
  fil::RunManifest manifest;
  manifest.command = command;
  manifest.seed = cfg.seed;
  manifest.config = cfg.echo;
  return manifest;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.begin(), v.end()));
}

// --------------------------------------------------------------------------
// Subcommands
// --------------------------------------------------------------------------

int cmd_audit(const Config& cfg) {
  const ResolvedData resolved = resolve_dataset(cfg);
  const fil::Dataset& ds = resolved.data;
  const fil::ModelParams params = fil::fit(ds, train_config(cfg));
  fil::MinimizerJacobian jac(ds, params);

  Sink sink(cfg.output);
  fil::JsonLinesWriter writer(*sink.stream, make_manifest("audit", cfg));

  nlohmann::json summary{{"record", "summary"},
                         {"n", ds.size()},
                         {"d", ds.dim()},
                         {"dropped_rows", resolved.dropped_rows},
                         {"loss", fil::to_string(cfg.loss)},
                         {"lambda", cfg.lambda},
                         {"sigma", cfg.sigma},
                         {"grad_norm", params.convergence.grad_norm},
                         {"train_accuracy", fil::accuracy(params, ds)},
                         {"train_mse", fil::mean_squared_error(params, ds)},
                         {"full_eta", jac.full_eta(cfg.sigma)}};
  if (resolved.test.has_value()) {
    summary["test_accuracy"] = fil::accuracy(params, *resolved.test);
    summary["test_mse"] = fil::mean_squared_error(params, *resolved.test);
  }
  writer.write(summary);

  if (cfg.audit.granularity == "example") {
    const Eigen::VectorXd etas = jac.all_example_etas(cfg.sigma);
    for (Eigen::Index i = 0; i < etas.size(); ++i) {
      writer.write({{"record", "eta"},
                    {"granularity", "example"},
                    {"index", i},
                    {"eta", etas[i]},
                    {"sigma", cfg.sigma},
                    {"seed", cfg.seed}});
    }
    writer.write(
        {{"record", "histogram"},
         {"of", "example_eta"},
         {"histogram",
          fil::Histogram::build(etas, cfg.audit.histogram_bins).to_json()}});

    // Most and least exposed examples.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(etas.size()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return etas[a] < etas[b];
    });
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(std::max(cfg.audit.top_k, 0)), order.size());
    nlohmann::json bottom = nlohmann::json::array();
    nlohmann::json top = nlohmann::json::array();
    for (std::size_t j = 0; j < k; ++j) {
      bottom.push_back({{"index", order[j]}, {"eta", etas[order[j]]}});
      const Eigen::Index idx = order[order.size() - 1 - j];
      top.push_back({{"index", idx}, {"eta", etas[idx]}});
    }
    writer.write({{"record", "extremes"},
                  {"bottom", std::move(bottom)},
                  {"top", std::move(top)}});
  } else if (cfg.audit.granularity == "attribute") {
    const std::size_t d = ds.dim();
    Eigen::VectorXd etas(static_cast<Eigen::Index>(d) + 1);
    for (std::size_t c = 0; c <= d; ++c) {
      etas[static_cast<Eigen::Index>(c)] = jac.attribute_eta(c, cfg.sigma);
      const std::string name =
          c == d ? "target"
                 : (c < ds.feature_names.size() ? ds.feature_names[c]
                                                : "f" + std::to_string(c));
      writer.write({{"record", "eta"},
                    {"granularity", "attribute"},
                    {"index", c},
                    {"name", name},
                    {"eta", etas[static_cast<Eigen::Index>(c)]},
                    {"sigma", cfg.sigma},
                    {"seed", cfg.seed}});
    }
    writer.write(
        {{"record", "histogram"},
         {"of", "attribute_eta"},
         {"histogram",
          fil::Histogram::build(etas, cfg.audit.histogram_bins).to_json()}});
  } else {
    writer.write({{"record", "eta"},
                  {"granularity", "full"},
                  {"eta", jac.full_eta(cfg.sigma)},
                  {"sigma", cfg.sigma},
                  {"seed", cfg.seed}});
  }
  return kExitOk;
}

int cmd_irfil(const Config& cfg) {
  const ResolvedData resolved = resolve_dataset(cfg);
  const fil::Dataset& ds = resolved.data;

  fil::IrfilOptions options;
  options.iterations = cfg.irfil.iterations;
  options.cv_stop = cfg.irfil.cv_stop;
  options.grad_tol = cfg.grad_tol;
  options.eta_attribute = cfg.irfil.eta_attribute;

  const fil::IrfilTrace trace =
      fil::run_irfil(ds, cfg.loss, cfg.lambda, cfg.sigma, cfg.seed, options);

  Sink sink(cfg.output);
  fil::JsonLinesWriter writer(*sink.stream, make_manifest("irfil", cfg));
  for (const fil::IrfilIteration& it : trace.iterations) {
    writer.write({{"record", "iteration"},
                  {"iteration", it.iteration},
                  {"eta_mean", it.eta_mean},
                  {"eta_std", it.eta_std},
                  {"eta_cv", it.eta_cv},
                  {"weights",
                   {{"sum", it.weights.sum()},
                    {"min", it.weights.minCoeff()},
                    {"max", it.weights.maxCoeff()},
                    {"digest", fil::vector_digest(it.weights)}}}});
  }
  nlohmann::json released{
      {"record", "released"},
      {"w", vector_to_json(trace.released.w_released)},
      {"sigma", trace.released.sigma},
      {"noise_seed", trace.released.seed},
      {"stopped_early", trace.stopped_early},
      {"train_accuracy", fil::accuracy(trace.final_params, ds)},
      {"train_mse", fil::mean_squared_error(trace.final_params, ds)}};
  if (resolved.test.has_value()) {
    released["test_accuracy"] =
        fil::accuracy(trace.final_params, *resolved.test);
    released["test_mse"] =
        fil::mean_squared_error(trace.final_params, *resolved.test);
  }
  writer.write(released);
  return kExitOk;
}

int cmd_attack(const Config& cfg) {
  const ResolvedData resolved = resolve_dataset(cfg);
  const fil::Dataset& ds = resolved.data;

  std::string attribute = cfg.attack.attribute;
  if (attribute.empty()) attribute = resolved.attack_attribute;
  if (attribute.empty()) {
    throw ConfigError(
        "config.attack.attribute: no attribute named and the dataset "
        "declares none");
  }
  const fil::AttributeGroup& group = ds.group(attribute);
  if (group.categories.empty()) {
    throw ConfigError("config.attack.attribute: '" + attribute +
                      "' is not a nominal column");
  }

  std::vector<int> truth = resolved.true_category;
  if (truth.empty()) {
    truth.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
      truth[i] = static_cast<int>(fil::decode_category(ds, group, i));
    }
  }

  fil::AttackConfig attack;
  attack.kind = fil::attack_kind_from_string(cfg.attack.kind);
  attack.attribute = attribute;
  attack.trials = cfg.attack.trials;
  attack.sigma = cfg.sigma;
  attack.seed = cfg.seed;

  const fil::TrainConfig victim = train_config(cfg);
  const fil::AttackResult result =
      fil::evaluate_attack(ds, victim, attack, truth);

  Sink sink(cfg.output);
  fil::JsonLinesWriter writer(*sink.stream, make_manifest("attack", cfg));
  const auto result_record = [](const fil::AttackResult& r,
                                const std::string& phase) {
    nlohmann::json deciles = nlohmann::json::array();
    for (const fil::DecileRow& row : r.deciles) {
      deciles.push_back({{"decile", row.decile},
                         {"eta_low", row.eta_low},
                         {"eta_high", row.eta_high},
                         {"accuracy", row.accuracy},
                         {"count", row.count}});
    }
    return nlohmann::json{{"record", "attack_result"},
                          {"phase", phase},
                          {"attack", fil::to_string(r.kind)},
                          {"sigma", r.sigma},
                          {"trials", r.trials},
                          {"seed", r.seed},
                          {"accuracy_mean", r.accuracy_mean},
                          {"accuracy_std", r.accuracy_std},
                          {"baseline_accuracy", r.baseline_accuracy},
                          {"failures", r.failures.size()},
                          {"deciles", std::move(deciles)}};
  };
  writer.write(result_record(result, "initial"));

  if (cfg.attack.irfil_iterations > 0) {
    fil::IrfilOptions options;
    options.iterations = cfg.attack.irfil_iterations;
    options.eta_attribute = attribute;
    const fil::IrfilTrace trace =
        fil::run_irfil(ds, cfg.loss, cfg.lambda, cfg.sigma, cfg.seed, options);
    fil::TrainConfig reweighted = victim;
    reweighted.weights = trace.final_params.weights;
    // Deciles stay pinned to the initial model's attribute-level etas.
    const fil::AttackResult after = fil::evaluate_attack(
        ds, reweighted, attack, truth, &result.attribute_eta);
    writer.write(result_record(after, "post_irfil"));
  }
  return kExitOk;
}

int cmd_validate(const Config& cfg) {
  const ResolvedData resolved = resolve_dataset(cfg);
  const std::vector<fil::DiagnosticRow> rows = fil::validate_model(
      resolved.data, train_config(cfg), cfg.sigma, cfg.seed);

  Sink sink(cfg.output);
  fil::JsonLinesWriter writer(*sink.stream, make_manifest("validate", cfg));
  int failed = 0;
  for (const fil::DiagnosticRow& row : rows) {
    if (!row.pass) ++failed;
    writer.write({{"record", "diagnostic"},
                  {"check", row.check},
                  {"analytic", row.analytic},
                  {"oracle", row.oracle_value},
                  {"relative_error", row.relative_error},
                  {"tolerance", row.tolerance},
                  {"pass", row.pass}});
  }
  writer.write(
      {{"record", "summary"}, {"checks", rows.size()}, {"failed", failed}});
  std::cerr << (rows.size() - static_cast<std::size_t>(failed)) << "/"
            << rows.size() << " oracle checks passed\n";
  return failed == 0 ? kExitOk : kExitNumerical;
}

int cmd_scatter(const Config& cfg) {
  const ResolvedData resolved = resolve_dataset(cfg);
  const fil::Dataset& ds = resolved.data;
  const fil::ModelParams params = fil::fit(ds, train_config(cfg));
  fil::MinimizerJacobian jac(ds, params);

  const Eigen::VectorXd etas = jac.all_example_etas(cfg.sigma);
  Eigen::VectorXd losses(static_cast<Eigen::Index>(ds.size()));
  Eigen::VectorXd grad_norms(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Eigen::VectorXd x = ds.X.row(static_cast<Eigen::Index>(i));
    const double y = ds.y[static_cast<Eigen::Index>(i)];
    losses[static_cast<Eigen::Index>(i)] =
        fil::loss_value(cfg.loss, params.w, x, y);
    grad_norms[static_cast<Eigen::Index>(i)] =
        fil::loss_gradient_w(cfg.loss, params.w, x, y).norm();
  }

  Sink sink(cfg.output);
  fil::JsonLinesWriter writer(*sink.stream, make_manifest("scatter", cfg));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    writer.write({{"record", "scatter"},
                  {"index", i},
                  {"eta", etas[static_cast<Eigen::Index>(i)]},
                  {"loss", losses[static_cast<Eigen::Index>(i)]},
                  {"grad_norm", grad_norms[static_cast<Eigen::Index>(i)]}});
  }
  writer.write({{"record", "summary"},
                {"spearman_eta_loss", fil::spearman_correlation(etas, losses)},
                {"spearman_eta_grad_norm",
                 fil::spearman_correlation(etas, grad_norms)}});
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "filaudit: Fisher-information leakage auditing for linear and "
      "logistic regression"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");

  // Flag overrides, applied after the config file loads.
  std::optional<std::uint64_t> seed;
  std::optional<double> sigma, lambda;
  std::optional<std::string> output, loss, granularity, attribute, attack_kind;
  std::optional<int> irfil_iters, trials;
  std::optional<unsigned> threads;
  app.add_option("--seed", seed, "root seed for all randomness");
  app.add_option("--sigma", sigma, "Gaussian noise scale");
  app.add_option("--lambda", lambda, "L2 regularization (per-example)");
  app.add_option("--loss", loss, "squared | logistic");
  app.add_option("--output", output,
                 "output path for JSON lines ('-' = stdout)");
  app.add_option("--threads", threads, "worker pool cap");
  app.add_option("--irfil-iters", irfil_iters, "reweighting iterations");
  app.add_option("--trials", trials, "attack trials");
  app.add_option("--granularity", granularity,
                 "audit granularity: example | attribute | full");
  app.add_option("--attribute", attribute, "attack target attribute");
  app.add_option("--attack-kind", attack_kind,
                 "whitebox | blackbox | baseline");

  CLI::App* audit = app.add_subcommand("audit", "train and report eta");
  CLI::App* irfil = app.add_subcommand("irfil", "equalize per-example eta");
  CLI::App* attack = app.add_subcommand("attack", "attribute inversion");
  CLI::App* validate =
      app.add_subcommand("validate", "oracle-vs-analytic diagnostics");
  CLI::App* scatter =
      app.add_subcommand("scatter", "eta vs loss and gradient norm");
  for (CLI::App* sub : {audit, irfil, attack, validate, scatter}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    nlohmann::json raw = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file: " + config_path);
      try {
        in >> raw;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file is not valid JSON: " +
                          std::string(e.what()));
      }
    }
    Config cfg = parse_config(raw);
    if (seed) cfg.seed = *seed;
    if (sigma) cfg.sigma = *sigma;
    if (lambda) cfg.lambda = *lambda;
    if (loss) cfg.loss = fil::loss_kind_from_string(*loss);
    if (output) cfg.output = *output;
    if (threads) cfg.threads = *threads;
    if (irfil_iters) cfg.irfil.iterations = *irfil_iters;
    if (trials) cfg.attack.trials = *trials;
    if (granularity) cfg.audit.granularity = *granularity;
    if (attribute) cfg.attack.attribute = *attribute;
    if (attack_kind) cfg.attack.kind = *attack_kind;
    validate_config(cfg);
    cfg.echo = config_echo(cfg);
    if (cfg.threads > 0) fil::set_max_threads(cfg.threads);

    if (audit->parsed()) return cmd_audit(cfg);
    if (irfil->parsed()) return cmd_irfil(cfg);
    if (attack->parsed()) return cmd_attack(cfg);
    if (validate->parsed()) return cmd_validate(cfg);
    if (scatter->parsed()) return cmd_scatter(cfg);
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fil::ConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fil::PowerIterationError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
