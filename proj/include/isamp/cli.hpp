#pragma once

// Command implementations behind the `isamp` executable.

#include "isamp/harness.hpp"
#include "isamp/io.hpp"
#include "isamp/model.hpp"
#include "isamp/sampler.hpp"
#include "isamp/splines.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef ISAMP_VERSION
#define ISAMP_VERSION "0.1.0"
#endif

namespace isamp {

enum class Command { simulate_study, fit, weights_dist, emit_plot_data };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::simulate_study: return "simulate-study";
    case Command::fit: return "fit";
    case Command::weights_dist: return "weights-dist";
    case Command::emit_plot_data: return "emit-plot-data";
  }
  return "?";
}

inline Command parse_command(std::string_view s) {
  if (s == "simulate-study") return Command::simulate_study;
  if (s == "fit") return Command::fit;
  if (s == "weights-dist") return Command::weights_dist;
  if (s == "emit-plot-data") return Command::emit_plot_data;
  throw DomainError("unknown command: " + std::string(s));
}

struct RunConfig {
  Command command = Command::simulate_study;
  std::optional<ScenarioConfig> scenario;  // simulate-study, weights-dist (N, n, base_seed)
  std::optional<DatasetSpec> dataset;      // fit
  Method method = Method::full;
  ModelKind model = ModelKind::linear;
  ChainConfig chain{};
  int chains = 1;
  int spline_b = 8;
  int spline_k = 4;
  std::string output_dir;
  std::string run_dir;  // emit-plot-data
};

// ---------------------------------------------------------------------------
// JSON mirror of RunConfig

inline Json to_json(const ChainConfig& c) {
  return {{"n_warmup", c.n_warmup},         {"n_draws", c.n_draws},
          {"target_accept", c.target_accept}, {"max_leapfrog", c.max_leapfrog},
          {"seed", c.seed},                 {"init_jitter", c.init_jitter}};
}

inline ChainConfig chain_from_json(const Json& j, ChainConfig c = {}) {
  c.n_warmup = j.value("n_warmup", c.n_warmup);
  c.n_draws = j.value("n_draws", c.n_draws);
  c.target_accept = j.value("target_accept", c.target_accept);
  c.max_leapfrog = j.value("max_leapfrog", c.max_leapfrog);
  c.seed = j.value("seed", c.seed);
  c.init_jitter = j.value("init_jitter", c.init_jitter);
  return c;
}

inline Json to_json(const ScenarioConfig& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"N", s.N},
          {"n", s.n},
          {"b_pi_true", s.b_pi_true},
          {"M", s.M},
          {"base_seed", s.base_seed},
          {"spline_b", s.spline_b},
          {"spline_k", s.spline_k},
          {"threads", s.threads}};
}

inline ScenarioConfig scenario_from_json(const Json& j, ScenarioConfig s = {}) {
  if (j.contains("kind")) s.kind = parse_scenario_kind(j.at("kind").get<std::string>());
  s.N = j.value("N", s.N);
  s.n = j.value("n", s.n);
  s.b_pi_true = j.value("b_pi_true", s.b_pi_true);
  s.M = j.value("M", s.M);
  s.base_seed = j.value("base_seed", s.base_seed);
  s.spline_b = j.value("spline_b", s.spline_b);
  s.spline_k = j.value("spline_k", s.spline_k);
  s.threads = j.value("threads", s.threads);
  return s;
}

inline Json to_json(const DatasetSpec& d) {
  Json j{{"path", d.path},
         {"response_column", d.response_column},
         {"weight_column", d.weight_column},
         {"weight_kind", d.weight_kind == WeightKind::weight ? "weight" : "inclusion_prob"},
         {"y_covariates", d.y_covariates},
         {"pi_covariates", d.pi_covariates},
         {"categorical_columns", d.categorical_columns},
         {"log_columns", d.log_columns},
         {"categorical_in_y", d.categorical_in_y},
         {"categorical_in_pi", d.categorical_in_pi}};
  j["spline_column"] = d.spline_column ? Json(*d.spline_column) : Json(nullptr);
  return j;
}

inline DatasetSpec dataset_from_json(const Json& j, DatasetSpec d = {}) {
  d.path = j.value("path", d.path);
  d.response_column = j.value("response_column", d.response_column);
  d.weight_column = j.value("weight_column", d.weight_column);
  if (j.contains("weight_kind")) {
    const auto k = j.at("weight_kind").get<std::string>();
    require(k == "weight" || k == "inclusion_prob", "weight_kind must be weight or inclusion_prob");
    d.weight_kind = k == "weight" ? WeightKind::weight : WeightKind::inclusion_prob;
  }
  d.y_covariates = j.value("y_covariates", d.y_covariates);
  d.pi_covariates = j.value("pi_covariates", d.pi_covariates);
  d.categorical_columns = j.value("categorical_columns", d.categorical_columns);
  d.log_columns = j.value("log_columns", d.log_columns);
  d.categorical_in_y = j.value("categorical_in_y", d.categorical_in_y);
  d.categorical_in_pi = j.value("categorical_in_pi", d.categorical_in_pi);
  if (j.contains("spline_column") && !j.at("spline_column").is_null()) {
    d.spline_column = j.at("spline_column").get<std::string>();
  }
  return d;
}

inline Json to_json(const RunConfig& c) {
  Json j{{"command", std::string(to_string(c.command))},
         {"method", std::string(to_string(c.method))},
         {"model", std::string(to_string(c.model))},
         {"chain", to_json(c.chain)},
         {"chains", c.chains},
         {"spline_b", c.spline_b},
         {"spline_k", c.spline_k},
         {"output_dir", c.output_dir},
         {"run_dir", c.run_dir}};
  j["scenario"] = c.scenario ? to_json(*c.scenario) : Json(nullptr);
  j["dataset"] = c.dataset ? to_json(*c.dataset) : Json(nullptr);
  return j;
}

/// Reads a RunConfig JSON document; absent keys keep their defaults.
inline RunConfig run_config_from_json(const Json& j, RunConfig c = {}) {
  if (j.contains("command")) c.command = parse_command(j.at("command").get<std::string>());
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  if (j.contains("model")) c.model = parse_model_kind(j.at("model").get<std::string>());
  if (j.contains("chain")) c.chain = chain_from_json(j.at("chain"), c.chain);
  c.chains = j.value("chains", c.chains);
  c.spline_b = j.value("spline_b", c.spline_b);
  c.spline_k = j.value("spline_k", c.spline_k);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.run_dir = j.value("run_dir", c.run_dir);
  if (j.contains("scenario") && !j.at("scenario").is_null()) {
    c.scenario = scenario_from_json(j.at("scenario"), c.scenario.value_or(ScenarioConfig{}));
  }
  if (j.contains("dataset") && !j.at("dataset").is_null()) {
    c.dataset = dataset_from_json(j.at("dataset"), c.dataset.value_or(DatasetSpec{}));
  }
  return c;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Fitting a loaded survey dataset

struct DatasetFit {
  Summary summary;
  std::vector<double> curve_x;    // spline model only
  std::optional<CurveFit> curve;  // spline model only
  int divergences = 0;
};

/// Fits `model` under `method` with `chains` independent chains (seeds
/// derived from chain.seed). For the spline model the intercept column is
/// replaced by the b-dimensional basis of the spline column, and the curve
/// B(x) beta is reported on 81 points spanning that column with the other
/// covariates at zero.
inline DatasetFit fit_dataset(const LoadedDataset& loaded, ModelKind model, Method method,
                              const ChainConfig& chain, int chains = 1, int spline_b = 8,
                              int spline_k = 4) {
  require(chains >= 1, "fit_dataset: need at least one chain");
  require(model != ModelKind::weights_only, "fit_dataset: use weights-dist for the pi-only model");
  Dataset data = loaded.observations;
  std::vector<std::string> y_labels = loaded.y_names;
  std::optional<SplineBasis> basis;
  if (model == ModelKind::spline) {
    require(!loaded.spline_x.empty(), "fit_dataset: spline model needs a spline column");
    basis = build_basis(loaded.spline_x, spline_b, 3, spline_k);
    y_labels.clear();
    for (int j = 0; j < spline_b; ++j) y_labels.push_back("B" + std::to_string(j + 1));
    y_labels.insert(y_labels.end(), loaded.y_names.begin() + 1, loaded.y_names.end());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Vector row = eval_row(*basis, loaded.spline_x[i]);
      const Vector rest = data[i].x_y.tail(data[i].x_y.size() - 1);
      Vector x(row.size() + rest.size());
      x << row, rest;
      data[i].x_y = x;
    }
  }
  const int p = static_cast<int>(data.front().x_y.size());
  const int q = static_cast<int>(data.front().x_pi.size());
  const ParamLayout layout = model == ModelKind::spline
                                 ? make_layout(model, method, p, q, spline_b, spline_k)
                                 : make_layout(model, method, p, q);
  const Posterior post(data, layout, basis ? basis->Q : Matrix(), loaded.pi);

  std::vector<std::string> names = layout.names;
  for (int j = 0; j < layout.p; ++j) names[layout.beta + j] = "beta[" + y_labels[j] + "]";
  for (int j = 0; layout.has_kappa() && j < layout.q; ++j) {
    names[layout.kappa_x + j] = "kappa_x[" + loaded.pi_names[j] + "]";
  }

  std::vector<Draws> runs(static_cast<std::size_t>(chains));
  for (int c = 0; c < chains; ++c) {
    const auto fit = fit_posterior(post, chain, derive_seed(chain.seed, static_cast<std::uint64_t>(c)));
    if (!fit) throw StudyError("fit_dataset: sampler failed to initialize twice");
    runs[static_cast<std::size_t>(c)] = fit->draws;
  }

  Draws pooled = runs.front();
  for (std::size_t c = 1; c < runs.size(); ++c) {
    Matrix stacked(pooled.values.rows() + runs[c].values.rows(), pooled.values.cols());
    stacked << pooled.values, runs[c].values;
    pooled.values = std::move(stacked);
    pooled.divergence_count += runs[c].divergence_count;
  }
  const auto to_natural = [&layout](const Vector& u) { return constrain(layout, u); };

  DatasetFit out;
  out.summary = summarize(pooled, to_natural, names);
  out.divergences = pooled.divergence_count;
  if (chains > 1) {
    for (int j = 0; j < layout.dim; ++j) {
      std::vector<std::vector<double>> per_chain;
      for (const auto& r : runs) {
        std::vector<double> v;
        for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
          v.push_back(constrain(layout, r.values.row(i).transpose())[j]);
        }
        per_chain.push_back(std::move(v));
      }
      out.summary.params[static_cast<std::size_t>(j)].rhat = split_rhat(per_chain);
    }
  }
  if (basis) {
    for (int g = 0; g <= 80; ++g) {
      out.curve_x.push_back(basis->lower() + (basis->upper() - basis->lower()) * g / 80.0);
    }
    out.curve = curve_from_draws(StudyMethod::full, pooled, layout, *basis, out.curve_x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run files

inline Json weight_dist_to_json(const WeightDistResult& r) {
  Json j;
  j["type"] = "weights";
  j["summary"] = to_json(r.summary);
  for (const auto& b : r.histogram) {
    j["histogram"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}, {"density", b.density}});
  }
  for (const auto& d : r.density) {
    j["density"].push_back({{"x", d.x}, {"true", d.true_density}, {"fitted", d.fitted_density}});
  }
  return j;
}

inline WeightDistResult weight_dist_from_json(const Json& j) {
  WeightDistResult r;
  r.summary = summary_from_json(j.at("summary"));
  for (const auto& b : j.at("histogram")) {
    r.histogram.push_back({b.at("lo").get<double>(), b.at("hi").get<double>(),
                           b.at("count").get<std::size_t>(), b.at("density").get<double>()});
  }
  for (const auto& d : j.at("density")) {
    r.density.push_back({d.at("x").get<double>(), d.at("true").get<double>(),
                         d.at("fitted").get<double>()});
  }
  return r;
}

inline Json dataset_fit_to_json(const DatasetFit& f, Method method) {
  Json j;
  j["type"] = "fit";
  j["method"] = std::string(to_string(method));
  j["summary"] = to_json(f.summary);
  j["divergences"] = f.divergences;
  if (f.curve) {
    j["curve"] = {{"x", f.curve_x}, {"mean", f.curve->mean}, {"lo", f.curve->lo}, {"hi", f.curve->hi}};
  }
  return j;
}

/// Writes every plot/report CSV derivable from a stored result document.
inline ReportFiles write_result_files(const Json& result, const std::filesystem::path& dir) {
  const auto type = result.at("type").get<std::string>();
  if (type == "metrics") return write_report(metrics_from_json(result), dir);
  if (type == "curve") return write_report(curve_from_json(result), dir);
  if (type == "weights") return write_report(weight_dist_from_json(result), dir);
  if (type == "fit") {
    ReportFiles files = write_report(summary_from_json(result.at("summary")), dir);
    if (result.contains("curve")) {
      const auto& c = result.at("curve");
      CurveFit fit;
      fit.mean = c.at("mean").get<std::vector<double>>();
      fit.lo = c.at("lo").get<std::vector<double>>();
      fit.hi = c.at("hi").get<std::vector<double>>();
      const auto path = dir / ("curve_" + result.at("method").get<std::string>() + ".csv");
      write_file_atomic(path, curve_fit_csv(c.at("x").get<std::vector<double>>(), fit));
      files.push_back(path);
    }
    return files;
  }
  throw IoError("unknown result type in run file: " + type);
}

inline void write_run_json(const std::filesystem::path& dir, const RunConfig& config,
                           const Json& result, double wall_seconds) {
  Json j;
  j["version"] = ISAMP_VERSION;
  j["command"] = std::string(to_string(config.command));
  j["config"] = to_json(config);
  j["seeds"] = {{"base_seed", config.scenario ? config.scenario->base_seed : 0},
                {"chain_seed", config.chain.seed}};
  j["wall_time_seconds"] = wall_seconds;
  j["result"] = result;
  write_file_atomic(dir / "run.json", j.dump(2) + "\n");
}

/// Executes one command. Returns 0 on success; diagnostics go to `err`.
inline int run_command(const RunConfig& config, std::ostream& err = std::cerr) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    if (config.command == Command::emit_plot_data) {
      require(!config.run_dir.empty(), "emit-plot-data needs --run DIR");
      const Json run = read_json_file(std::filesystem::path(config.run_dir) / "run.json");
      const std::filesystem::path out = config.output_dir.empty() ? config.run_dir : config.output_dir;
      ensure_directory(out);
      write_result_files(run.at("result"), out);
      return 0;
    }
    require(!config.output_dir.empty(), std::string(to_string(config.command)) + " needs --out DIR");
    const std::filesystem::path out = config.output_dir;
    ensure_directory(out);
    Json result;
    switch (config.command) {
      case Command::simulate_study: {
        require(config.scenario.has_value(), "simulate-study needs a scenario");
        ScenarioConfig s = *config.scenario;
        s.chain = config.chain;
        if (s.kind == ScenarioKind::nonlinear) {
          result = to_json(run_curve_study(s));
        } else if (s.kind == ScenarioKind::weights_only) {
          result = weight_dist_to_json(run_weight_dist_experiment(s.N, s.n, s.base_seed, s.chain));
        } else {
          result = to_json(run_study(s));
        }
        break;
      }
      case Command::weights_dist: {
        require(config.scenario.has_value(), "weights-dist needs N, n and a seed");
        const auto& s = *config.scenario;
        result = weight_dist_to_json(run_weight_dist_experiment(s.N, s.n, s.base_seed, config.chain));
        break;
      }
      case Command::fit: {
        require(config.dataset.has_value(), "fit needs a dataset (--data)");
        const LoadedDataset loaded = load_dataset(*config.dataset);
        if (loaded.dropped_missing + loaded.dropped_weight > 0) {
          err << "fit: dropped " << loaded.dropped_missing << " rows with missing fields and "
              << loaded.dropped_weight << " rows with non-positive weight\n";
        }
        const DatasetFit fit = fit_dataset(loaded, config.model, config.method, config.chain,
                                           config.chains, config.spline_b, config.spline_k);
        result = dataset_fit_to_json(fit, config.method);
        result["dropped_missing"] = loaded.dropped_missing;
        result["dropped_weight"] = loaded.dropped_weight;
        break;
      }
      case Command::emit_plot_data: break;
    }
    write_result_files(result, out);
    write_run_json(out, config, result, elapsed());
    return 0;
  } catch (const std::exception& e) {
    err << "isamp " << to_string(config.command) << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace isamp
