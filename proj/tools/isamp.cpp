// isamp: simulation studies and survey fits under informative sampling.

#include "isamp/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

// Values of flags that were actually given on the command line; unset
// options leave the (config-file or default) RunConfig untouched.
struct Flags {
  std::string config;
  std::string scenario;
  double b_pi = 0.0;
  std::size_t N = 0;
  std::size_t n = 0;
  int M = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string run;
  std::string data;
  std::string model;
  std::string method;
  std::string response;
  std::string weight;
  std::string weight_kind;
  std::string spline_col;
  std::vector<std::string> covariates;
  std::vector<std::string> y_covariates;
  std::vector<std::string> pi_covariates;
  std::vector<std::string> categorical;
  std::vector<std::string> log_columns;
  int warmup = 0;
  int draws = 0;
  int chains = 0;
  int spline_b = 0;
  int spline_k = 0;
  double target_accept = 0.0;
  int max_leapfrog = 0;
};

bool given(const CLI::App* app, const std::string& name) {
  const CLI::Option* opt = app->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

void add_chain_flags(CLI::App* app, Flags& f) {
  app->add_option("--warmup", f.warmup, "warmup (adaptation) iterations per chain");
  app->add_option("--draws", f.draws, "retained draws per chain");
  app->add_option("--target-accept", f.target_accept, "dual-averaging target acceptance");
  app->add_option("--max-leapfrog", f.max_leapfrog, "leapfrog steps per iteration cap");
  app->add_option("--seed", f.seed, "base RNG seed");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--config", f.config, "JSON RunConfig; flags override it");
}

isamp::RunConfig build_config(const CLI::App* app, const Flags& f, isamp::Command command) {
  isamp::RunConfig c;
  if (!f.config.empty()) c = isamp::run_config_from_json(isamp::read_json_file(f.config));
  c.command = command;

  if (given(app, "--warmup")) c.chain.n_warmup = f.warmup;
  if (given(app, "--draws")) c.chain.n_draws = f.draws;
  if (given(app, "--target-accept")) c.chain.target_accept = f.target_accept;
  if (given(app, "--max-leapfrog")) c.chain.max_leapfrog = f.max_leapfrog;
  if (given(app, "--out")) c.output_dir = f.out;

  if (command == isamp::Command::simulate_study || command == isamp::Command::weights_dist) {
    isamp::ScenarioConfig s = c.scenario.value_or(isamp::ScenarioConfig{});
    if (command == isamp::Command::weights_dist && !c.scenario) {
      s.kind = isamp::ScenarioKind::weights_only;
      s.N = 100000;
      s.n = 100;
      s.base_seed = 1;
    }
    if (given(app, "--scenario")) s.kind = isamp::parse_scenario_kind(f.scenario);
    if (given(app, "--b-pi")) s.b_pi_true = f.b_pi;
    if (given(app, "--N")) s.N = f.N;
    if (given(app, "--n")) s.n = f.n;
    if (given(app, "--M")) s.M = f.M;
    if (given(app, "--seed")) s.base_seed = f.seed;
    if (given(app, "--threads")) s.threads = f.threads;
    if (given(app, "--spline-b")) s.spline_b = f.spline_b;
    if (given(app, "--spline-k")) s.spline_k = f.spline_k;
    c.scenario = s;
    c.chain.seed = s.base_seed;
  }

  if (command == isamp::Command::fit) {
    isamp::DatasetSpec d = c.dataset.value_or(isamp::DatasetSpec{});
    if (given(app, "--data")) d.path = f.data;
    if (given(app, "--response")) d.response_column = f.response;
    if (given(app, "--weight")) d.weight_column = f.weight;
    if (given(app, "--weight-kind")) {
      d = isamp::dataset_from_json(isamp::Json{{"weight_kind", f.weight_kind}}, d);
    }
    if (given(app, "--covariates")) {
      d.y_covariates = f.covariates;
      d.pi_covariates = f.covariates;
    }
    if (given(app, "--y-covariates")) d.y_covariates = f.y_covariates;
    if (given(app, "--pi-covariates")) d.pi_covariates = f.pi_covariates;
    if (given(app, "--categorical")) d.categorical_columns = f.categorical;
    if (given(app, "--log")) d.log_columns = f.log_columns;
    if (given(app, "--spline-col")) d.spline_column = f.spline_col;
    c.dataset = d;
    if (given(app, "--model")) c.model = isamp::parse_model_kind(f.model);
    if (given(app, "--method")) c.method = isamp::parse_method(f.method);
    if (given(app, "--chains")) c.chains = f.chains;
    if (given(app, "--spline-b")) c.spline_b = f.spline_b;
    if (given(app, "--spline-k")) c.spline_k = f.spline_k;
    if (given(app, "--seed")) c.chain.seed = f.seed;
  }

  if (command == isamp::Command::emit_plot_data && given(app, "--run")) c.run_dir = f.run;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian estimation under informative sampling designs", "isamp"};
  app.set_version_flag("--version", std::string(ISAMP_VERSION));
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate-study", "Monte Carlo study of full, pseudo and SRS estimators");
  sim->add_option("--scenario", f.scenario, "slr-skewed | slr-symmetric | nonlinear | weights-only");
  sim->add_option("--b-pi", f.b_pi, "gamma rate of the size variable (skewed scenario)");
  sim->add_option("--N", f.N, "population size");
  sim->add_option("--n", f.n, "sample size");
  sim->add_option("--M", f.M, "Monte Carlo replicates");
  sim->add_option("--threads", f.threads, "worker threads (0: ISAMP_THREADS or all cores)");
  sim->add_option("--spline-b", f.spline_b, "spline basis dimension (nonlinear scenario)");
  sim->add_option("--spline-k", f.spline_k, "difference-penalty order");
  add_chain_flags(sim, f);

  auto* fit = app.add_subcommand("fit", "Fit a model to a survey CSV file");
  fit->add_option("--data", f.data, "CSV file with a header row");
  fit->add_option("--model", f.model, "linear | probit | spline");
  fit->add_option("--method", f.method, "full | pseudo | ignore");
  fit->add_option("--response", f.response, "response column");
  fit->add_option("--weight", f.weight, "sampling weight column");
  fit->add_option("--weight-kind", f.weight_kind, "weight | inclusion_prob");
  fit->add_option("--covariates", f.covariates, "numeric covariates in both models")->delimiter(',');
  fit->add_option("--y-covariates", f.y_covariates, "numeric covariates of the outcome model")->delimiter(',');
  fit->add_option("--pi-covariates", f.pi_covariates, "numeric covariates of the size model")->delimiter(',');
  fit->add_option("--categorical", f.categorical, "categorical columns (dummy coded)")->delimiter(',');
  fit->add_option("--log", f.log_columns, "columns to log-transform")->delimiter(',');
  fit->add_option("--spline-col", f.spline_col, "column entering through the spline basis");
  fit->add_option("--chains", f.chains, "independent chains");
  fit->add_option("--spline-b", f.spline_b, "spline basis dimension");
  fit->add_option("--spline-k", f.spline_k, "difference-penalty order");
  add_chain_flags(fit, f);

  auto* wd = app.add_subcommand("weights-dist", "Estimate the size distribution from sample weights alone");
  wd->add_option("--N", f.N, "population size");
  wd->add_option("--n", f.n, "sample size");
  add_chain_flags(wd, f);

  auto* emit = app.add_subcommand("emit-plot-data", "Regenerate plot CSVs from a run directory");
  emit->add_option("--run", f.run, "run directory containing run.json")->required();
  emit->add_option("--out", f.out, "output directory (default: the run directory)");

  CLI11_PARSE(app, argc, argv);

  isamp::RunConfig config;
  try {
    if (sim->parsed()) config = build_config(sim, f, isamp::Command::simulate_study);
    if (fit->parsed()) config = build_config(fit, f, isamp::Command::fit);
    if (wd->parsed()) config = build_config(wd, f, isamp::Command::weights_dist);
    if (emit->parsed()) config = build_config(emit, f, isamp::Command::emit_plot_data);
  } catch (const std::exception& e) {
    std::cerr << "isamp: " << e.what() << "\n";
    return 2;
  }
  return isamp::run_command(config);
}
