#pragma once

// Monte Carlo studies comparing the fully Bayes correction, the pseudo
// posterior and an SRS baseline.
//
// Every replicate is a pure function of (scenario, replicate id): the seed of
// replicate r is base_seed + r and all sub-streams are derived from it.
// Results are merged by replicate index, so the tables do not depend on the
// number of workers.

#include "isamp/designs.hpp"
#include "isamp/model.hpp"
#include "isamp/rng.hpp"
#include "isamp/sampler.hpp"
#include "isamp/splines.hpp"
#include "isamp/types.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace isamp {

enum class ScenarioKind { slr_skewed, slr_symmetric, nonlinear, weights_only };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::slr_skewed: return "slr-skewed";
    case ScenarioKind::slr_symmetric: return "slr-symmetric";
    case ScenarioKind::nonlinear: return "nonlinear";
    case ScenarioKind::weights_only: return "weights-only";
  }
  return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
  if (s == "slr-skewed" || s == "slr_skewed") return ScenarioKind::slr_skewed;
  if (s == "slr-symmetric" || s == "slr_symmetric") return ScenarioKind::slr_symmetric;
  if (s == "nonlinear") return ScenarioKind::nonlinear;
  if (s == "weights-only" || s == "weights_only") return ScenarioKind::weights_only;
  throw DomainError("unknown scenario: " + std::string(s));
}

/// Analyses compared in a study: full and pseudo on the informative sample,
/// the uncorrected model on the SRS.
enum class StudyMethod { full, pseudo, srs };

inline constexpr StudyMethod kStudyMethods[] = {StudyMethod::full, StudyMethod::pseudo,
                                                StudyMethod::srs};

inline std::string_view to_string(StudyMethod m) {
  switch (m) {
    case StudyMethod::full: return "full";
    case StudyMethod::pseudo: return "pseudo";
    case StudyMethod::srs: return "srs";
  }
  return "?";
}

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::slr_skewed;
  std::size_t N = 20000;
  std::size_t n = 500;
  double b_pi_true = 2.0;
  int M = 200;
  std::uint64_t base_seed = 17;
  ChainConfig chain{};
  int spline_b = 8;
  int spline_k = 4;
  int threads = 0;  // 0: ISAMP_THREADS, else hardware concurrency
};

inline void validate(const ScenarioConfig& s) {
  require(s.n < s.N, "ScenarioConfig: need n < N");
  require(s.n >= 3, "ScenarioConfig: need n >= 3");
  require(s.M >= 1, "ScenarioConfig: need M >= 1");
  require(s.kind != ScenarioKind::slr_skewed || s.b_pi_true > 0.0,
          "ScenarioConfig: b_pi_true must be > 0");
  validate(s.chain);
}

struct ReplicateResult {
  StudyMethod method = StudyMethod::full;
  double point_estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool covered = false;
  double ci_length = 0.0;
};

struct MethodMetrics {
  StudyMethod method = StudyMethod::full;
  double bias = 0.0;
  double mse = 0.0;
  double coverage_95 = 0.0;
  double avg_ci_length = 0.0;
};

struct MetricsTable {
  ScenarioKind kind = ScenarioKind::slr_skewed;
  std::size_t N = 0;
  std::size_t n = 0;
  int M = 0;
  int failed = 0;
  double truth = 0.0;
  std::vector<MethodMetrics> methods;

  const MethodMetrics& at(StudyMethod m) const {
    for (const auto& row : methods) {
      if (row.method == m) return row;
    }
    throw DomainError("MetricsTable: method missing");
  }
};

struct CurveMethodMetrics {
  StudyMethod method = StudyMethod::full;
  std::vector<double> mean_fit;
  std::vector<double> bias;
  std::vector<double> mse;
  std::vector<double> coverage;
  std::vector<double> avg_ci_length;

  double mean_coverage() const;
};

struct CurveMetrics {
  std::size_t N = 0;
  std::size_t n = 0;
  int M = 0;
  int failed = 0;
  std::vector<double> grid;
  std::vector<double> truth;
  std::vector<CurveMethodMetrics> methods;

  const CurveMethodMetrics& at(StudyMethod m) const {
    for (const auto& row : methods) {
      if (row.method == m) return row;
    }
    throw DomainError("CurveMetrics: method missing");
  }
};

/// Failed replicates above this fraction abort a study.
inline constexpr double kMaxFailedFraction = 0.05;

class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Numerics helpers

/// Neumaier-compensated sum, evaluated in index order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      c_ += (sum_ - t) + v;
    } else {
      c_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

inline double CurveMethodMetrics::mean_coverage() const {
  CompensatedSum s;
  for (double c : coverage) s.add(c);
  return coverage.empty() ? 0.0 : s.value() / static_cast<double>(coverage.size());
}

/// Grid x = 0, 1/40, ..., 80/40.
inline std::vector<double> curve_grid() {
  std::vector<double> g(81);
  for (int i = 0; i <= 80; ++i) g[static_cast<std::size_t>(i)] = i / 40.0;
  return g;
}

/// Worker count: explicit request, else ISAMP_THREADS, else hardware concurrency.
inline int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ISAMP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs task(i) for i in [0, count) on a pool of `workers` threads.
inline void parallel_for(int count, int workers, const std::function<void(int)>& task) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < count; i = next++) task(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---------------------------------------------------------------------------
// Fitting

struct Fit {
  Draws draws;
  int attempts = 0;
};

/// Samples the posterior from a jittered start; on initialization or
/// numerical failure retries once from a fresh start. Returns nullopt when
/// both attempts fail.
inline std::optional<Fit> fit_posterior(const Posterior& post, ChainConfig chain,
                                        std::uint64_t seed) {
  const LogDensityFn density = [&post](const Vector& q, Vector& g) {
    return post.log_density(q, g);
  };
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(Stream::retry));
    chain.seed = s;
    try {
      const Vector init = jittered_init(post.dim(), chain.init_jitter, s);
      Fit fit{run_hmc(density, init, chain, post.layout().names), attempt + 1};
      return fit;
    } catch (const InitializationError&) {
    } catch (const NumericalError&) {
    }
  }
  return std::nullopt;
}

inline ReplicateResult score_draws(StudyMethod method, const std::vector<double>& target,
                                   double truth) {
  const ParamSummary s = summarize_column("target", target);
  ReplicateResult r;
  r.method = method;
  r.point_estimate = s.mean;
  r.ci_low = s.q025;
  r.ci_high = s.q975;
  r.ci_length = r.ci_high - r.ci_low;
  r.covered = r.ci_low <= truth && truth <= r.ci_high;
  return r;
}

namespace detail {

inline Dataset slr_dataset(const Population& pop, const SampleIndex& s) {
  Dataset data;
  data.reserve(s.indices.size());
  for (std::size_t i : s.indices) {
    Observation obs;
    obs.y = pop.y[i];
    obs.log_pi = std::log(pop.pi_raw[i]);
    obs.x_y = Vector(2);
    obs.x_y << 1.0, pop.x(static_cast<Eigen::Index>(i), 0);
    obs.x_pi = Vector::Ones(1);
    data.push_back(std::move(obs));
  }
  return data;
}

struct SplineSample {
  Dataset data;
  SplineBasis basis;
};

inline SplineSample spline_dataset(const Population& pop, const SampleIndex& s, int b, int k) {
  std::vector<double> xs;
  xs.reserve(s.indices.size());
  for (std::size_t i : s.indices) xs.push_back(pop.x(static_cast<Eigen::Index>(i), 0));
  SplineSample out{{}, build_basis(xs, b, 3, k)};
  out.data.reserve(s.indices.size());
  for (std::size_t j = 0; j < s.indices.size(); ++j) {
    const std::size_t i = s.indices[j];
    Observation obs;
    obs.y = pop.y[i];
    obs.log_pi = std::log(pop.pi_raw[i]);
    obs.x_y = eval_row(out.basis, xs[j]);
    obs.x_pi = Vector::Ones(1);
    out.data.push_back(std::move(obs));
  }
  return out;
}

inline Stream fit_stream(StudyMethod m) {
  switch (m) {
    case StudyMethod::full: return Stream::fit_full;
    case StudyMethod::pseudo: return Stream::fit_pseudo;
    case StudyMethod::srs: return Stream::fit_srs;
  }
  return Stream::fit_full;
}

inline Method analysis_method(StudyMethod m) {
  switch (m) {
    case StudyMethod::full: return Method::full;
    case StudyMethod::pseudo: return Method::pseudo;
    case StudyMethod::srs: return Method::ignore;
  }
  return Method::full;
}

}  // namespace detail

inline std::uint64_t replicate_seed(const ScenarioConfig& s, int replicate_id) {
  return s.base_seed + static_cast<std::uint64_t>(replicate_id);
}

/// Samples and fits one SLR replicate on a given population: one PPS and one
/// SRS sample, three fits, each scored on the slope beta_1 against `truth`.
/// Returns an empty list when a fit fails twice.
inline std::vector<ReplicateResult> run_replicate_on(const ScenarioConfig& scenario,
                                                     const Population& pop, int replicate_id,
                                                     double truth = kSlrBeta1) {
  const std::uint64_t seed = replicate_seed(scenario, replicate_id);
  const SampleIndex is =
      pps_sample(pop.pi_raw, scenario.n,
                 derive_seed(seed, static_cast<std::uint64_t>(Stream::informative_sample)));
  const SampleIndex srs =
      srs_sample(pop.size(), scenario.n,
                 derive_seed(seed, static_cast<std::uint64_t>(Stream::simple_random_sample)));
  const Dataset is_data = detail::slr_dataset(pop, is);
  const Dataset srs_data = detail::slr_dataset(pop, srs);

  std::vector<ReplicateResult> out;
  for (StudyMethod m : kStudyMethods) {
    const Method method = detail::analysis_method(m);
    const ParamLayout layout = make_layout(ModelKind::linear, method, 2, 1);
    const Posterior post(m == StudyMethod::srs ? srs_data : is_data, layout);
    const auto fit = fit_posterior(
        post, scenario.chain, derive_seed(seed, static_cast<std::uint64_t>(detail::fit_stream(m))));
    if (!fit) return {};
    std::vector<double> slope(static_cast<std::size_t>(fit->draws.values.rows()));
    for (Eigen::Index i = 0; i < fit->draws.values.rows(); ++i) {
      slope[static_cast<std::size_t>(i)] = fit->draws.values(i, layout.beta + 1);
    }
    out.push_back(score_draws(m, slope, truth));
  }
  return out;
}

/// One SLR replicate: a fresh population from the replicate seed, then
/// run_replicate_on.
inline std::vector<ReplicateResult> run_replicate(const ScenarioConfig& scenario,
                                                  int replicate_id) {
  validate(scenario);
  require(scenario.kind == ScenarioKind::slr_skewed || scenario.kind == ScenarioKind::slr_symmetric,
          "run_replicate: SLR scenario required (use run_curve_replicate for nonlinear)");
  const Population pop =
      gen_slr_population(scenario.N, scenario.b_pi_true,
                         scenario.kind == ScenarioKind::slr_symmetric,
                         replicate_seed(scenario, replicate_id));
  return run_replicate_on(scenario, pop, replicate_id);
}

/// Bias, MSE, coverage and mean CI length of per-replicate results.
inline MethodMetrics aggregate(StudyMethod method, const std::vector<ReplicateResult>& rows,
                               double truth) {
  CompensatedSum err, sq, cov, len;
  for (const auto& r : rows) {
    const double e = r.point_estimate - truth;
    err.add(e);
    sq.add(e * e);
    cov.add(r.covered ? 1.0 : 0.0);
    len.add(r.ci_length);
  }
  const auto m = static_cast<double>(rows.size());
  MethodMetrics out;
  out.method = method;
  out.bias = err.value() / m;
  out.mse = sq.value() / m;
  out.coverage_95 = cov.value() / m;
  out.avg_ci_length = len.value() / m;
  return out;
}

/// Runs all replicates of an SLR scenario on the worker pool.
inline MetricsTable run_study(const ScenarioConfig& scenario) {
  validate(scenario);
  std::vector<std::vector<ReplicateResult>> results(static_cast<std::size_t>(scenario.M));
  parallel_for(scenario.M, worker_count(scenario.threads), [&](int r) {
    results[static_cast<std::size_t>(r)] = run_replicate(scenario, r);
  });

  MetricsTable table;
  table.kind = scenario.kind;
  table.N = scenario.N;
  table.n = scenario.n;
  table.M = scenario.M;
  table.truth = kSlrBeta1;
  for (const auto& r : results) {
    if (r.empty()) ++table.failed;
  }
  if (table.failed > kMaxFailedFraction * scenario.M) {
    throw StudyError("run_study: " + std::to_string(table.failed) + " of " +
                     std::to_string(scenario.M) + " replicates failed");
  }
  for (StudyMethod m : kStudyMethods) {
    std::vector<ReplicateResult> rows;
    for (const auto& r : results) {
      for (const auto& row : r) {
        if (row.method == m) rows.push_back(row);
      }
    }
    table.methods.push_back(aggregate(m, rows, table.truth));
  }
  return table;
}

/// Pointwise posterior mean and central 95% interval of one fitted curve.
struct CurveFit {
  StudyMethod method = StudyMethod::full;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Posterior of B(x) beta on `grid`, quantiled per grid point.
inline CurveFit curve_from_draws(StudyMethod method, const Draws& draws, const ParamLayout& layout,
                                 const SplineBasis& basis, const std::vector<double>& grid) {
  const Matrix design = design_matrix(basis, grid);
  const Matrix beta = draws.values.middleCols(layout.beta, basis.b);
  const Matrix fitted = beta * design.transpose();  // draws x grid
  CurveFit out;
  out.method = method;
  std::vector<double> column(static_cast<std::size_t>(fitted.rows()));
  for (Eigen::Index g = 0; g < fitted.cols(); ++g) {
    for (Eigen::Index d = 0; d < fitted.rows(); ++d) column[static_cast<std::size_t>(d)] = fitted(d, g);
    const ParamSummary s = summarize_column("curve", column);
    out.mean.push_back(s.mean);
    out.lo.push_back(s.q025);
    out.hi.push_back(s.q975);
  }
  return out;
}

/// One replicate of the nonlinear scenario on a fixed population: cubic
/// spline fits (full, pseudo on PPS; uncorrected on SRS) evaluated on the grid.
inline std::vector<CurveFit> run_curve_replicate(const ScenarioConfig& scenario,
                                                 const Population& pop, int replicate_id) {
  const std::uint64_t seed = replicate_seed(scenario, replicate_id);
  const SampleIndex is =
      pps_sample(pop.pi_raw, scenario.n,
                 derive_seed(seed, static_cast<std::uint64_t>(Stream::informative_sample)));
  const SampleIndex srs =
      srs_sample(pop.size(), scenario.n,
                 derive_seed(seed, static_cast<std::uint64_t>(Stream::simple_random_sample)));
  const auto is_sample = detail::spline_dataset(pop, is, scenario.spline_b, scenario.spline_k);
  const auto srs_sample_ = detail::spline_dataset(pop, srs, scenario.spline_b, scenario.spline_k);
  const auto grid = curve_grid();

  std::vector<CurveFit> out;
  for (StudyMethod m : kStudyMethods) {
    const auto& sample = m == StudyMethod::srs ? srs_sample_ : is_sample;
    const ParamLayout layout = make_layout(ModelKind::spline, detail::analysis_method(m),
                                           scenario.spline_b, 1, scenario.spline_b,
                                           scenario.spline_k);
    const Posterior post(sample.data, layout, sample.basis.Q);
    const auto fit = fit_posterior(
        post, scenario.chain, derive_seed(seed, static_cast<std::uint64_t>(detail::fit_stream(m))));
    if (!fit) return {};
    out.push_back(curve_from_draws(m, fit->draws, layout, sample.basis, grid));
  }
  return out;
}

/// Nonlinear scenario: one population (from base_seed), M replicates,
/// pointwise bias/MSE/coverage/CI length against x + 2 - 0.5 x^2.
inline CurveMetrics run_curve_study(const ScenarioConfig& scenario) {
  validate(scenario);
  require(scenario.kind == ScenarioKind::nonlinear, "run_curve_study: nonlinear scenario required");
  const Population pop = gen_nonlinear_population(scenario.N, scenario.base_seed);
  std::vector<std::vector<CurveFit>> results(static_cast<std::size_t>(scenario.M));
  parallel_for(scenario.M, worker_count(scenario.threads), [&](int r) {
    results[static_cast<std::size_t>(r)] = run_curve_replicate(scenario, pop, r);
  });

  CurveMetrics out;
  out.N = scenario.N;
  out.n = scenario.n;
  out.M = scenario.M;
  out.grid = curve_grid();
  for (double x : out.grid) out.truth.push_back(nonlinear_truth(x));
  for (const auto& r : results) {
    if (r.empty()) ++out.failed;
  }
  if (out.failed > kMaxFailedFraction * scenario.M) {
    throw StudyError("run_curve_study: " + std::to_string(out.failed) + " of " +
                     std::to_string(scenario.M) + " replicates failed");
  }
  const std::size_t G = out.grid.size();
  for (std::size_t mi = 0; mi < std::size(kStudyMethods); ++mi) {
    CurveMethodMetrics row;
    row.method = kStudyMethods[mi];
    for (std::size_t g = 0; g < G; ++g) {
      std::vector<ReplicateResult> point;
      for (const auto& r : results) {
        if (r.empty()) continue;
        const CurveFit& c = r[mi];
        ReplicateResult rr;
        rr.method = row.method;
        rr.point_estimate = c.mean[g];
        rr.ci_low = c.lo[g];
        rr.ci_high = c.hi[g];
        rr.ci_length = c.hi[g] - c.lo[g];
        rr.covered = c.lo[g] <= out.truth[g] && out.truth[g] <= c.hi[g];
        point.push_back(rr);
      }
      const MethodMetrics mm = aggregate(row.method, point, out.truth[g]);
      CompensatedSum fit_sum;
      for (const auto& p : point) fit_sum.add(p.point_estimate);
      row.mean_fit.push_back(fit_sum.value() / static_cast<double>(point.size()));
      row.bias.push_back(mm.bias);
      row.mse.push_back(mm.mse);
      row.coverage.push_back(mm.coverage_95);
      row.avg_ci_length.push_back(mm.avg_ci_length);
    }
    out.methods.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distribution of inclusion probabilities

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double density = 0.0;  // count / (n * width)
};

struct DensityPoint {
  double x = 0.0;
  double true_density = 0.0;
  double fitted_density = 0.0;
};

struct WeightDistResult {
  Summary summary;  // kappa, sigma_pi2 (posterior of the pi-model on log scale)
  std::vector<double> kappa_draws;
  std::vector<double> sigma_pi2_draws;
  std::vector<double> sample_log_pi;
  std::vector<HistogramBin> histogram;
  std::vector<DensityPoint> density;
  double true_kappa = 0.0;
  double true_sigma_pi2 = 1.0;
};

inline std::vector<HistogramBin> histogram(const std::vector<double>& v, int bins) {
  require(!v.empty() && bins > 0, "histogram: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi <= lo) hi = lo + 1.0;
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[static_cast<std::size_t>(b)].lo = lo + b * width;
    out[static_cast<std::size_t>(b)].hi = lo + (b + 1) * width;
  }
  for (double x : v) {
    const int b = std::min(bins - 1, static_cast<int>((x - lo) / width));
    ++out[static_cast<std::size_t>(b)].count;
  }
  for (auto& bin : out) {
    bin.density = static_cast<double>(bin.count) / (static_cast<double>(v.size()) * width);
  }
  return out;
}

/// Fits the pi-only model to a PPS sample of n lognormal(0, 1) sizes out of
/// N (n == N takes the census). All sizes are multiplied by `scale`, which
/// shifts kappa by log(scale).
inline WeightDistResult run_weight_dist_experiment(std::size_t N, std::size_t n,
                                                   std::uint64_t seed, ChainConfig chain = {},
                                                   double scale = 1.0) {
  require(n >= 2 && n <= N, "run_weight_dist_experiment: need 2 <= n <= N");
  require(scale > 0.0, "run_weight_dist_experiment: scale must be > 0");
  Population pop = gen_lognormal_sizes(N, 0.0, 1.0, seed);
  for (auto& p : pop.pi_raw) p *= scale;
  SampleIndex sample;
  if (n == N) {
    sample.indices.resize(N);
    std::iota(sample.indices.begin(), sample.indices.end(), std::size_t{0});
  } else {
    sample = pps_sample(pop.pi_raw, n,
                        derive_seed(seed, static_cast<std::uint64_t>(Stream::informative_sample)));
  }

  WeightDistResult out;
  out.true_kappa = std::log(scale);
  Dataset data;
  for (std::size_t i : sample.indices) {
    Observation obs;
    obs.log_pi = std::log(pop.pi_raw[i]);
    obs.x_y = Vector::Ones(1);
    obs.x_pi = Vector::Ones(1);
    out.sample_log_pi.push_back(obs.log_pi);
    data.push_back(std::move(obs));
  }
  const ParamLayout layout = make_layout(ModelKind::weights_only, Method::full, 0, 1);
  const Posterior post(data, layout);
  const auto fit =
      fit_posterior(post, chain, derive_seed(seed, static_cast<std::uint64_t>(Stream::fit_full)));
  if (!fit) throw StudyError("run_weight_dist_experiment: sampler failed twice");

  const auto& values = fit->draws.values;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out.kappa_draws.push_back(values(i, layout.kappa_x));
    out.sigma_pi2_draws.push_back(std::exp(2.0 * values(i, layout.log_sigma_pi)));
  }
  out.summary.params.push_back(summarize_column("kappa", out.kappa_draws));
  out.summary.params.push_back(summarize_column("sigma_pi2", out.sigma_pi2_draws));

  out.histogram = histogram(out.sample_log_pi, 20);
  const double k_hat = out.summary.params[0].mean;
  const double v_hat = out.summary.params[1].mean;
  constexpr int kDensityPoints = 161;
  const double lo = out.true_kappa - 4.0;
  const double hi = out.true_kappa + 6.0;
  for (int i = 0; i < kDensityPoints; ++i) {
    const double x = lo + (hi - lo) * i / (kDensityPoints - 1);
    out.density.push_back({x, std::exp(log_normal_pdf(x, out.true_kappa, out.true_sigma_pi2)),
                           std::exp(log_normal_pdf(x, k_hat, v_hat))});
  }
  return out;
}

}  // namespace isamp
