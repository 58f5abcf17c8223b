#include "isamp/harness.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>

using namespace isamp;

namespace {

ChainConfig quick_chain() {
  ChainConfig c;
  c.n_warmup = 300;
  c.n_draws = 500;
  return c;
}

ScenarioConfig small_slr(int M) {
  ScenarioConfig s;
  s.N = 2000;
  s.n = 100;
  s.M = M;
  s.chain = quick_chain();
  s.threads = 1;
  return s;
}

}  // namespace

TEST(Grid, EightyOnePointsAtFortieths) {
  const auto g = curve_grid();
  ASSERT_EQ(g.size(), 81u);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i], static_cast<double>(i) / 40.0);
}

TEST(Aggregate, HandComputed) {
  std::vector<ReplicateResult> rows(2);
  rows[0].point_estimate = 1.5;
  rows[0].covered = true;
  rows[0].ci_length = 0.4;
  rows[1].point_estimate = 0.7;
  rows[1].covered = false;
  rows[1].ci_length = 0.2;
  const auto m = aggregate(StudyMethod::full, rows, 1.0);
  EXPECT_NEAR(m.bias, 0.1, 1e-15);
  EXPECT_NEAR(m.mse, (0.25 + 0.09) / 2.0, 1e-15);
  EXPECT_EQ(m.coverage_95, 0.5);
  EXPECT_NEAR(m.avg_ci_length, 0.3, 1e-15);
}

TEST(Aggregate, CompensatedSumIsOrderIndependent) {
  std::vector<double> v{1e16, 1.0, -1e16, 3.0, 1e-3, 7.5};
  CompensatedSum a, b;
  for (double x : v) a.add(x);
  for (auto it = v.rbegin(); it != v.rend(); ++it) b.add(*it);
  EXPECT_DOUBLE_EQ(a.value(), 11.501);
  EXPECT_EQ(b.value(), a.value());
}

TEST(Workers, EnvironmentCapsPool) {
  ::setenv("ISAMP_THREADS", "3", 1);
  EXPECT_EQ(worker_count(0), 3);
  EXPECT_EQ(worker_count(2), 2);
  ::unsetenv("ISAMP_THREADS");
  EXPECT_GE(worker_count(0), 1);
}

TEST(Workers, ParallelForVisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> seen(100);
  parallel_for(100, 4, [&](int i) { ++seen[static_cast<std::size_t>(i)]; });
  for (const auto& s : seen) EXPECT_EQ(s.load(), 1);
  EXPECT_THROW(parallel_for(10, 3, [](int i) {
                 if (i == 5) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

TEST(Replicate, SmokeAtDeskScale) {
  ScenarioConfig s;  // N = 2e4, n = 500
  s.chain = quick_chain();
  const auto r = run_replicate(s, 0);
  ASSERT_EQ(r.size(), 3u);
  for (const auto& row : r) {
    EXPECT_TRUE(std::isfinite(row.point_estimate));
    EXPECT_LE(row.ci_low, row.ci_high);
    EXPECT_DOUBLE_EQ(row.ci_length, row.ci_high - row.ci_low);
    EXPECT_LT(row.ci_length, 5.0);
  }
}

TEST(Replicate, Deterministic) {
  const auto s = small_slr(1);
  const auto a = run_replicate(s, 4);
  const auto b = run_replicate(s, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].point_estimate, b[i].point_estimate);
    EXPECT_EQ(a[i].ci_low, b[i].ci_low);
    EXPECT_EQ(a[i].ci_high, b[i].ci_high);
  }
  EXPECT_NE(run_replicate(s, 5)[0].point_estimate, a[0].point_estimate);
}

TEST(Replicate, NonInformativeDesign) {
  // y depends on x only, so PPS on pi carries no information about y.
  auto s = small_slr(40);
  int covered[3] = {0, 0, 0};
  int agree = 0;
  for (int r = 0; r < s.M; ++r) {
    Population pop = gen_slr_population(s.N, 2.0, false, replicate_seed(s, r));
    Rng rng = make_rng(replicate_seed(s, r), Stream::retry);
    std::normal_distribution<double> z(0.0, 0.1);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      pop.y[i] = pop.x(static_cast<Eigen::Index>(i), 0) + z(rng);
    }
    const auto rows = run_replicate_on(s, pop, r);
    ASSERT_EQ(rows.size(), 3u);
    for (int m = 0; m < 3; ++m) covered[m] += rows[static_cast<std::size_t>(m)].covered;
    // Posterior sd approximated from the central 95% interval.
    const double sd_full = rows[0].ci_length / 3.92;
    const double sd_srs = rows[2].ci_length / 3.92;
    agree += std::abs(rows[0].point_estimate - rows[2].point_estimate) <=
             3.0 * std::hypot(sd_full, sd_srs);
  }
  const double se = std::sqrt(0.95 * 0.05 / s.M);
  for (int m = 0; m < 3; ++m) {
    EXPECT_NEAR(covered[m] / static_cast<double>(s.M), 0.95, 3.0 * se) << "method " << m;
  }
  EXPECT_EQ(agree, s.M);
}

TEST(Study, SingleReplicateIdentities) {
  const auto t = run_study(small_slr(1));
  EXPECT_EQ(t.M, 1);
  EXPECT_EQ(t.failed, 0);
  ASSERT_EQ(t.methods.size(), 3u);
  for (const auto& m : t.methods) {
    EXPECT_NEAR(m.mse, m.bias * m.bias, 1e-15);
    EXPECT_TRUE(m.coverage_95 == 0.0 || m.coverage_95 == 1.0);
  }
}

TEST(Study, MetricsInvariantsAndWorkerIndependence) {
  auto s = small_slr(6);
  const auto one = run_study(s);
  s.threads = 3;
  const auto three = run_study(s);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = one.methods[i];
    const auto& b = three.methods[i];
    EXPECT_EQ(a.bias, b.bias);
    EXPECT_EQ(a.mse, b.mse);
    EXPECT_EQ(a.coverage_95, b.coverage_95);
    EXPECT_EQ(a.avg_ci_length, b.avg_ci_length);
    EXPECT_GE(a.mse, a.bias * a.bias * (1.0 - 1.0 / 6.0) - 1e-15);
    EXPECT_GE(a.coverage_95, 0.0);
    EXPECT_LE(a.coverage_95, 1.0);
  }
  EXPECT_EQ(one.at(StudyMethod::pseudo).method, StudyMethod::pseudo);
}

TEST(Study, RejectsInvalidScenario) {
  auto s = small_slr(1);
  s.n = s.N;
  EXPECT_THROW(run_study(s), DomainError);
  s = small_slr(0);
  EXPECT_THROW(run_study(s), DomainError);
  s = small_slr(1);
  s.kind = ScenarioKind::nonlinear;
  EXPECT_THROW(run_study(s), DomainError);
  EXPECT_EQ(parse_scenario_kind("slr-skewed"), ScenarioKind::slr_skewed);
  EXPECT_EQ(parse_scenario_kind("slr_symmetric"), ScenarioKind::slr_symmetric);
  EXPECT_THROW(parse_scenario_kind("quadratic"), DomainError);
}

TEST(Fitting, UnusableDensityFailsAfterRetry) {
  Dataset data(5, Observation{1e300, 0.0, Vector::Ones(1), Vector::Ones(1)});
  const auto layout = make_layout(ModelKind::linear, Method::ignore, 1, 1);
  const Posterior post(data, layout);
  EXPECT_FALSE(fit_posterior(post, quick_chain(), 1).has_value());
}

TEST(CurveStudy, SmallRun) {
  ScenarioConfig s;
  s.kind = ScenarioKind::nonlinear;
  s.N = 2000;
  s.n = 60;
  s.M = 2;
  s.chain = quick_chain();
  s.threads = 2;
  const auto c = run_curve_study(s);
  ASSERT_EQ(c.grid.size(), 81u);
  EXPECT_EQ(c.truth.front(), 2.0);
  EXPECT_EQ(c.truth.back(), 2.0);
  for (std::size_t g = 0; g < c.grid.size(); ++g) EXPECT_EQ(c.truth[g], nonlinear_truth(c.grid[g]));
  ASSERT_EQ(c.methods.size(), 3u);
  for (const auto& m : c.methods) {
    ASSERT_EQ(m.coverage.size(), 81u);
    for (double v : m.coverage) EXPECT_TRUE(v == 0.0 || v == 0.5 || v == 1.0);
    for (double l : m.avg_ci_length) EXPECT_GT(l, 0.0);
    for (std::size_t g = 0; g < 81; ++g) {
      EXPECT_NEAR(m.bias[g], m.mean_fit[g] - c.truth[g], 1e-12);
    }
  }
  s.threads = 1;
  const auto again = run_curve_study(s);
  EXPECT_EQ(again.methods[1].mean_fit, c.methods[1].mean_fit);
}

TEST(WeightDist, CensusApproachesSizeBiasedMle) {
  const std::size_t N = 2000;
  const auto r = run_weight_dist_experiment(N, N, 3);
  // MLE of the size-biased lognormal on log pi: variance v = sample variance,
  // location kappa = mean - v.
  double mean = 0.0;
  for (double l : r.sample_log_pi) mean += l;
  mean /= static_cast<double>(N);
  double v = 0.0;
  for (double l : r.sample_log_pi) v += (l - mean) * (l - mean);
  v /= static_cast<double>(N);
  const auto& kappa = r.summary.at("kappa");
  const auto& s2 = r.summary.at("sigma_pi2");
  EXPECT_NEAR(kappa.mean, mean - v, 3.0 * kappa.sd);
  EXPECT_NEAR(s2.mean, v, 3.0 * s2.sd);
  EXPECT_LT(kappa.sd, 0.1);
}

TEST(WeightDist, ScaleShiftsKappaByLogC) {
  ChainConfig c;
  c.n_draws = 4000;
  const auto base = run_weight_dist_experiment(20000, 200, 2, c);
  const auto scaled = run_weight_dist_experiment(20000, 200, 2, c, 8.0);
  EXPECT_NEAR(scaled.true_kappa, std::log(8.0), 1e-15);
  EXPECT_EQ(scaled.sample_log_pi.size(), base.sample_log_pi.size());
  for (std::size_t i = 0; i < base.sample_log_pi.size(); ++i) {
    EXPECT_NEAR(scaled.sample_log_pi[i] - base.sample_log_pi[i], std::log(8.0), 1e-12);
  }
  EXPECT_NEAR(scaled.summary.at("kappa").mean - base.summary.at("kappa").mean, std::log(8.0), 0.05);
  EXPECT_NEAR(scaled.summary.at("sigma_pi2").mean, base.summary.at("sigma_pi2").mean, 0.05);
}

TEST(WeightDist, PlotData) {
  const auto r = run_weight_dist_experiment(5000, 100, 4);
  ASSERT_EQ(r.histogram.size(), 20u);
  std::size_t total = 0;
  double area = 0.0;
  for (const auto& b : r.histogram) {
    total += b.count;
    area += b.density * (b.hi - b.lo);
    EXPECT_LT(b.lo, b.hi);
  }
  EXPECT_EQ(total, 100u);
  EXPECT_NEAR(area, 1.0, 1e-12);
  ASSERT_EQ(r.density.size(), 161u);
  double true_area = 0.0;
  for (std::size_t i = 1; i < r.density.size(); ++i) {
    const double h = r.density[i].x - r.density[i - 1].x;
    true_area += 0.5 * h * (r.density[i].true_density + r.density[i - 1].true_density);
  }
  EXPECT_NEAR(true_area, 1.0, 1e-3);
  EXPECT_THROW(run_weight_dist_experiment(100, 1, 4), DomainError);
  EXPECT_THROW(run_weight_dist_experiment(100, 200, 4), DomainError);
}
