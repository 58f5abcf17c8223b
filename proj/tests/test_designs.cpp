#include "isamp/designs.hpp"

#include <gtest/gtest.h>

#include <Eigen/QR>

#include <cmath>
#include <numeric>
#include <set>

using namespace isamp;

namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss / static_cast<double>(v.size() - 1);
}

Vector least_squares(const Matrix& X, const std::vector<double>& y) {
  const Vector yy = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
  return X.colPivHouseholderQr().solve(yy);
}

void expect_valid_sample(const SampleIndex& s, std::size_t n, std::size_t N) {
  ASSERT_EQ(s.indices.size(), n);
  const std::set<std::size_t> distinct(s.indices.begin(), s.indices.end());
  EXPECT_EQ(distinct.size(), n);
  for (std::size_t i : s.indices) EXPECT_LT(i, N);
}

}  // namespace

TEST(SlrPopulation, SkewedMoments) {
  const std::size_t N = 100000;
  const auto pop = gen_slr_population(N, 2.0, false, 1);
  ASSERT_EQ(pop.size(), N);
  ASSERT_EQ(pop.y.size(), N);
  ASSERT_EQ(pop.x.rows(), static_cast<Eigen::Index>(N));
  // gamma(2, rate 2): mean 1, variance 0.5.
  EXPECT_NEAR(mean(pop.pi_raw), 1.0, 0.02);
  for (double p : pop.pi_raw) ASSERT_GT(p, 0.0);

  Matrix X(static_cast<Eigen::Index>(N), 3);
  for (std::size_t i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    X.row(r) << 1.0, pop.x(r, 0), pop.pi_raw[i];
  }
  const Vector coef = least_squares(X, pop.y);
  EXPECT_NEAR(coef[0], 0.0, 0.005);
  EXPECT_NEAR(coef[1], 1.0, 0.005);
  EXPECT_NEAR(coef[2], 1.0, 0.005);

  // Error variance of y given x alone: var(pi) + 0.01 = 2 / b^2 + 0.01.
  std::vector<double> resid(N);
  for (std::size_t i = 0; i < N; ++i) resid[i] = pop.y[i] - pop.x(static_cast<Eigen::Index>(i), 0);
  const double expected = 2.0 / 4.0 + 0.01;
  // Sample variance of a gamma(2, 2)-driven residual: se ~ sqrt((mu4 - s^4) / N).
  const double se = std::sqrt((4.0 * 1.5 * 0.25 + 3.0 * 0.25 - 0.25) / static_cast<double>(N));
  EXPECT_NEAR(variance(resid), expected, 4.0 * se);
}

TEST(SlrPopulation, HighVarianceRate) {
  const auto pop = gen_slr_population(100000, 1.0, false, 2);
  EXPECT_NEAR(mean(pop.pi_raw), 2.0, 0.03);
  EXPECT_NEAR(variance(pop.pi_raw), 2.0, 0.08);
}

TEST(SlrPopulation, SymmetricTruncatedNormal) {
  const auto pop = gen_slr_population(100000, 0.0, true, 3);
  for (double p : pop.pi_raw) ASSERT_GT(p, 0.0);
  EXPECT_NEAR(mean(pop.pi_raw), 1.0, 4.0 * 0.1 / std::sqrt(1e5));
  EXPECT_NEAR(std::sqrt(variance(pop.pi_raw)), 0.1, 0.002);
}

TEST(SlrPopulation, DeterministicAndSeedSensitive) {
  const auto a = gen_slr_population(1000, 2.0, false, 9);
  const auto b = gen_slr_population(1000, 2.0, false, 9);
  const auto c = gen_slr_population(1000, 2.0, false, 10);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.pi_raw, b.pi_raw);
  EXPECT_NE(a.y, c.y);
  EXPECT_THROW(gen_slr_population(5, 2.0, false, 1), DomainError);
  EXPECT_THROW(gen_slr_population(100, 0.0, false, 1), DomainError);
}

TEST(NonlinearPopulation, Moments) {
  const std::size_t N = 100000;
  const auto pop = gen_nonlinear_population(N, 4);
  EXPECT_NEAR(mean(pop.pi_raw), 2.0, 4.0 * std::sqrt(2.0 / static_cast<double>(N)));
  std::vector<double> near_one;
  Matrix X(static_cast<Eigen::Index>(N), 3);
  for (std::size_t i = 0; i < N; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double x = pop.x(r, 0);
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 2.0);
    X.row(r) << 1.0, x, x * x;
    if (std::abs(x - 1.0) < 0.02) near_one.push_back(pop.y[i]);
  }
  // Mean of y near x = 1: 1 + 2 - 0.5; sd of y there is about sqrt(2).
  EXPECT_NEAR(mean(near_one), 2.5, 4.0 * std::sqrt(2.0 / static_cast<double>(near_one.size())));
  const Vector coef = least_squares(X, pop.y);
  EXPECT_NEAR(coef[0], 2.0, 0.05);
  EXPECT_NEAR(coef[1], 1.0, 0.06);
  EXPECT_NEAR(coef[2], -0.5, 0.03);
  EXPECT_DOUBLE_EQ(nonlinear_truth(0.0), 2.0);
  EXPECT_DOUBLE_EQ(nonlinear_truth(2.0), 2.0);
  EXPECT_DOUBLE_EQ(nonlinear_truth(1.0), 2.5);
}

TEST(LognormalSizes, Moments) {
  const auto pop = gen_lognormal_sizes(100000, 0.0, 1.0, 5);
  std::vector<double> logs;
  for (double p : pop.pi_raw) logs.push_back(std::log(p));
  EXPECT_NEAR(mean(logs), 0.0, 4.0 / std::sqrt(1e5));
  EXPECT_NEAR(variance(logs), 1.0, 4.0 * std::sqrt(2.0 / 1e5));
}

TEST(Pps, EqualSizesGiveEqualProbabilities) {
  const std::vector<double> pi(200, 3.0);
  for (double p : pps_inclusion_probabilities(pi, 20)) EXPECT_NEAR(p, 0.1, 1e-15);
}

TEST(Pps, LargeUnitIsCertain) {
  std::vector<double> pi(100, 1.0);
  pi[7] = 500.0;
  const auto prob = pps_inclusion_probabilities(pi, 10);
  EXPECT_EQ(prob[7], 1.0);
  EXPECT_NEAR(std::accumulate(prob.begin(), prob.end(), 0.0), 10.0, 1e-12);
  EXPECT_NEAR(prob[0], 9.0 / 99.0, 1e-15);
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = pps_sample(pi, 10, static_cast<std::uint64_t>(rep));
    expect_valid_sample(s, 10, 100);
    EXPECT_NE(std::find(s.indices.begin(), s.indices.end(), 7u), s.indices.end());
  }
}

TEST(Pps, CappingCascades) {
  // Capping the largest unit pushes the second over 1 as well.
  std::vector<double> pi(50, 1.0);
  pi[0] = 100.0;
  pi[1] = 12.0;
  const auto prob = pps_inclusion_probabilities(pi, 6);
  EXPECT_EQ(prob[0], 1.0);
  EXPECT_EQ(prob[1], 1.0);
  EXPECT_NEAR(prob[2], 4.0 / 48.0, 1e-15);
}

TEST(Pps, RejectsInvalidInput) {
  EXPECT_THROW(pps_inclusion_probabilities(std::vector<double>{1, 2, 3}, 3), DomainError);
  EXPECT_THROW(pps_inclusion_probabilities(std::vector<double>{1, -2, 3}, 1), DomainError);
  EXPECT_THROW(pps_inclusion_probabilities(std::vector<double>{1, 2, 3}, 0), DomainError);
}

TEST(Pps, FrequencyCalibration) {
  std::mt19937_64 rng(6);
  std::gamma_distribution<double> g(2.0, 1.0);
  const std::size_t N = 1000, n = 100;
  std::vector<double> pi(N);
  for (auto& p : pi) p = g(rng);
  const auto prob = pps_inclusion_probabilities(pi, n);
  const int reps = 10000;
  std::vector<int> hits(N, 0);
  for (int r = 0; r < reps; ++r) {
    const auto s = pps_sample(pi, n, derive_seed(123, static_cast<std::uint64_t>(r)));
    if (r < 20) expect_valid_sample(s, n, N);
    for (std::size_t i : s.indices) ++hits[i];
  }
  int within = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double se = std::sqrt(prob[i] * (1.0 - prob[i]) / reps);
    if (std::abs(hits[i] / static_cast<double>(reps) - prob[i]) <= 3.0 * se) ++within;
  }
  EXPECT_GE(within, 990);
}

TEST(Pps, Deterministic) {
  const auto pop = gen_slr_population(2000, 2.0, false, 1);
  EXPECT_EQ(pps_sample(pop.pi_raw, 100, 5).indices, pps_sample(pop.pi_raw, 100, 5).indices);
  EXPECT_NE(pps_sample(pop.pi_raw, 100, 5).indices, pps_sample(pop.pi_raw, 100, 6).indices);
}

TEST(Srs, CensusIsIdentitySet) {
  auto s = srs_sample(50, 50, 3).indices;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(s[i], i);
  EXPECT_THROW(srs_sample(5, 6, 1), DomainError);
}

TEST(Srs, UniformFrequencies) {
  const std::size_t N = 200, n = 20;
  const int reps = 10000;
  std::vector<int> hits(N, 0);
  for (int r = 0; r < reps; ++r) {
    const auto s = srs_sample(N, n, static_cast<std::uint64_t>(r));
    if (r < 20) expect_valid_sample(s, n, N);
    for (std::size_t i : s.indices) ++hits[i];
  }
  const double p = 0.1, se = std::sqrt(p * (1 - p) / reps);
  int within = 0;
  for (int h : hits) within += std::abs(h / static_cast<double>(reps) - p) <= 3.0 * se;
  EXPECT_GE(within, 196);
  EXPECT_EQ(srs_sample(N, n, 8).indices, srs_sample(N, n, 8).indices);
}

TEST(Rng, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(1, 1), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 1), derive_seed(2, 1));
  EXPECT_EQ(derive_seed(1, 1), derive_seed(1, 1));
  Rng a = make_rng(5, Stream::population);
  Rng b = make_rng(5, Stream::informative_sample);
  EXPECT_NE(a(), b());
}
