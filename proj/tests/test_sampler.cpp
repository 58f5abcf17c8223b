#include "isamp/model.hpp"
#include "isamp/sampler.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace isamp;

namespace {

LogDensityFn standard_normal() {
  return [](const Vector& q, Vector& g) {
    g = -q;
    return -0.5 * q.squaredNorm();
  };
}

LogDensityFn correlated_normal(double rho) {
  Matrix cov(2, 2);
  cov << 1.0, rho, rho, 1.0;
  const Matrix prec = cov.inverse();
  return [prec](const Vector& q, Vector& g) {
    g = -prec * q;
    return -0.5 * q.dot(prec * q);
  };
}

const ConstrainFn identity = [](const Vector& v) { return v; };

double normal_cdf_std(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Hmc, StandardNormalMoments) {
  ChainConfig c;
  c.n_draws = 20000;
  c.seed = 42;
  const Draws d = run_hmc(standard_normal(), Vector::Constant(2, 0.5), c);
  ASSERT_EQ(d.values.rows(), 20000);
  const Summary s = summarize(d, identity);
  for (const auto& p : s.params) {
    EXPECT_NEAR(p.mean, 0.0, 0.03) << p.name;
    EXPECT_NEAR(p.sd, 1.0, 0.03) << p.name;
  }
  EXPECT_EQ(d.divergence_count, 0);
  EXPECT_FALSE(d.divergence_flag);
  EXPECT_GT(d.accept_rate, 0.6);
}

TEST(Hmc, CorrelatedGaussian) {
  ChainConfig c;
  c.n_draws = 10000;
  c.seed = 7;
  const Draws d = run_hmc(correlated_normal(0.9), Vector::Zero(2), c);
  const Vector mean = d.values.colwise().mean();
  const Matrix centered = d.values.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(d.values.rows() - 1);
  const double corr = cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1));
  EXPECT_NEAR(corr, 0.9, 0.05);
}

TEST(Hmc, DeterministicGivenSeed) {
  ChainConfig c;
  c.n_draws = 500;
  c.seed = 99;
  const Draws a = run_hmc(correlated_normal(0.5), Vector::Constant(2, 0.1), c);
  const Draws b = run_hmc(correlated_normal(0.5), Vector::Constant(2, 0.1), c);
  EXPECT_TRUE((a.values.array() == b.values.array()).all());
  EXPECT_EQ(a.step_size, b.step_size);
  c.seed = 100;
  const Draws other = run_hmc(correlated_normal(0.5), Vector::Constant(2, 0.1), c);
  EXPECT_FALSE((a.values.array() == other.values.array()).all());
}

TEST(Hmc, SeparateCallbacksOverloadAgrees) {
  ChainConfig c;
  c.n_draws = 300;
  const auto value = [](const Vector& q) { return -0.5 * q.squaredNorm(); };
  const auto grad = [](const Vector& q) -> Vector { return -q; };
  const Draws a = run_hmc(value, grad, Vector::Zero(3), c);
  const Draws b = run_hmc(standard_normal(), Vector::Zero(3), c);
  EXPECT_TRUE((a.values.array() == b.values.array()).all());
}

TEST(Hmc, KolmogorovSmirnovOnThinnedDraws) {
  ChainConfig c;
  c.n_draws = 20000;
  c.seed = 3;
  const Draws d = run_hmc(standard_normal(), Vector::Zero(1), c);
  std::vector<double> x;
  for (Eigen::Index i = 0; i < d.values.rows(); i += 10) x.push_back(d.values(i, 0));
  std::sort(x.begin(), x.end());
  const auto n = static_cast<double>(x.size());
  double stat = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf_std(x[i]);
    stat = std::max({stat, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  // Asymptotic critical value at alpha = 0.001: sqrt(-log(alpha / 2) / 2) / sqrt(n).
  const double critical = std::sqrt(-std::log(0.0005) / 2.0) / std::sqrt(n);
  EXPECT_LT(stat, critical);
}

TEST(Hmc, PriorOnlySamplingReproducesPriorScale) {
  const auto layout = make_layout(ModelKind::linear, Method::ignore, 3, 0);
  const LogDensityFn prior = [&layout](const Vector& u, Vector& g) {
    g = Vector::Zero(layout.dim);
    return log_prior(layout, u, nullptr, &g);
  };
  ChainConfig c;
  c.n_draws = 20000;
  c.seed = 11;
  const Draws d = run_hmc(prior, Vector::Zero(layout.dim), c);
  const Summary s = summarize(d, [&](const Vector& u) { return constrain(layout, u); });
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(s.params[j].sd, 10.0, 0.5) << j;
  // sigma_y^2 ~ normal+(0, 1): E[sigma_y^2] = sqrt(2 / pi).
  std::vector<double> var;
  for (Eigen::Index i = 0; i < d.values.rows(); ++i) {
    var.push_back(std::exp(2.0 * d.values(i, layout.log_sigma_y)));
  }
  EXPECT_NEAR(summarize_column("v", var).mean, std::sqrt(2.0 / std::acos(-1.0)), 0.04);
}

TEST(Hmc, RejectsNonFiniteInitialPoint) {
  const LogDensityFn bad = [](const Vector& q, Vector& g) {
    g = -q;
    return q[0] > 0.0 ? -INFINITY : -0.5 * q.squaredNorm();
  };
  EXPECT_THROW(run_hmc(bad, Vector::Constant(1, 1.0), ChainConfig{}), InitializationError);
}

TEST(Hmc, ValidatesConfig) {
  ChainConfig c;
  c.n_warmup = 50;
  EXPECT_THROW(run_hmc(standard_normal(), Vector::Zero(1), c), DomainError);
  c = ChainConfig{};
  c.target_accept = 1.0;
  EXPECT_THROW(run_hmc(standard_normal(), Vector::Zero(1), c), DomainError);
}

TEST(Hmc, FunnelNeckProducesDivergences) {
  // Neal's funnel: v ~ N(0, 9), x | v ~ N(0, e^v), 10 x-coordinates.
  const LogDensityFn funnel = [](const Vector& q, Vector& g) {
    const double v = q[0];
    const auto x = q.tail(q.size() - 1);
    const double n = static_cast<double>(x.size());
    const double ev = std::exp(-v);
    g.resize(q.size());
    g[0] = -v / 9.0 + 0.5 * x.squaredNorm() * ev - 0.5 * n;
    g.tail(q.size() - 1) = -x * ev;
    return -v * v / 18.0 - 0.5 * x.squaredNorm() * ev - 0.5 * n * v;
  };
  ChainConfig c;
  c.n_draws = 2000;
  c.seed = 4;
  const Draws d = run_hmc(funnel, Vector::Zero(11), c);
  EXPECT_GT(d.divergence_count, 0);
  EXPECT_EQ(d.divergence_flag, d.divergence_count > 200);
  EXPECT_TRUE(d.values.allFinite());
}

TEST(Summary, ConstantDraws) {
  Draws d;
  d.values = Matrix::Constant(200, 1, 3.25);
  d.names = {"c"};
  const auto s = summarize(d, identity);
  EXPECT_EQ(s.at("c").mean, 3.25);
  EXPECT_EQ(s.at("c").sd, 0.0);
  EXPECT_EQ(s.at("c").q025, 3.25);
  EXPECT_EQ(s.at("c").q975, 3.25);
  EXPECT_EQ(s.at("c").ci_length, 0.0);
  EXPECT_THROW(s.at("missing"), DomainError);
}

TEST(Summary, SymmetricDraws) {
  Draws d;
  d.values.resize(400, 1);
  for (int i = 0; i < 400; ++i) d.values(i, 0) = i % 2 ? 1.0 : -1.0;
  EXPECT_EQ(summarize(d, identity).params[0].mean, 0.0);
}

TEST(Summary, NormalQuantile) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  Draws d;
  d.values.resize(100000, 1);
  for (Eigen::Index i = 0; i < d.values.rows(); ++i) d.values(i, 0) = z(rng);
  const auto s = summarize(d, identity).params[0];
  EXPECT_GE(s.q025, -2.01);
  EXPECT_LE(s.q025, -1.91);
}

TEST(Summary, RejectsShortRuns) {
  Draws d;
  d.values = Matrix::Zero(99, 1);
  EXPECT_THROW(summarize(d, identity), DomainError);
}

TEST(Summary, InterpolatedQuantiles) {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.1), 1.4);
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.25), 1.75);
}

TEST(Summary, ScaleParametersArePositive) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset data(60);
  for (auto& obs : data) {
    obs.x_y = Vector(2);
    obs.x_y << 1.0, z(rng);
    obs.x_pi = Vector::Ones(1);
    obs.y = 1.0 + obs.x_y[1] + 0.3 * z(rng);
    obs.log_pi = 0.5 * obs.y + 0.2 * z(rng);
  }
  const auto layout = make_layout(ModelKind::linear, Method::full, 2, 1);
  const Posterior post(data, layout);
  ChainConfig c;
  c.n_draws = 500;
  const Draws d = run_hmc([&](const Vector& u, Vector& g) { return post.log_density(u, g); },
                          jittered_init(layout.dim, 1.0, 1), c, layout.names);
  const auto s = summarize(d, [&](const Vector& u) { return constrain(layout, u); });
  EXPECT_GT(s.at("sigma_y").q025, 0.0);
  EXPECT_GT(s.at("sigma_pi").q025, 0.0);
  EXPECT_NEAR(s.at("kappa_y").mean, 0.5, 0.15);
}

TEST(Diagnostics, SplitRhat) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> same(4, std::vector<double>(1000));
  for (auto& c : same) for (auto& v : c) v = z(rng);
  EXPECT_NEAR(split_rhat(same), 1.0, 0.01);
  auto shifted = same;
  for (auto& v : shifted[0]) v += 3.0;
  EXPECT_GT(split_rhat(shifted), 1.1);
  // A trend within one chain is caught by splitting it in half.
  std::vector<std::vector<double>> trend(1, std::vector<double>(1000));
  for (int i = 0; i < 1000; ++i) trend[0][static_cast<std::size_t>(i)] = z(rng) + (i < 500 ? -2.0 : 2.0);
  EXPECT_GT(split_rhat(trend), 1.1);
}

TEST(Init, JitterIsBoundedAndDeterministic) {
  const Vector a = jittered_init(5, 1.5, 9);
  EXPECT_EQ(a, jittered_init(5, 1.5, 9));
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.5);
  EXPECT_EQ(jittered_init(3, 0.0, 9), Vector::Zero(3));
}
