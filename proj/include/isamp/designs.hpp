#pragma once

// Synthetic finite populations and the two sampling designs used in the
// simulation studies: fixed-size PPS (informative) and SRS (non-informative).

#include "isamp/rng.hpp"
#include "isamp/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace isamp {

struct Population {
  std::vector<double> y;
  std::vector<double> pi_raw;  // unnormalized sizes, all > 0
  Matrix x;                    // N x p covariates (no intercept column)

  std::size_t size() const { return pi_raw.size(); }
};

struct SampleIndex {
  std::vector<std::size_t> indices;
};

// True population-model coefficients of the SLR scenarios: (b0, b1, b2, var_y).
inline constexpr double kSlrBeta0 = 0.0;
inline constexpr double kSlrBeta1 = 1.0;
inline constexpr double kSlrBeta2 = 1.0;
inline constexpr double kSlrVarY = 0.01;
inline constexpr double kSymmetricPiMean = 1.0;
inline constexpr double kSymmetricPiSd = 0.1;

/// x ~ uniform(0,1); pi ~ gamma(2, rate b_pi) or normal+(1, 0.1^2);
/// y ~ normal(x + pi, 0.1^2).
inline Population gen_slr_population(std::size_t N, double b_pi, bool symmetric,
                                     std::uint64_t seed) {
  require(N >= 10, "gen_slr_population: N must be >= 10");
  require(symmetric || b_pi > 0.0, "gen_slr_population: b_pi must be > 0");
  Rng rng = make_rng(seed, Stream::population);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(2.0, 1.0 / (symmetric ? 1.0 : b_pi));
  Population pop;
  pop.x.resize(static_cast<Eigen::Index>(N), 1);
  pop.y.resize(N);
  pop.pi_raw.resize(N);
  const double sd_y = std::sqrt(kSlrVarY);
  for (std::size_t i = 0; i < N; ++i) {
    const double x = unif(rng);
    double pi = 0.0;
    if (symmetric) {
      do {
        pi = kSymmetricPiMean + kSymmetricPiSd * normal(rng);
      } while (pi <= 0.0);
    } else {
      pi = gamma(rng);
    }
    pop.x(static_cast<Eigen::Index>(i), 0) = x;
    pop.pi_raw[i] = pi;
    pop.y[i] = kSlrBeta0 + kSlrBeta1 * x + kSlrBeta2 * pi + sd_y * normal(rng);
  }
  return pop;
}

/// x ~ uniform(0,2); pi ~ gamma(2, rate 1); y ~ normal(x + pi - 0.5 x^2, 0.1^2).
inline Population gen_nonlinear_population(std::size_t N, std::uint64_t seed) {
  require(N >= 10, "gen_nonlinear_population: N must be >= 10");
  Rng rng = make_rng(seed, Stream::population);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  Population pop;
  pop.x.resize(static_cast<Eigen::Index>(N), 1);
  pop.y.resize(N);
  pop.pi_raw.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const double x = unif(rng);
    const double pi = gamma(rng);
    pop.x(static_cast<Eigen::Index>(i), 0) = x;
    pop.pi_raw[i] = pi;
    pop.y[i] = x + pi - 0.5 * x * x + 0.1 * normal(rng);
  }
  return pop;
}

/// True mean curve of the nonlinear scenario, E(y | x) = x + 2 - 0.5 x^2.
inline double nonlinear_truth(double x) { return x + 2.0 - 0.5 * x * x; }

/// Sizes pi_i ~ lognormal(mu, sigma^2); y and x are empty.
inline Population gen_lognormal_sizes(std::size_t N, double mu, double sigma,
                                      std::uint64_t seed) {
  require(N >= 10, "gen_lognormal_sizes: N must be >= 10");
  Rng rng = make_rng(seed, Stream::population);
  std::lognormal_distribution<double> dist(mu, sigma);
  Population pop;
  pop.pi_raw.resize(N);
  for (auto& p : pop.pi_raw) p = dist(rng);
  pop.y.assign(N, 0.0);
  pop.x.resize(static_cast<Eigen::Index>(N), 0);
  return pop;
}

/// First-order inclusion probabilities min(1, n pi_i / sum pi), with
/// certainty units capped at 1 and the remaining size redistributed.
inline std::vector<double> pps_inclusion_probabilities(std::span<const double> pi, std::size_t n) {
  const std::size_t N = pi.size();
  require(n > 0 && n < N, "pps: need 0 < n < N");
  for (double p : pi) require(p > 0.0 && std::isfinite(p), "pps: sizes must be positive");
  std::vector<double> prob(N, 0.0);
  std::vector<bool> capped(N, false);
  std::size_t n_capped = 0;
  for (;;) {
    double rest = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (!capped[i]) rest += pi[i];
    }
    const double remaining = static_cast<double>(n - n_capped);
    bool changed = false;
    for (std::size_t i = 0; i < N; ++i) {
      if (capped[i]) continue;
      prob[i] = remaining * pi[i] / rest;
      if (prob[i] >= 1.0) {
        capped[i] = true;
        prob[i] = 1.0;
        ++n_capped;
        changed = true;
      }
    }
    if (n_capped > n) throw DesignError("pps: more certainty units than the sample size");
    if (!changed) break;
  }
  return prob;
}

/// Randomized systematic PPS: random permutation, then n equally spaced
/// points (random start) along the cumulated inclusion probabilities.
inline SampleIndex pps_sample(std::span<const double> pi, std::size_t n, std::uint64_t seed) {
  const auto prob = pps_inclusion_probabilities(pi, n);
  const std::size_t N = pi.size();
  Rng rng(seed);
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double start = unif(rng);

  SampleIndex out;
  out.indices.reserve(n);
  double cum = 0.0;
  double next = start;
  for (std::size_t k = 0; k < N && out.indices.size() < n; ++k) {
    cum += prob[order[k]];
    if (cum > next) {
      out.indices.push_back(order[k]);
      next += 1.0;
    }
  }
  // Rounding in the cumulative sum can leave the last point just past the end.
  for (std::size_t k = N; out.indices.size() < n && k-- > 0;) {
    const std::size_t unit = order[k];
    if (std::find(out.indices.begin(), out.indices.end(), unit) == out.indices.end()) {
      out.indices.push_back(unit);
    }
  }
  return out;
}

/// Simple random sample without replacement (partial Fisher-Yates).
inline SampleIndex srs_sample(std::size_t N, std::size_t n, std::uint64_t seed) {
  require(n <= N, "srs_sample: n must be <= N");
  Rng rng(seed);
  std::vector<std::size_t> units(N);
  std::iota(units.begin(), units.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, N - 1);
    std::swap(units[i], units[pick(rng)]);
  }
  units.resize(n);
  return SampleIndex{std::move(units)};
}

}  // namespace isamp
