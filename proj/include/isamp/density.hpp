#pragma once

#include "isamp/types.hpp"

#include <cmath>
#include <numbers>

namespace isamp {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
inline constexpr double kLogTwo = std::numbers::ln2;

/// log normal(z | mean, var), constants included.
inline double log_normal_pdf(double z, double mean, double var) {
  const double r = z - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - r * r / (2.0 * var);
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Density of lognormal(mu, var) at x > 0.
inline double lognormal_pdf(double x, double mu, double var) {
  return std::exp(log_normal_pdf(std::log(x), mu, var)) / x;
}

/// Moment generating function of normal(m, s2) at t.
inline double mgf_normal(double t, double m, double s2) {
  require(std::isfinite(t) && std::isfinite(m) && std::isfinite(s2),
          "mgf_normal: non-finite input");
  require(s2 >= 0.0, "mgf_normal: variance must be non-negative");
  return std::exp(t * m + t * t * s2 / 2.0);
}

/// Moment generating function of Bernoulli(p) at t.
inline double mgf_bernoulli(double t, double p) {
  require(std::isfinite(t) && std::isfinite(p), "mgf_bernoulli: non-finite input");
  require(p >= 0.0 && p <= 1.0, "mgf_bernoulli: p outside [0,1]");
  return 1.0 - p + p * std::exp(t);
}

/// log of normal+(0, var) at x >= 0: normal truncated to the positive half-line.
inline double log_half_normal_pdf(double x, double var) {
  return kLogTwo + log_normal_pdf(x, 0.0, var);
}

/// log of Cauchy+(0, scale) at x >= 0.
inline double log_half_cauchy_pdf(double x, double scale) {
  const double u = x / scale;
  return kLogTwo - std::log(std::numbers::pi * scale) - std::log1p(u * u);
}

}  // namespace isamp
