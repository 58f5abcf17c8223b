#pragma once

// Per-unit sample likelihoods under informative sampling.
//
// The pi-model is lognormal(kappa_y * y + x_pi . kappa_x, sigma_pi^2). Dividing
// pi * p(pi | y) * p(y | x) by E_y[E(pi | y)] gives the sample density p_s of
// (y, pi); for the lognormal pi-model that expectation factors into
// exp(x_pi . kappa_x + sigma_pi^2 / 2) times the MGF of y evaluated at kappa_y.

#include "isamp/density.hpp"
#include "isamp/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace isamp {

namespace detail {

// log p_s for a normal response with mean `mu` and pi-model offset `eta`.
inline double log_ps_normal(double y, double log_pi, double mu, double eta, double sigma_y,
                            double kappa_y, double sigma_pi) {
  const double var_y = sigma_y * sigma_y;
  const double var_pi = sigma_pi * sigma_pi;
  const double log_denominator =
      eta + var_pi / 2.0 + kappa_y * mu + kappa_y * kappa_y * var_y / 2.0;
  return log_normal_pdf(log_pi, kappa_y * y + eta, var_pi) - log_denominator +
         log_normal_pdf(y, mu, var_y);
}

}  // namespace detail

/// Exact log p_s(y, pi | x, theta, kappa) under the normal linear model.
inline double log_ps_linear(const Observation& obs, const ThetaLinear& theta,
                            const Kappa& kappa) {
  require(obs.x_y.size() == theta.beta.size(), "log_ps_linear: x_y/beta size mismatch");
  require(obs.x_pi.size() == kappa.kappa_x.size(),
          "log_ps_linear: x_pi/kappa_x size mismatch");
  require(theta.sigma_y > 0.0 && kappa.sigma_pi > 0.0, "log_ps_linear: scales must be > 0");
  return detail::log_ps_normal(obs.y, obs.log_pi, obs.x_y.dot(theta.beta),
                               obs.x_pi.dot(kappa.kappa_x), theta.sigma_y, kappa.kappa_y,
                               kappa.sigma_pi);
}

inline constexpr double kProbitClamp = 1e-12;

/// Success probability of the probit link, clamped away from 0 and 1.
inline double probit_probability(const Vector& x_y, const Vector& beta) {
  return std::clamp(normal_cdf(x_y.dot(beta)), kProbitClamp, 1.0 - kProbitClamp);
}

/// log p_s(y, pi | x, theta, kappa) for a Bernoulli response with probit link.
inline double log_ps_probit(const Observation& obs, const ThetaProbit& theta,
                            const Kappa& kappa) {
  require(obs.y == 0.0 || obs.y == 1.0, "log_ps_probit: y must be 0 or 1");
  require(obs.x_y.size() == theta.beta.size(), "log_ps_probit: x_y/beta size mismatch");
  require(obs.x_pi.size() == kappa.kappa_x.size(),
          "log_ps_probit: x_pi/kappa_x size mismatch");
  require(kappa.sigma_pi > 0.0, "log_ps_probit: sigma_pi must be > 0");
  const double p = probit_probability(obs.x_y, theta.beta);
  const double eta = obs.x_pi.dot(kappa.kappa_x);
  const double var_pi = kappa.sigma_pi * kappa.sigma_pi;
  const double log_denominator =
      eta + var_pi / 2.0 + std::log(mgf_bernoulli(kappa.kappa_y, p));
  const double log_bernoulli = obs.y == 1.0 ? std::log(p) : std::log1p(-p);
  return log_normal_pdf(obs.log_pi, kappa.kappa_y * obs.y + eta, var_pi) - log_denominator +
         log_bernoulli;
}

/// log p_s(pi | x_pi, kappa) when the pi-model carries no response term.
/// This is the size-biased lognormal(x_pi . kappa_x + sigma_pi^2, sigma_pi^2)
/// density of pi, expressed on the log-pi scale. kappa_y is ignored.
inline double log_ps_weights_only(double log_pi, const Vector& x_pi, const Kappa& kappa) {
  require(x_pi.size() == kappa.kappa_x.size(),
          "log_ps_weights_only: x_pi/kappa_x size mismatch");
  require(kappa.sigma_pi > 0.0, "log_ps_weights_only: sigma_pi must be > 0");
  const double eta = x_pi.dot(kappa.kappa_x);
  const double var_pi = kappa.sigma_pi * kappa.sigma_pi;
  return log_normal_pdf(log_pi, eta, var_pi) - (eta + var_pi / 2.0);
}

/// Sampling weights proportional to 1/pi, scaled to sum to n.
inline std::vector<double> normalize_weights(std::span<const double> pi) {
  require(!pi.empty(), "normalize_weights: empty input");
  double total = 0.0;
  for (double p : pi) {
    require(p > 0.0 && std::isfinite(p), "normalize_weights: pi must be positive and finite");
    total += 1.0 / p;
  }
  const double scale = static_cast<double>(pi.size()) / total;
  std::vector<double> w(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) w[i] = scale / pi[i];
  return w;
}

/// Same as normalize_weights, taking log-scale inclusion probabilities.
/// Shifting every log_pi by a constant leaves the result unchanged up to rounding.
inline std::vector<double> normalize_weights_log(std::span<const double> log_pi) {
  require(!log_pi.empty(), "normalize_weights_log: empty input");
  const double ref = *std::min_element(log_pi.begin(), log_pi.end());
  std::vector<double> pi(log_pi.size());
  for (std::size_t i = 0; i < log_pi.size(); ++i) pi[i] = std::exp(log_pi[i] - ref);
  return normalize_weights(pi);
}

/// Weighted log-likelihood sum_i w_i log normal(y_i | x_y,i . beta, sigma_y^2).
inline double log_pseudo_likelihood(const Dataset& data, std::span<const double> w,
                                    const ThetaLinear& theta) {
  require(w.size() == data.size(), "log_pseudo_likelihood: one weight per observation");
  require(theta.sigma_y > 0.0, "log_pseudo_likelihood: sigma_y must be > 0");
  const double var_y = theta.sigma_y * theta.sigma_y;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    require(w[i] >= 0.0, "log_pseudo_likelihood: negative weight");
    total += w[i] * log_normal_pdf(data[i].y, data[i].x_y.dot(theta.beta), var_y);
  }
  return total;
}

}  // namespace isamp
