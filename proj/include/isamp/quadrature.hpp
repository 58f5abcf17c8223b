#pragma once

#include "isamp/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace isamp {

/// Nodes and weights for integrals of the form int f(t) exp(-t^2) dt.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Physicists' Gauss-Hermite rule with `n` nodes, by Newton iteration on the
/// orthonormal Hermite recurrence (stable well past n = 100).
inline GaussHermiteRule gauss_hermite(int n) {
  require(n >= 1, "gauss_hermite: need at least one node");
  constexpr int kMaxIter = 100;
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  GaussHermiteRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // Initial guesses for the largest roots, then extrapolate from earlier ones.
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < kMaxIter; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

/// E[f(Y)] for Y ~ normal(mean, var) using a Gauss-Hermite rule.
template <typename F>
double gauss_hermite_expectation(const GaussHermiteRule& rule, double mean, double var, F&& f) {
  const double scale = std::sqrt(2.0 * var);
  double total = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    total += rule.weights[i] * f(mean + scale * rule.nodes[i]);
  }
  return total / std::sqrt(std::numbers::pi);
}

/// E_{y | x, theta}[ E(pi | y, x, kappa) ] under the normal linear model,
/// integrating over y with 64-node Gauss-Hermite and using the lognormal mean
/// exp(kappa_y y + x_pi . kappa_x + sigma_pi^2 / 2) for the inner expectation.
/// This is a quadrature reference for the closed-form selection denominator.
inline double denominator_oracle(const ThetaLinear& theta, const Kappa& kappa, const Vector& x_y,
                                 const Vector& x_pi) {
  static const GaussHermiteRule rule = gauss_hermite(64);
  const double mu = x_y.dot(theta.beta);
  const double eta = x_pi.dot(kappa.kappa_x);
  const double var_pi = kappa.sigma_pi * kappa.sigma_pi;
  const double value = gauss_hermite_expectation(
      rule, mu, theta.sigma_y * theta.sigma_y,
      [&](double y) { return std::exp(kappa.kappa_y * y + eta + var_pi / 2.0); });
  if (!std::isfinite(value)) throw NumericalError("denominator_oracle: non-finite quadrature");
  return value;
}

}  // namespace isamp
