#pragma once

// Clamped B-spline bases and the difference-penalty prior on their coefficients.

#include "isamp/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace isamp {

struct SplineBasis {
  std::vector<double> knots;  // nondecreasing, boundary knots repeated degree+1 times
  int degree = 3;
  int b = 0;                  // number of basis functions
  int k = 4;                  // difference-penalty order
  Matrix Q;                   // b x b, rank b - k

  double lower() const { return knots.front(); }
  double upper() const { return knots.back(); }
};

/// Q = D^T D with D the (b - k) x b matrix of k-th order finite differences.
inline Matrix penalty_matrix(int b, int k) {
  require(k > 0 && k < b, "penalty_matrix: need 0 < k < b");
  Matrix d = Matrix::Identity(b, b);
  for (int order = 0; order < k; ++order) {
    const Eigen::Index rows = d.rows() - 1;
    d = (d.bottomRows(rows) - d.topRows(rows)).eval();
  }
  return d.transpose() * d;
}

/// Equally spaced interior knots between min(x) and max(x), clamped ends.
inline SplineBasis build_basis(std::span<const double> x_values, int b, int degree = 3,
                               int penalty_order = 4) {
  require(degree >= 1, "build_basis: degree must be >= 1");
  require(b > degree, "build_basis: need b > degree");
  require(!x_values.empty(), "build_basis: empty x");
  const auto [lo_it, hi_it] = std::minmax_element(x_values.begin(), x_values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  require(std::isfinite(lo) && std::isfinite(hi) && lo < hi,
          "build_basis: x values must span a non-degenerate interval");

  SplineBasis basis;
  basis.degree = degree;
  basis.b = b;
  basis.k = penalty_order;
  const int n_interior = b - degree - 1;
  basis.knots.reserve(b + degree + 1);
  for (int i = 0; i <= degree; ++i) basis.knots.push_back(lo);
  for (int i = 1; i <= n_interior; ++i) {
    basis.knots.push_back(lo + (hi - lo) * i / (n_interior + 1));
  }
  for (int i = 0; i <= degree; ++i) basis.knots.push_back(hi);
  basis.Q = penalty_matrix(b, penalty_order);
  return basis;
}

/// Row (B_1(x), ..., B_b(x)) by the Cox-de Boor triangle on the active span.
/// Values of x outside the knot span are clamped to it; each clamp increments
/// `*clamp_count` when a counter is supplied.
inline Vector eval_row(const SplineBasis& basis, double x, std::size_t* clamp_count = nullptr) {
  require(std::isfinite(x), "eval_row: x must be finite");
  if (x < basis.lower() || x > basis.upper()) {
    x = std::clamp(x, basis.lower(), basis.upper());
    if (clamp_count != nullptr) ++*clamp_count;
  }
  const int p = basis.degree;
  const auto& t = basis.knots;
  // Active span s: t[s] <= x < t[s+1], with the right end folded into the last span.
  int s = static_cast<int>(std::upper_bound(t.begin(), t.end(), x) - t.begin()) - 1;
  s = std::clamp(s, p, basis.b - 1);

  std::vector<double> n(p + 1, 0.0), left(p + 1, 0.0), right(p + 1, 0.0);
  n[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - t[s + 1 - j];
    right[j] = t[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    n[j] = saved;
  }
  Vector row = Vector::Zero(basis.b);
  for (int j = 0; j <= p; ++j) row[s - p + j] = n[j];
  return row;
}

/// n x b design matrix of basis rows.
inline Matrix design_matrix(const SplineBasis& basis, std::span<const double> x,
                            std::size_t* clamp_count = nullptr) {
  Matrix out(static_cast<Eigen::Index>(x.size()), basis.b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = eval_row(basis, x[i], clamp_count).transpose();
  }
  return out;
}

/// Log kernel of the rank-deficient Gaussian smoothness prior:
/// -((b - k) / 2) log sigma_beta^2 - beta' Q beta / (2 sigma_beta^2).
inline double log_spline_penalty(const Vector& beta, double sigma_beta, const Matrix& Q, int b,
                                 int k) {
  require(beta.size() == b && Q.rows() == b && Q.cols() == b,
          "log_spline_penalty: dimension mismatch");
  require(sigma_beta > 0.0, "log_spline_penalty: sigma_beta must be > 0");
  const double var = sigma_beta * sigma_beta;
  return -0.5 * (b - k) * std::log(var) - beta.dot(Q * beta) / (2.0 * var);
}

}  // namespace isamp
