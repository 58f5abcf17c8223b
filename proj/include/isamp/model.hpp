#pragma once

// Parameter layout, priors and the log-posterior of every supported model.
//
// All positive scales are sampled as their natural log; the log-Jacobian of
// that transform is part of the prior. Layout order is fixed:
//   beta[0..p) | log_sigma_y | log_sigma_beta | kappa_y | kappa_x[0..q) | log_sigma_pi
// with absent blocks skipped.

#include "isamp/density.hpp"
#include "isamp/likelihood.hpp"
#include "isamp/splines.hpp"
#include "isamp/types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace isamp {

inline constexpr double kCoefPriorVar = 100.0;      // MVN(0, 100 I) on beta and kappa
inline constexpr double kScalePriorVar = 1.0;       // normal+(0, 1) on sigma_y^2, sigma_pi^2
inline constexpr double kSplineSigmaYVar = 10.0;    // normal+(0, 10) on sigma_y (spline)
inline constexpr double kSplineSigmaBetaScale = 10.0;
inline constexpr double kSplineSigmaPiScale = 1.0;

struct ParamLayout {
  ModelKind model = ModelKind::linear;
  Method method = Method::full;
  int p = 0;         // length of beta (x_y)
  int q = 0;         // length of kappa_x (x_pi)
  int spline_b = 0;  // leading beta entries carrying the smoothness penalty
  int spline_k = 0;

  int beta = -1;
  int log_sigma_y = -1;
  int log_sigma_beta = -1;
  int kappa_y = -1;
  int kappa_x = -1;
  int log_sigma_pi = -1;
  int dim = 0;
  std::vector<std::string> names;  // names on the constrained scale

  bool has_kappa() const { return kappa_x >= 0; }
};

inline ParamLayout make_layout(ModelKind model, Method method, int p, int q, int spline_b = 0,
                               int spline_k = 0) {
  ParamLayout l;
  l.model = model;
  l.method = method;
  l.p = model == ModelKind::weights_only ? 0 : p;
  l.q = q;
  if (model == ModelKind::weights_only) {
    require(method == Method::full, "weights_only model supports only the full method");
  }
  if (model == ModelKind::spline) {
    require(spline_b > 0 && spline_b <= p && spline_k > 0 && spline_k < spline_b,
            "spline layout needs 0 < k < b <= p");
    l.spline_b = spline_b;
    l.spline_k = spline_k;
  }
  int at = 0;
  auto add = [&](const std::string& name) {
    l.names.push_back(name);
    return at++;
  };
  if (l.p > 0) {
    l.beta = at;
    for (int j = 0; j < l.p; ++j) add("beta[" + std::to_string(j) + "]");
  }
  if (model == ModelKind::linear || model == ModelKind::spline) l.log_sigma_y = add("sigma_y");
  if (model == ModelKind::spline) l.log_sigma_beta = add("sigma_beta");
  if (method == Method::full) {
    require(q > 0, "full method needs a non-empty x_pi");
    if (model != ModelKind::weights_only) l.kappa_y = add("kappa_y");
    l.kappa_x = at;
    for (int j = 0; j < q; ++j) add("kappa_x[" + std::to_string(j) + "]");
    l.log_sigma_pi = add("sigma_pi");
  }
  l.dim = at;
  return l;
}

/// Unconstrained parameter vector tied to its layout.
struct ParamVector {
  Vector values;
  ParamLayout layout;
};

/// Parameters on their natural scale. Blocks absent from the layout keep
/// their defaults (empty vectors, unit scales, zero kappa_y).
struct Params {
  ThetaLinear theta;
  double sigma_beta = 1.0;
  Kappa kappa;
};

inline Params unpack(const ParamLayout& l, const Vector& u) {
  require(u.size() == l.dim, "unpack: size does not match layout");
  Params out;
  out.theta.beta = l.p > 0 ? Vector(u.segment(l.beta, l.p)) : Vector();
  if (l.log_sigma_y >= 0) out.theta.sigma_y = std::exp(u[l.log_sigma_y]);
  if (l.log_sigma_beta >= 0) out.sigma_beta = std::exp(u[l.log_sigma_beta]);
  if (l.kappa_y >= 0) out.kappa.kappa_y = u[l.kappa_y];
  if (l.kappa_x >= 0) {
    out.kappa.kappa_x = u.segment(l.kappa_x, l.q);
    out.kappa.sigma_pi = std::exp(u[l.log_sigma_pi]);
  }
  return out;
}

inline Vector pack(const ParamLayout& l, const Params& p) {
  Vector u(l.dim);
  if (l.p > 0) {
    require(p.theta.beta.size() == l.p, "pack: beta size mismatch");
    u.segment(l.beta, l.p) = p.theta.beta;
  }
  if (l.log_sigma_y >= 0) u[l.log_sigma_y] = std::log(p.theta.sigma_y);
  if (l.log_sigma_beta >= 0) u[l.log_sigma_beta] = std::log(p.sigma_beta);
  if (l.kappa_y >= 0) u[l.kappa_y] = p.kappa.kappa_y;
  if (l.kappa_x >= 0) {
    require(p.kappa.kappa_x.size() == l.q, "pack: kappa_x size mismatch");
    u.segment(l.kappa_x, l.q) = p.kappa.kappa_x;
    u[l.log_sigma_pi] = std::log(p.kappa.sigma_pi);
  }
  return u;
}

/// Maps an unconstrained vector to the natural scale (exp on log-scales).
inline Vector constrain(const ParamLayout& l, const Vector& u) {
  Vector out = u;
  for (int idx : {l.log_sigma_y, l.log_sigma_beta, l.log_sigma_pi}) {
    if (idx >= 0) out[idx] = std::exp(u[idx]);
  }
  return out;
}

namespace detail {

inline double log_coef_prior(double v, double& grad) {
  grad += -v / kCoefPriorVar;
  return log_normal_pdf(v, 0.0, kCoefPriorVar);
}

// normal+(0, 1) on a variance v = exp(2 s), with log|dv/ds| = log 2 + 2 s.
inline double log_variance_prior(double s, double& grad) {
  const double v = std::exp(2.0 * s);
  grad += 2.0 - 2.0 * v * v / kScalePriorVar;
  return log_half_normal_pdf(v, kScalePriorVar) + kLogTwo + 2.0 * s;
}

// normal+(0, var) on a scale sigma = exp(s), Jacobian s.
inline double log_sd_half_normal_prior(double s, double var, double& grad) {
  const double sigma = std::exp(s);
  grad += 1.0 - sigma * sigma / var;
  return log_half_normal_pdf(sigma, var) + s;
}

// Cauchy+(0, scale) on sigma = exp(s), Jacobian s.
inline double log_sd_half_cauchy_prior(double s, double scale, double& grad) {
  const double sigma = std::exp(s);
  const double s2 = sigma * sigma;
  grad += 1.0 - 2.0 * s2 / (scale * scale + s2);
  return log_half_cauchy_pdf(sigma, scale) + s;
}

}  // namespace detail

/// Log prior density on the unconstrained scale, with gradient accumulated
/// into `grad` when it is non-null. `Q` is the spline penalty (spline model only).
inline double log_prior(const ParamLayout& l, const Vector& u, const Matrix* Q, Vector* grad) {
  require(u.size() == l.dim, "log_prior: size does not match layout");
  Vector g = Vector::Zero(l.dim);
  double lp = 0.0;
  const bool spline = l.model == ModelKind::spline;

  if (l.p > 0) {
    int first_free = 0;
    if (spline) {
      require(Q != nullptr && Q->rows() == l.spline_b, "log_prior: spline model needs Q");
      const Vector beta = u.segment(l.beta, l.spline_b);
      const double s = u[l.log_sigma_beta];
      const double var = std::exp(2.0 * s);
      const Vector qb = *Q * beta;
      const double quad = beta.dot(qb);
      lp += log_spline_penalty(beta, std::exp(s), *Q, l.spline_b, l.spline_k);
      g.segment(l.beta, l.spline_b) -= qb / var;
      g[l.log_sigma_beta] += -(l.spline_b - l.spline_k) + quad / var;
      lp += detail::log_sd_half_cauchy_prior(s, kSplineSigmaBetaScale, g[l.log_sigma_beta]);
      first_free = l.spline_b;
    }
    for (int j = first_free; j < l.p; ++j) {
      lp += detail::log_coef_prior(u[l.beta + j], g[l.beta + j]);
    }
  }
  if (l.log_sigma_y >= 0) {
    const int i = l.log_sigma_y;
    lp += spline ? detail::log_sd_half_normal_prior(u[i], kSplineSigmaYVar, g[i])
                 : detail::log_variance_prior(u[i], g[i]);
  }
  if (l.kappa_y >= 0) lp += detail::log_coef_prior(u[l.kappa_y], g[l.kappa_y]);
  if (l.kappa_x >= 0) {
    for (int j = 0; j < l.q; ++j) lp += detail::log_coef_prior(u[l.kappa_x + j], g[l.kappa_x + j]);
    const int i = l.log_sigma_pi;
    lp += spline ? detail::log_sd_half_cauchy_prior(u[i], kSplineSigmaPiScale, g[i])
                 : detail::log_variance_prior(u[i], g[i]);
  }
  if (grad != nullptr) *grad += g;
  return lp;
}

inline double log_prior(const ParamVector& params, const Matrix* Q = nullptr) {
  return log_prior(params.layout, params.values, Q, nullptr);
}

/// Log-posterior of one model/method pair on a fixed sample.
///
/// The sample is copied into column form once; evaluation is then a few
/// matrix-vector products. Safe for concurrent const use.
///
/// `pi`, when given, holds the inclusion probabilities on their released
/// scale; pseudo weights are then normalized from it directly rather than
/// from exp(log_pi), so a power-of-two rescaling cancels exactly.
class Posterior {
 public:
  Posterior(const Dataset& data, ParamLayout layout, Matrix penalty = Matrix(),
            std::span<const double> pi = {})
      : layout_(std::move(layout)), penalty_(std::move(penalty)) {
    require(!data.empty(), "Posterior: empty dataset");
    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::Index p = data.front().x_y.size();
    const Eigen::Index q = data.front().x_pi.size();
    require(layout_.model == ModelKind::weights_only || p == layout_.p,
            "Posterior: x_y length does not match layout");
    require(!layout_.has_kappa() || q == layout_.q, "Posterior: x_pi length does not match layout");
    if (layout_.model == ModelKind::spline) {
      require(penalty_.rows() == layout_.spline_b && penalty_.cols() == layout_.spline_b,
              "Posterior: spline model needs a b x b penalty matrix");
    }
    y_.resize(n);
    log_pi_.resize(n);
    x_y_.resize(n, p);
    x_pi_.resize(n, q);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Observation& obs = data[static_cast<std::size_t>(i)];
      validate(obs);
      require(obs.x_y.size() == p && obs.x_pi.size() == q,
              "Posterior: design rows must have constant length");
      if (layout_.model == ModelKind::probit) {
        require(obs.y == 0.0 || obs.y == 1.0, "Posterior: probit response must be 0 or 1");
      }
      y_[i] = obs.y;
      log_pi_[i] = obs.log_pi;
      x_y_.row(i) = obs.x_y.transpose();
      x_pi_.row(i) = obs.x_pi.transpose();
    }
    require(pi.empty() || pi.size() == data.size(), "Posterior: one pi per observation");
    if (layout_.method == Method::pseudo) {
      const auto w = pi.empty() ? normalize_weights_log({log_pi_.data(), static_cast<std::size_t>(n)})
                                : normalize_weights(pi);
      weights_ = Eigen::Map<const Vector>(w.data(), n);
    } else {
      weights_ = Vector::Ones(n);
    }
  }

  const ParamLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim; }
  Eigen::Index size() const { return y_.size(); }
  const Vector& weights() const { return weights_; }
  const Matrix* penalty() const { return penalty_.size() > 0 ? &penalty_ : nullptr; }

  double log_density(const Vector& u) const { return evaluate(u, nullptr); }

  /// Value and gradient. Non-finite results are returned as-is.
  double log_density(const Vector& u, Vector& grad) const {
    grad = Vector::Zero(layout_.dim);
    if (layout_.model == ModelKind::probit) {
      const double lp = evaluate(u, nullptr);
      grad = finite_difference_gradient(u);
      return lp;
    }
    return evaluate(u, &grad);
  }

  /// Central differences with step 1e-6 * max(1, |u_i|).
  Vector finite_difference_gradient(const Vector& u) const {
    Vector grad(layout_.dim);
    Vector v = u;
    for (int i = 0; i < layout_.dim; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(u[i]));
      v[i] = u[i] + h;
      const double up = evaluate(v, nullptr);
      v[i] = u[i] - h;
      const double down = evaluate(v, nullptr);
      v[i] = u[i];
      grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
  }

 private:
  double evaluate(const Vector& u, Vector* grad) const {
    require(u.size() == layout_.dim, "Posterior: parameter size does not match layout");
    double lp = log_prior(layout_, u, penalty(), grad);
    switch (layout_.model) {
      case ModelKind::weights_only: lp += weights_only_term(u, grad); break;
      case ModelKind::probit: lp += probit_term(u); break;
      case ModelKind::linear:
      case ModelKind::spline:
        lp += layout_.method == Method::full ? normal_full_term(u, grad)
                                             : normal_weighted_term(u, grad);
        break;
    }
    return std::isnan(lp) ? -std::numeric_limits<double>::infinity() : lp;
  }

  // sum_i log p_s(y_i, pi_i) for the normal response.
  double normal_full_term(const Vector& u, Vector* grad) const {
    const auto& l = layout_;
    const auto beta = u.segment(l.beta, l.p);
    const auto kappa_x = u.segment(l.kappa_x, l.q);
    const double s_y = u[l.log_sigma_y];
    const double s_pi = u[l.log_sigma_pi];
    const double ky = u[l.kappa_y];
    const double var_y = std::exp(2.0 * s_y);
    const double var_pi = std::exp(2.0 * s_pi);
    const auto n = static_cast<double>(y_.size());

    const Vector mu = x_y_ * beta;
    const Vector eta = x_pi_ * kappa_x;
    const Eigen::ArrayXd r_y = (y_ - mu).array();
    const Eigen::ArrayXd r_pi = (log_pi_ - ky * y_ - eta).array();
    const double ss_y = r_y.square().sum();
    const double ss_pi = r_pi.square().sum();
    const double sum_mu = mu.sum();
    const double sum_eta = eta.sum();

    const double lp = -0.5 * n * (2.0 * kLogTwoPi + 2.0 * s_y + 2.0 * s_pi) -
                      ss_y / (2.0 * var_y) - ss_pi / (2.0 * var_pi) -
                      (sum_eta + n * var_pi / 2.0 + ky * sum_mu + n * ky * ky * var_y / 2.0);
    if (grad != nullptr) {
      Vector& g = *grad;
      g.segment(l.beta, l.p) += x_y_.transpose() * (r_y / var_y - ky).matrix();
      g.segment(l.kappa_x, l.q) += x_pi_.transpose() * (r_pi / var_pi - 1.0).matrix();
      g[l.kappa_y] += (r_pi * y_.array()).sum() / var_pi - sum_mu - n * ky * var_y;
      g[l.log_sigma_y] += -n + ss_y / var_y - n * ky * ky * var_y;
      g[l.log_sigma_pi] += -n + ss_pi / var_pi - n * var_pi;
    }
    return lp;
  }

  // sum_i w_i log normal(y_i | mu_i, sigma_y^2); w = 1 for the ignore method.
  double normal_weighted_term(const Vector& u, Vector* grad) const {
    const auto& l = layout_;
    const auto beta = u.segment(l.beta, l.p);
    const double s_y = u[l.log_sigma_y];
    const double var_y = std::exp(2.0 * s_y);
    const Eigen::ArrayXd r_y = (y_ - x_y_ * beta).array();
    const Eigen::ArrayXd w = weights_.array();
    const double sw = w.sum();
    const double wss = (w * r_y.square()).sum();
    const double lp = -0.5 * sw * (kLogTwoPi + 2.0 * s_y) - wss / (2.0 * var_y);
    if (grad != nullptr) {
      Vector& g = *grad;
      g.segment(l.beta, l.p) += x_y_.transpose() * (w * r_y / var_y).matrix();
      g[l.log_sigma_y] += -sw + wss / var_y;
    }
    return lp;
  }

  double weights_only_term(const Vector& u, Vector* grad) const {
    const auto& l = layout_;
    const auto kappa_x = u.segment(l.kappa_x, l.q);
    const double s_pi = u[l.log_sigma_pi];
    const double var_pi = std::exp(2.0 * s_pi);
    const auto n = static_cast<double>(y_.size());
    const Vector eta = x_pi_ * kappa_x;
    const Eigen::ArrayXd r = (log_pi_ - eta).array();
    const double ss = r.square().sum();
    const double lp = -0.5 * n * (kLogTwoPi + 2.0 * s_pi) - ss / (2.0 * var_pi) -
                      (eta.sum() + n * var_pi / 2.0);
    if (grad != nullptr) {
      Vector& g = *grad;
      g.segment(l.kappa_x, l.q) += x_pi_.transpose() * (r / var_pi - 1.0).matrix();
      g[l.log_sigma_pi] += -n + ss / var_pi - n * var_pi;
    }
    return lp;
  }

  double probit_term(const Vector& u) const {
    const auto& l = layout_;
    const Vector beta = u.segment(l.beta, l.p);
    const Vector lin = x_y_ * beta;
    double total = 0.0;
    if (l.method == Method::full) {
      Kappa kappa{u[l.kappa_y], u.segment(l.kappa_x, l.q), std::exp(u[l.log_sigma_pi])};
      ThetaProbit theta{beta};
      Observation obs;
      for (Eigen::Index i = 0; i < y_.size(); ++i) {
        obs.y = y_[i];
        obs.log_pi = log_pi_[i];
        obs.x_y = x_y_.row(i).transpose();
        obs.x_pi = x_pi_.row(i).transpose();
        total += log_ps_probit(obs, theta, kappa);
      }
      return total;
    }
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double p = std::clamp(normal_cdf(lin[i]), kProbitClamp, 1.0 - kProbitClamp);
      total += weights_[i] * (y_[i] == 1.0 ? std::log(p) : std::log1p(-p));
    }
    return total;
  }

  ParamLayout layout_;
  Matrix penalty_;
  Vector y_;
  Vector log_pi_;
  Matrix x_y_;
  Matrix x_pi_;
  Vector weights_;
};

/// Full log-posterior (likelihood under `method` plus priors).
inline double log_posterior(const Dataset& data, const ParamVector& params,
                            const Matrix& penalty = Matrix()) {
  return Posterior(data, params.layout, penalty).log_density(params.values);
}

/// Gradient in the unconstrained parameterization. Throws NumericalError
/// naming the first non-finite coordinate.
inline Vector grad_log_posterior(const Posterior& post, const Vector& u) {
  Vector g;
  post.log_density(u, g);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NumericalError("grad_log_posterior: non-finite gradient at coordinate " +
                           std::to_string(i) + " (" + post.layout().names[i] + ")");
    }
  }
  return g;
}

inline Vector grad_log_posterior(const Dataset& data, const ParamVector& params,
                                 const Matrix& penalty = Matrix()) {
  return grad_log_posterior(Posterior(data, params.layout, penalty), params.values);
}

}  // namespace isamp
