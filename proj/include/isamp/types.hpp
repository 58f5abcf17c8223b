#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace isamp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Thrown when an argument violates an operation's precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Thrown when a computation produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sampling design could not be realized (e.g. too many certainty units).
class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

/// One sampled unit.
///
/// `log_pi` is the natural log of an unnormalized inclusion probability;
/// only proportionality matters, so no constraint on the sum is imposed.
/// Both design rows carry a leading 1.0 for the intercept.
struct Observation {
  double y = 0.0;
  double log_pi = 0.0;
  Vector x_y;
  Vector x_pi;
};

using Dataset = std::vector<Observation>;

/// Population-model parameters of the normal linear regression.
struct ThetaLinear {
  Vector beta;
  double sigma_y = 1.0;
};

/// Parameters of the lognormal model for pi given y.
struct Kappa {
  double kappa_y = 0.0;
  Vector kappa_x;
  double sigma_pi = 1.0;
};

/// Probit-link coefficients for a dichotomous response.
struct ThetaProbit {
  Vector beta;
};

enum class ModelKind { linear, probit, spline, weights_only };

/// full: Bayes-rule adjusted joint likelihood of (y, pi).
/// pseudo: weight-exponentiated likelihood of y.
/// ignore: plain likelihood of y, design treated as non-informative.
enum class Method { full, pseudo, ignore };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::linear: return "linear";
    case ModelKind::probit: return "probit";
    case ModelKind::spline: return "spline";
    case ModelKind::weights_only: return "weights_only";
  }
  return "?";
}

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::full: return "full";
    case Method::pseudo: return "pseudo";
    case Method::ignore: return "ignore";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "linear") return ModelKind::linear;
  if (s == "probit") return ModelKind::probit;
  if (s == "spline") return ModelKind::spline;
  if (s == "weights_only" || s == "weights-only") return ModelKind::weights_only;
  throw DomainError("unknown model kind: " + std::string(s));
}

inline Method parse_method(std::string_view s) {
  if (s == "full") return Method::full;
  if (s == "pseudo") return Method::pseudo;
  if (s == "ignore") return Method::ignore;
  throw DomainError("unknown method: " + std::string(s));
}

inline void validate(const Observation& obs) {
  require(std::isfinite(obs.log_pi), "observation log_pi must be finite");
  require(std::isfinite(obs.y), "observation y must be finite");
  require(obs.x_y.size() > 0 && obs.x_pi.size() > 0,
          "observation design rows must be non-empty");
}

}  // namespace isamp
