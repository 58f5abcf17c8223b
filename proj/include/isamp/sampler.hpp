#pragma once

// No-U-turn Hamiltonian Monte Carlo with a diagonal Euclidean metric.
//
// Trajectories are doubled in a random direction until the generalized
// no-U-turn criterion fails, a divergence occurs, or the leapfrog cap is hit.
// States are drawn multinomially: uniformly-progressive within subtrees,
// biased-progressive across the top-level doublings. Warmup tunes the step
// size by dual averaging and estimates the metric from windowed draws
// (fast/slow/fast schedule).

#include "isamp/rng.hpp"
#include "isamp/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace isamp {

struct ChainConfig {
  int n_warmup = 1000;
  int n_draws = 2000;
  double target_accept = 0.8;
  int max_leapfrog = 1024;
  std::uint64_t seed = 1;
  double init_jitter = 1.0;
};

inline void validate(const ChainConfig& c) {
  require(c.n_warmup >= 100, "ChainConfig: n_warmup must be >= 100");
  require(c.n_draws >= 1, "ChainConfig: n_draws must be >= 1");
  require(c.target_accept > 0.0 && c.target_accept < 1.0,
          "ChainConfig: target_accept must lie in (0, 1)");
  require(c.max_leapfrog >= 1, "ChainConfig: max_leapfrog must be >= 1");
  require(c.init_jitter >= 0.0, "ChainConfig: init_jitter must be >= 0");
}

struct Draws {
  Matrix values;  // n_draws x dim, unconstrained scale
  std::vector<std::string> names;
  double accept_rate = 0.0;
  int divergence_count = 0;
  bool divergence_flag = false;  // divergences exceeded 10% of draws
  double step_size = 0.0;
  Vector inv_metric;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Log density with gradient: returns log p(q) and writes d log p / dq.
using LogDensityFn = std::function<double(const Vector& q, Vector& grad)>;

namespace detail {

class DualAveraging {
 public:
  void restart(double step) {
    counter_ = 0.0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
    mu_ = std::log(10.0 * step);
  }

  double learn(double accept_stat, double delta) {
    counter_ += 1.0;
    accept_stat = std::min(1.0, accept_stat);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
    const double x_eta = std::pow(counter_, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
  double mu_ = 0.0;
};

// Welford running variance.
class VarianceEstimator {
 public:
  explicit VarianceEstimator(int dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

  void add(const Vector& q) {
    ++n_;
    const Vector delta = q - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(q - mean_);
  }

  // Sample variance shrunk toward 1e-3 (weight 5 pseudo-draws).
  Vector regularized() const {
    const double n = static_cast<double>(n_);
    const Vector var = m2_ / (n - 1.0);
    return (n / (n + 5.0)) * var + Vector::Constant(var.size(), 1e-3 * (5.0 / (n + 5.0)));
  }

  void restart() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

 private:
  long n_ = 0;
  Vector mean_;
  Vector m2_;
};

// Fast (step size only) / slow (metric) / fast warmup windows.
class WindowSchedule {
 public:
  explicit WindowSchedule(int n_warmup) : n_warmup_(n_warmup) {
    if (init_buffer_ + term_buffer_ + base_window_ > n_warmup_) {
      init_buffer_ = static_cast<int>(0.15 * n_warmup_);
      term_buffer_ = static_cast<int>(0.1 * n_warmup_);
      base_window_ = n_warmup_ - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
  }

  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < n_warmup_ - term_buffer_ &&
           counter_ != n_warmup_;
  }

  bool window_end() const { return counter_ == next_window_ && counter_ != n_warmup_; }

  void advance() {
    if (window_end()) compute_next_window();
    ++counter_;
  }

 private:
  void compute_next_window() {
    if (next_window_ == n_warmup_ - term_buffer_ - 1) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != n_warmup_ - term_buffer_ - 1) {
      const int boundary = next_window_ + 2 * window_size_;
      if (boundary >= n_warmup_ - term_buffer_) next_window_ = n_warmup_ - term_buffer_ - 1;
    }
  }

  int n_warmup_;
  int init_buffer_ = 75;
  int term_buffer_ = 50;
  int base_window_ = 25;
  int window_size_ = 0;
  int next_window_ = 0;
  int counter_ = 0;
};

struct PhasePoint {
  Vector q;
  Vector p;
  Vector grad;  // gradient of log density at q
  double log_p = 0.0;
};

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

class Nuts {
 public:
  Nuts(const LogDensityFn& density, int dim, int max_depth, Rng& rng)
      : density_(density), inv_metric_(Vector::Ones(dim)), max_depth_(max_depth), rng_(rng) {}

  void set_step(double step) { step_ = step; }
  double step() const { return step_; }
  Vector& inv_metric() { return inv_metric_; }

  struct Transition {
    double accept_stat = 0.0;
    bool divergent = false;
    int n_leapfrog = 0;
  };

  void init_point(const Vector& q) {
    z_.q = q;
    z_.p = Vector::Zero(q.size());
    evaluate(z_);
  }

  const PhasePoint& point() const { return z_; }

  // Heuristic: double or halve the step until a single leapfrog step's
  // acceptance probability crosses 0.8.
  void init_step_size() {
    const PhasePoint start = z_;
    sample_momentum(z_);
    double h0 = hamiltonian(z_);
    leapfrog(z_, step_);
    double delta = h0 - hamiltonian(z_);
    if (std::isnan(delta)) delta = -std::numeric_limits<double>::infinity();
    const int direction = delta > std::log(0.8) ? 1 : -1;
    for (int guard = 0; guard < 200; ++guard) {
      z_ = start;
      sample_momentum(z_);
      h0 = hamiltonian(z_);
      leapfrog(z_, step_);
      delta = h0 - hamiltonian(z_);
      if (std::isnan(delta)) delta = -std::numeric_limits<double>::infinity();
      if (direction == 1 && !(delta > std::log(0.8))) break;
      if (direction == -1 && !(delta < std::log(0.8))) break;
      step_ = direction == 1 ? 2.0 * step_ : 0.5 * step_;
      if (step_ > 1e7 || step_ == 0.0) break;
    }
    step_ = std::clamp(step_, 1e-12, 1e7);
    z_ = start;
  }

  Transition transition() {
    Transition out;
    sample_momentum(z_);
    PhasePoint z_fwd = z_;
    PhasePoint z_bck = z_;
    PhasePoint z_sample = z_;
    PhasePoint z_propose = z_;

    const Vector p_sharp0 = velocity(z_);
    Vector p_fwd_fwd = z_.p, p_sharp_fwd_fwd = p_sharp0;
    Vector p_fwd_bck = z_.p, p_sharp_fwd_bck = p_sharp0;
    Vector p_bck_fwd = z_.p, p_sharp_bck_fwd = p_sharp0;
    Vector p_bck_bck = z_.p, p_sharp_bck_bck = p_sharp0;
    Vector rho = z_.p;
    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro = 0.0;
    divergent_ = false;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int depth = 0; depth < max_depth_; ++depth) {
      Vector rho_fwd = Vector::Zero(rho.size());
      Vector rho_bck = Vector::Zero(rho.size());
      bool valid = false;
      double log_sum_weight_subtree = -std::numeric_limits<double>::infinity();

      if (unif(rng_) > 0.5) {
        z_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck,
                           p_fwd_fwd, h0, 1.0, n_leapfrog, log_sum_weight_subtree, sum_metro);
        z_fwd = z_;
      } else {
        z_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd,
                           p_bck_bck, h0, -1.0, n_leapfrog, log_sum_weight_subtree, sum_metro);
        z_bck = z_;
      }
      if (!valid) break;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (unif(rng_) < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
      rho = rho_bck + rho_fwd;

      bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      Vector rho_ext = rho_bck + p_fwd_bck;
      persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_ext);
      rho_ext = rho_fwd + p_bck_fwd;
      persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_ext);
      if (!persist) break;
    }
    out.n_leapfrog = n_leapfrog;
    out.accept_stat = n_leapfrog > 0 ? sum_metro / n_leapfrog : 0.0;
    out.divergent = divergent_;
    z_ = z_sample;
    return out;
  }

 private:
  static constexpr double kMaxEnergyError = 1000.0;

  bool build_tree(int depth, PhasePoint& z_propose, Vector& p_sharp_beg, Vector& p_sharp_end,
                  Vector& rho, Vector& p_beg, Vector& p_end, double h0, double sign,
                  int& n_leapfrog, double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      leapfrog(z_, sign * step_);
      ++n_leapfrog;
      double h = hamiltonian(z_);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0 > kMaxEnergyError) divergent_ = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      z_propose = z_;
      p_sharp_beg = velocity(z_);
      p_sharp_end = p_sharp_beg;
      rho += z_.p;
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent_;
    }

    const auto dim = rho.size();
    double log_sum_weight_init = -std::numeric_limits<double>::infinity();
    Vector p_init_end(dim), p_sharp_init_end(dim);
    Vector rho_init = Vector::Zero(dim);
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, h0, sign, n_leapfrog, log_sum_weight_init, sum_metro)) {
      return false;
    }

    PhasePoint z_propose_final = z_;
    double log_sum_weight_final = -std::numeric_limits<double>::infinity();
    Vector p_final_beg(dim), p_sharp_final_beg(dim);
    Vector rho_final = Vector::Zero(dim);
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, h0, sign, n_leapfrog, log_sum_weight_final, sum_metro)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (unif(rng_) < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Vector rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    Vector rho_ext = rho_init + p_final_beg;
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, rho_ext);
    rho_ext = rho_final + p_init_end;
    persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, rho_ext);
    return persist;
  }

  static bool no_u_turn(const Vector& p_sharp_minus, const Vector& p_sharp_plus,
                        const Vector& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  Vector velocity(const PhasePoint& z) const { return inv_metric_.cwiseProduct(z.p); }

  double hamiltonian(const PhasePoint& z) const {
    return -z.log_p + 0.5 * z.p.dot(inv_metric_.cwiseProduct(z.p));
  }

  void sample_momentum(PhasePoint& z) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < z.p.size(); ++i) {
      z.p[i] = normal(rng_) / std::sqrt(inv_metric_[i]);
    }
  }

  void evaluate(PhasePoint& z) {
    z.log_p = density_(z.q, z.grad);
    if (!std::isfinite(z.log_p) || !z.grad.allFinite()) {
      z.log_p = -std::numeric_limits<double>::infinity();
      z.grad.setZero();
    }
  }

  void leapfrog(PhasePoint& z, double eps) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * inv_metric_.cwiseProduct(z.p);
    evaluate(z);
    z.p += 0.5 * eps * z.grad;
  }

  const LogDensityFn& density_;
  Vector inv_metric_;
  int max_depth_;
  Rng& rng_;
  double step_ = 1.0;
  PhasePoint z_;
  bool divergent_ = false;
};

}  // namespace detail

/// Runs one chain. Deterministic given (density, init, config).
/// Throws InitializationError when the log density is not finite at `init`.
inline Draws run_hmc(const LogDensityFn& density, const Vector& init, const ChainConfig& config,
                     std::vector<std::string> names = {}) {
  validate(config);
  const auto dim = static_cast<int>(init.size());
  require(dim > 0, "run_hmc: empty initial point");
  Vector grad(dim);
  const double lp0 = density(init, grad);
  if (!std::isfinite(lp0) || !grad.allFinite()) {
    throw InitializationError("run_hmc: log density or gradient not finite at the initial point");
  }

  Rng rng(derive_seed(config.seed, 0x6e757473ULL));
  int max_depth = 0;
  while ((2 << max_depth) <= config.max_leapfrog) ++max_depth;
  max_depth = std::max(max_depth, 1);

  detail::Nuts nuts(density, dim, max_depth, rng);
  nuts.init_point(init);
  nuts.set_step(1.0);
  nuts.init_step_size();

  detail::DualAveraging averaging;
  averaging.restart(nuts.step());
  detail::WindowSchedule schedule(config.n_warmup);
  detail::VarianceEstimator estimator(dim);

  for (int it = 0; it < config.n_warmup; ++it) {
    const auto t = nuts.transition();
    nuts.set_step(averaging.learn(t.accept_stat, config.target_accept));
    if (schedule.in_window()) estimator.add(nuts.point().q);
    if (schedule.window_end()) {
      nuts.inv_metric() = estimator.regularized();
      estimator.restart();
      nuts.init_step_size();
      averaging.restart(nuts.step());
    }
    schedule.advance();
  }
  nuts.set_step(averaging.final_step());

  Draws draws;
  draws.values.resize(config.n_draws, dim);
  draws.names = std::move(names);
  if (draws.names.empty()) {
    for (int i = 0; i < dim; ++i) draws.names.push_back("x[" + std::to_string(i) + "]");
  }
  double accept_total = 0.0;
  for (int it = 0; it < config.n_draws; ++it) {
    const auto t = nuts.transition();
    accept_total += t.accept_stat;
    if (t.divergent) ++draws.divergence_count;
    draws.values.row(it) = nuts.point().q.transpose();
  }
  draws.accept_rate = accept_total / config.n_draws;
  draws.divergence_flag = draws.divergence_count > 0.1 * config.n_draws;
  draws.step_size = nuts.step();
  draws.inv_metric = nuts.inv_metric();
  if (!draws.values.allFinite()) throw NumericalError("run_hmc: non-finite draw");
  return draws;
}

/// Overload taking separate value and gradient callbacks.
inline Draws run_hmc(const std::function<double(const Vector&)>& log_density,
                     const std::function<Vector(const Vector&)>& gradient, const Vector& init,
                     const ChainConfig& config, std::vector<std::string> names = {}) {
  const LogDensityFn combined = [&](const Vector& q, Vector& g) {
    const double lp = log_density(q);
    if (!std::isfinite(lp)) return lp;
    g = gradient(q);
    return lp;
  };
  return run_hmc(combined, init, config, std::move(names));
}

/// Uniform(-jitter, jitter) draw in every unconstrained coordinate.
inline Vector jittered_init(int dim, double jitter, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x696e6974ULL));
  std::uniform_real_distribution<double> unif(-jitter, jitter);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = jitter > 0.0 ? unif(rng) : 0.0;
  return v;
}

// ---------------------------------------------------------------------------
// Posterior summaries

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double ci_length = 0.0;
  double rhat = std::numeric_limits<double>::quiet_NaN();
};

struct Summary {
  std::vector<ParamSummary> params;

  const ParamSummary& at(const std::string& name) const {
    for (const auto& p : params) {
      if (p.name == name) return p;
    }
    throw DomainError("Summary: no parameter named " + name);
  }
};

/// Empirical quantile by linear interpolation of order statistics
/// (position (n - 1) * prob in the sorted sample).
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  require(!sorted.empty(), "quantile: empty sample");
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double quantile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, prob);
}

inline ParamSummary summarize_column(const std::string& name, std::vector<double> column) {
  ParamSummary s;
  s.name = name;
  const auto n = static_cast<double>(column.size());
  double mean = 0.0;
  for (double v : column) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : column) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.sd = column.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::sort(column.begin(), column.end());
  s.q025 = quantile_sorted(column, 0.025);
  s.q975 = quantile_sorted(column, 0.975);
  s.ci_length = s.q975 - s.q025;
  return s;
}

using ConstrainFn = std::function<Vector(const Vector&)>;

/// Applies `constrain` to every draw, then summarizes each coordinate.
inline Summary summarize(const Draws& draws, const ConstrainFn& constrain,
                         const std::vector<std::string>& names = {}) {
  const auto n = draws.values.rows();
  require(n >= 100, "summarize: need at least 100 draws");
  std::vector<Vector> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) rows.push_back(constrain(draws.values.row(i).transpose()));
  const auto dim = rows.front().size();
  const auto& labels = names.empty() ? draws.names : names;
  Summary out;
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = rows[i][j];
    const std::string name =
        j < static_cast<Eigen::Index>(labels.size()) ? labels[j] : "x[" + std::to_string(j) + "]";
    out.params.push_back(summarize_column(name, column));
  }
  return out;
}

/// Split R-hat of one scalar quantity across chains (each chain split in half).
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half < 2) return std::numeric_limits<double>::quiet_NaN();
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
  }
  const auto m = static_cast<double>(halves.size());
  const auto n = static_cast<double>(halves.front().size());
  std::vector<double> means;
  double within = 0.0;
  for (const auto& h : halves) {
    double mean = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) mean += h[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) ss += (h[i] - mean) * (h[i] - mean);
    within += ss / (n - 1.0);
    means.push_back(mean);
  }
  within /= m;
  double grand = 0.0;
  for (double v : means) grand += v;
  grand /= m;
  double between = 0.0;
  for (double v : means) between += (v - grand) * (v - grand);
  between *= n / (m - 1.0);
  if (within <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * within + between / n;
  return std::sqrt(var_plus / within);
}

}  // namespace isamp
