#pragma once

// AR(1) mean with TGARCH(1,1) (GJR) conditional variance:
//
//   r_t       = mu + c1 r_{t-1} + eps_t,        eps_t = sigma_t eta_t
//   sigma^2_t = omega + alpha eps^2_{t-1} + beta sigma^2_{t-1}
//               + gamma eps^2_{t-1} I(eps_{t-1} < 0)
//
// with eta_t IID unit-variance Student-t, normal or GED. gamma < 0 means
// volatility reacts more to positive returns than to negative ones.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "volmf/distributions.hpp"
#include "volmf/error.hpp"
#include "volmf/io.hpp"
#include "volmf/numerics.hpp"
#include "volmf/optimize.hpp"
#include "volmf/rng.hpp"

namespace volmf {

struct TgarchParams {
  double mu = 0.0;
  double c1 = 0.0;
  double omega = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  Dist dist = Dist::normal;
  double shape = 0.0;  // nu for student-t, kappa for ged, unused for normal

  double persistence() const noexcept { return alpha + beta + 0.5 * gamma; }

  std::size_t free_count() const noexcept { return has_shape(dist) ? 7 : 6; }

  // Natural-parameter vector in the order of parameter_names().
  std::vector<double> to_vector() const {
    std::vector<double> v{mu, c1, omega, alpha, beta, gamma};
    if (has_shape(dist)) v.push_back(shape);
    return v;
  }

  static TgarchParams from_vector(std::span<const double> v, Dist dist) {
    TgarchParams p;
    p.dist = dist;
    p.mu = v[0];
    p.c1 = v[1];
    p.omega = v[2];
    p.alpha = v[3];
    p.beta = v[4];
    p.gamma = v[5];
    if (has_shape(dist)) p.shape = v[6];
    return p;
  }
};

inline std::vector<std::string> parameter_names(Dist dist) {
  std::vector<std::string> n{"mu", "c1", "omega", "alpha", "beta", "gamma"};
  if (dist == Dist::student_t) n.emplace_back("nu");
  if (dist == Dist::ged) n.emplace_back("kappa");
  return n;
}

// Empty string when the parameters satisfy every model constraint.
inline std::string constraint_violation(const TgarchParams& p) {
  const std::array<double, 6> v{p.mu, p.c1, p.omega, p.alpha, p.beta, p.gamma};
  for (double x : v)
    if (!std::isfinite(x)) return "non-finite parameter";
  if (!(p.omega > 0.0)) return "omega must be positive";
  if (p.alpha < 0.0) return "alpha must be nonnegative";
  if (p.beta < 0.0) return "beta must be nonnegative";
  if (p.alpha + p.gamma < 0.0) return "alpha + gamma must be nonnegative";
  if (!(p.persistence() < 1.0)) return "alpha + beta + gamma/2 must be below 1";
  if (!(std::abs(p.c1) < 1.0)) return "|c1| must be below 1";
  if (p.dist == Dist::student_t && !(p.shape > 2.0)) return "nu must exceed 2";
  if (p.dist == Dist::ged && !(p.shape > 0.0)) return "kappa must be positive";
  return {};
}

inline void validate(const TgarchParams& p) {
  if (auto why = constraint_violation(p); !why.empty()) throw ValidationError(why);
}

struct VolatilityPath {
  std::vector<double> sigma2;
  std::vector<double> eps;
  double sigma2_init = 0.0;
};

namespace detail {

// Runs the variance recursion, calling visit(t, eps_t, sigma2_t) for every t.
// Presample: eps_0 = 0 and sigma^2_0 = sigma2_init, so sigma^2 at the first
// return is omega + beta sigma2_init. The first residual is taken against the
// unconditional mean mu / (1 - c1); later ones use the AR(1) lag.
template <typename Visit>
void tgarch_recursion(const TgarchParams& p, std::span<const double> r, double sigma2_init,
                      Visit&& visit) {
  if (!(std::abs(p.c1) < 1.0)) throw ValidationError("|c1| must be below 1");
  double sigma2 = p.omega + p.beta * sigma2_init;
  double eps = r[0] - p.mu / (1.0 - p.c1);
  for (std::size_t t = 0;; ++t) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
      throw NumericalError("non-positive conditional variance at index " + std::to_string(t));
    visit(t, eps, sigma2);
    if (t + 1 == r.size()) break;
    const double arch = eps < 0.0 ? p.alpha + p.gamma : p.alpha;
    sigma2 = p.omega + arch * eps * eps + p.beta * sigma2;
    eps = r[t + 1] - p.mu - p.c1 * r[t];
  }
}

}  // namespace detail

inline double presample_variance(std::span<const double> returns) {
  return sample_variance(returns);
}

inline VolatilityPath filter_volatility(const TgarchParams& p, std::span<const double> returns,
                                        std::optional<double> sigma2_init = std::nullopt) {
  if (returns.size() < 2) throw ValidationError("filter needs at least 2 returns");
  VolatilityPath path;
  path.sigma2_init = sigma2_init ? *sigma2_init : presample_variance(returns);
  path.sigma2.resize(returns.size());
  path.eps.resize(returns.size());
  detail::tgarch_recursion(p, returns, path.sigma2_init, [&](std::size_t t, double e, double s2) {
    path.eps[t] = e;
    path.sigma2[t] = s2;
  });
  return path;
}

// Negative log-likelihood conditional on the first observation. Constraint
// checks are left to the caller so that finite differences may step just
// outside the admissible region; only the shape and the sign of sigma^2 are
// enforced here.
inline double neg_log_likelihood(const TgarchParams& p, std::span<const double> returns,
                                 std::optional<double> sigma2_init = std::nullopt) {
  if (returns.size() < 2) throw ValidationError("likelihood needs at least 2 returns");
  const LogDensity logf(p.dist, p.shape);
  const double s2init = sigma2_init ? *sigma2_init : presample_variance(returns);
  double nll = 0.0;
  detail::tgarch_recursion(p, returns, s2init, [&](std::size_t t, double e, double s2) {
    if (t == 0) return;
    nll -= logf(e / std::sqrt(s2)) - 0.5 * std::log(s2);
  });
  if (!std::isfinite(nll)) throw NumericalError("non-finite likelihood");
  return nll;
}

inline std::vector<double> simulate(const TgarchParams& p, std::size_t n, std::uint64_t seed,
                                    std::size_t burn_in = 1000) {
  validate(p);
  Rng rng(seed);
  double sigma2 = p.omega / (1.0 - p.persistence());
  double eps = 0.0;
  double r_prev = p.mu / (1.0 - p.c1);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t t = 0; t < n + burn_in; ++t) {
    const double arch = eps < 0.0 ? p.alpha + p.gamma : p.alpha;
    sigma2 = p.omega + arch * eps * eps + p.beta * sigma2;
    eps = std::sqrt(sigma2) * draw_innovation(p.dist, p.shape, rng);
    const double r = p.mu + p.c1 * r_prev + eps;
    r_prev = r;
    if (t >= burn_in) out.push_back(r);
  }
  return out;
}

struct StdErrorResult {
  std::vector<double> se;  // empty unless hessian_ok
  bool hessian_ok = false;
  Eigen::MatrixXd hessian;
};

// Asymptotic errors from the inverse of the central-difference Hessian of the
// NLL in natural parameters. `free` selects the parameters treated as
// estimated (all by default); fixed ones get no entry.
inline StdErrorResult std_errors(std::span<const double> returns, const TgarchParams& params,
                                 std::vector<bool> free = {}) {
  const auto theta = params.to_vector();
  if (free.empty()) free.assign(theta.size(), true);
  if (free.size() != theta.size()) throw ValidationError("free mask has wrong length");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < free.size(); ++i)
    if (free[i]) idx.push_back(i);
  const auto k = static_cast<Eigen::Index>(idx.size());
  const double s2init = presample_variance(returns);

  auto nll = [&](const Eigen::VectorXd& x) {
    auto full = theta;
    for (Eigen::Index j = 0; j < k; ++j) full[idx[j]] = x[j];
    try {
      return neg_log_likelihood(TgarchParams::from_vector(full, params.dist), returns, s2init);
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  Eigen::VectorXd x(k), steps(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    x[j] = theta[idx[j]];
    steps[j] = 1e-4 * std::max(std::abs(x[j]), 0.1);
  }
  StdErrorResult out;
  out.hessian = optim::numerical_hessian(nll, x, steps);
  if (!out.hessian.allFinite()) return out;
  Eigen::LLT<Eigen::MatrixXd> llt(out.hessian);
  if (llt.info() != Eigen::Success) return out;
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k, k));
  std::vector<double> se(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(cov(j, j) > 0.0) || !std::isfinite(cov(j, j))) return out;
    se[static_cast<std::size_t>(j)] = std::sqrt(cov(j, j));
  }
  out.se = std::move(se);
  out.hessian_ok = true;
  return out;
}

struct FitConfig {
  std::size_t min_length = 100;
  std::size_t starts = 5;  // moment-matched start plus (starts - 1) perturbations
  std::size_t max_restarts = 2;
  std::uint64_t seed = 20200606;
  double perturbation = 0.5;  // sd of start jitter in transformed coordinates
  std::size_t simplex_max_evals = 1500;
  double ftol = 1e-8;
  double xtol = 1e-6;
};

struct TgarchFit {
  TgarchParams params;
  std::vector<double> std_errors;  // natural parameters; empty unless hessian_ok
  double loglik = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool hessian_ok = false;
  std::size_t nobs = 0;
  std::vector<double> start_nll;      // NLL at each multi-start initial point
  std::vector<double> polish_history; // NLL after each accepted quasi-Newton step
};

namespace detail {

// Smooth bijection between R^k and the admissible region:
//   mu    = 0.1 sd u0          c1 = tanh(u1)        omega = var exp(u2)
//   (alpha/2, (alpha+gamma)/2, beta, slack) = softmax(u3, u4, u5, 0)
//   nu = 2 + exp(u6)           kappa = exp(u6)
class TgarchTransform {
 public:
  TgarchTransform(Dist dist, double mean_scale, double var_scale)
      : dist_(dist), mscale_(mean_scale), vscale_(var_scale) {}

  TgarchParams to_params(const Eigen::VectorXd& u) const {
    TgarchParams p;
    p.dist = dist_;
    p.mu = mscale_ * u[0];
    p.c1 = std::tanh(u[1]);
    p.omega = vscale_ * std::exp(u[2]);
    const double m = std::max({u[3], u[4], u[5], 0.0});
    const double e1 = std::exp(u[3] - m), e2 = std::exp(u[4] - m), e3 = std::exp(u[5] - m),
                 e0 = std::exp(-m);
    const double z = e0 + e1 + e2 + e3;
    p.alpha = 2.0 * e1 / z;
    p.gamma = 2.0 * e2 / z - p.alpha;
    p.beta = e3 / z;
    if (dist_ == Dist::student_t) p.shape = 2.0 + std::exp(u[6]);
    if (dist_ == Dist::ged) p.shape = std::exp(u[6]);
    return p;
  }

  // Requires a strictly interior point.
  Eigen::VectorXd from_params(const TgarchParams& p) const {
    Eigen::VectorXd u(has_shape(dist_) ? 7 : 6);
    u[0] = p.mu / mscale_;
    u[1] = std::atanh(p.c1);
    u[2] = std::log(p.omega / vscale_);
    const double w1 = 0.5 * p.alpha, w2 = 0.5 * (p.alpha + p.gamma), w3 = p.beta;
    const double w0 = 1.0 - w1 - w2 - w3;
    u[3] = std::log(w1 / w0);
    u[4] = std::log(w2 / w0);
    u[5] = std::log(w3 / w0);
    if (dist_ == Dist::student_t) u[6] = std::log(p.shape - 2.0);
    if (dist_ == Dist::ged) u[6] = std::log(p.shape);
    return u;
  }

 private:
  Dist dist_;
  double mscale_;
  double vscale_;
};

inline double lag1_autocorrelation(std::span<const double> r) {
  const double m = mean(r);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    den += (r[i] - m) * (r[i] - m);
    if (i) num += (r[i] - m) * (r[i - 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace detail

// Moment-matched initial point.
inline TgarchParams initial_guess(std::span<const double> returns, Dist dist) {
  TgarchParams p;
  p.dist = dist;
  p.c1 = std::clamp(detail::lag1_autocorrelation(returns), -0.3, 0.3);
  p.mu = mean(returns) * (1.0 - p.c1);
  p.alpha = 0.05;
  p.gamma = 0.0;
  p.beta = 0.85;
  p.omega = sample_variance(returns) * (1.0 - p.persistence());
  if (dist == Dist::student_t) p.shape = 6.0;
  if (dist == Dist::ged) p.shape = 1.5;
  return p;
}

// Maximum likelihood: seeded multi-start simplex search in transformed
// coordinates, then BFGS polish of the best candidate.
inline TgarchFit fit(std::span<const double> returns, Dist dist, const FitConfig& cfg = {}) {
  if (returns.size() < std::max<std::size_t>(cfg.min_length, 3))
    throw ValidationError("fit needs at least " + std::to_string(cfg.min_length) + " returns");
  const double var = sample_variance(returns);
  if (!(var > 0.0)) throw ValidationError("degenerate sample");
  const double s2init = var;
  const detail::TgarchTransform tr(dist, 0.1 * std::sqrt(var), var);

  TgarchFit out;
  out.nobs = returns.size();
  auto objective = [&](const Eigen::VectorXd& u) {
    ++out.evaluations;
    const auto p = tr.to_params(u);
    if (!constraint_violation(p).empty()) return std::numeric_limits<double>::infinity();
    try {
      return neg_log_likelihood(p, returns, s2init);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<Eigen::VectorXd> starts;
  starts.push_back(tr.from_params(initial_guess(returns, dist)));
  Rng rng(cfg.seed);
  for (std::size_t k = 1; k < cfg.starts; ++k) {
    Eigen::VectorXd u = starts.front();
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += cfg.perturbation * standard_normal(rng);
    starts.push_back(u);
  }

  optim::NelderMeadOptions nm;
  nm.max_evals = cfg.simplex_max_evals;
  nm.ftol = cfg.ftol;
  nm.xtol = cfg.xtol;
  optim::Result best;
  for (const auto& u0 : starts) {
    out.start_nll.push_back(objective(u0));
    auto r = optim::nelder_mead(objective, u0, nm);
    out.iterations += r.iterations;
    if (r.fx < best.fx) best = std::move(r);
  }
  if (!std::isfinite(best.fx)) throw NumericalError("no admissible starting point");

  optim::BfgsOptions bo;
  bo.ftol = cfg.ftol;
  bo.xtol = cfg.xtol;
  for (std::size_t attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    auto polished = optim::bfgs(objective, best.x, bo);
    out.iterations += polished.iterations;
    out.polish_history.insert(out.polish_history.end(), polished.history.begin(),
                              polished.history.end());
    const bool improved = polished.fx <= best.fx;
    if (improved) {
      best.x = polished.x;
      best.fx = polished.fx;
    }
    if (polished.converged) {
      out.converged = true;
      break;
    }
    // restart the simplex around the current best point
    nm.initial_step = 0.1;
    auto r = optim::nelder_mead(objective, best.x, nm);
    out.iterations += r.iterations;
    if (r.fx < best.fx) {
      best.x = r.x;
      best.fx = r.fx;
    }
  }

  out.params = tr.to_params(best.x);
  out.loglik = -best.fx;
  const auto se = std_errors(returns, out.params);
  out.hessian_ok = se.hessian_ok;
  out.std_errors = se.se;
  return out;
}

inline nlohmann::json to_json(const TgarchParams& p) {
  nlohmann::json j{{"mu", p.mu},       {"c1", p.c1},     {"omega", p.omega},
                   {"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma}};
  if (p.dist == Dist::student_t) j["nu"] = p.shape;
  if (p.dist == Dist::ged) j["kappa"] = p.shape;
  return j;
}

inline nlohmann::json to_json(const TgarchFit& f) {
  const auto names = parameter_names(f.params.dist);
  nlohmann::json se = nlohmann::json::object();
  for (std::size_t i = 0; i < names.size(); ++i)
    se[names[i]] = f.hessian_ok ? nlohmann::json(f.std_errors[i]) : nlohmann::json();
  return {{"model", "AR(1)-TGARCH(1,1)"},
          {"dist", to_string(f.params.dist)},
          {"nobs", f.nobs},
          {"params", to_json(f.params)},
          {"std_errors", se},
          {"loglik", f.loglik},
          {"persistence", f.params.persistence()},
          {"converged", f.converged},
          {"iterations", f.iterations},
          {"evaluations", f.evaluations},
          {"hessian_ok", f.hessian_ok}};
}

// Flat columns used by rolling tracks.
inline std::vector<std::string> csv_columns(Dist dist) {
  auto names = parameter_names(dist);
  std::vector<std::string> cols = names;
  for (const auto& n : names) cols.push_back("se_" + n);
  cols.insert(cols.end(), {"loglik", "converged", "hessian_ok"});
  return cols;
}

inline std::vector<double> csv_values(const TgarchFit& f) {
  auto v = f.params.to_vector();
  const auto k = v.size();
  for (std::size_t i = 0; i < k; ++i)
    v.push_back(f.hessian_ok ? f.std_errors[i] : std::nan(""));
  v.push_back(f.loglik);
  v.push_back(f.converged ? 1.0 : 0.0);
  v.push_back(f.hessian_ok ? 1.0 : 0.0);
  return v;
}

}  // namespace volmf
