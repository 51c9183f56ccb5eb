#pragma once

// Unconstrained minimizers used for maximum likelihood: a Nelder-Mead simplex
// for the global phase and BFGS with central-difference gradients for the
// polish, plus a central-difference Hessian.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace volmf::optim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Result {
  Vector x;
  double fx = std::numeric_limits<double>::infinity();
  std::size_t evals = 0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> history;  // best objective after each iteration
};

struct NelderMeadOptions {
  double initial_step = 0.5;
  std::size_t max_evals = 4000;
  double ftol = 1e-8;  // relative spread of vertex values
  double xtol = 1e-6;  // simplex diameter (inf-norm)
};

struct BfgsOptions {
  std::size_t max_iterations = 200;
  double ftol = 1e-8;  // relative change of the objective
  double xtol = 1e-6;  // inf-norm of the accepted step
  double gtol = 1e-6;
  double diff_step = 1e-5;
};

// Adaptive-parameter simplex (Gao & Han 2012 coefficients). The objective may
// return +inf to reject a point.
template <typename F>
Result nelder_mead(F&& f, const Vector& x0, const NelderMeadOptions& opt = {}) {
  const auto n = x0.size();
  const double nd = static_cast<double>(n);
  const double c_reflect = 1.0;
  const double c_expand = 1.0 + 2.0 / nd;
  const double c_contract = 0.75 - 0.5 / nd;
  const double c_shrink = 1.0 - 1.0 / nd;

  Result res;
  std::vector<Vector> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step;
  for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) vals[i] = f(pts[i]);
  res.evals = n + 1;

  std::vector<std::size_t> order(n + 1);
  auto eval = [&](const Vector& x) {
    ++res.evals;
    return f(x);
  };

  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    res.history.push_back(vals[best]);

    double diam = 0.0;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i)
      diam = std::max(diam, (pts[i] - pts[best]).template lpNorm<Eigen::Infinity>());
    const double spread = vals[worst] - vals[best];
    if (std::isfinite(vals[worst]) &&
        spread <= opt.ftol * (std::abs(vals[best]) + 1e-12) && diam <= opt.xtol) {
      res.converged = true;
      break;
    }
    if (res.evals >= opt.max_evals) break;
    ++res.iterations;

    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) centroid += pts[order[i]];
    centroid /= nd;

    const Vector xr = centroid + c_reflect * (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const Vector xe = centroid + c_expand * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Vector xc = outside ? Vector(centroid + c_contract * (xr - centroid))
                              : Vector(centroid - c_contract * (centroid - pts[worst]));
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
      if (i == best) continue;
      pts[i] = pts[best] + c_shrink * (pts[i] - pts[best]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.fx = *it;
  return res;
}

template <typename F>
Vector central_gradient(F&& f, const Vector& x, double rel_step, std::size_t& evals) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    evals += 2;
  }
  return g;
}

// BFGS on the inverse Hessian with Armijo backtracking. Every accepted step
// strictly lowers the objective.
template <typename F>
Result bfgs(F&& f, const Vector& x0, const BfgsOptions& opt = {}) {
  const auto n = x0.size();
  Result res;
  res.x = x0;
  res.fx = f(x0);
  res.evals = 1;
  if (!std::isfinite(res.fx)) return res;

  Matrix H = Matrix::Identity(n, n);
  Vector g = central_gradient(f, res.x, opt.diff_step, res.evals);
  res.history.push_back(res.fx);

  for (; res.iterations < opt.max_iterations; ++res.iterations) {
    if (!g.allFinite()) break;
    if (g.lpNorm<Eigen::Infinity>() <= opt.gtol) {
      res.converged = true;
      break;
    }
    Vector dir = -H * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      H.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    double t = 1.0;
    Vector x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      x_new = res.x + t * dir;
      f_new = f(x_new);
      ++res.evals;
      if (std::isfinite(f_new) && f_new <= res.fx + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // A failed search from a reset direction means no further progress is
      // available at this gradient resolution.
      if (H.isIdentity()) {
        res.converged = true;
        break;
      }
      H.setIdentity();
      continue;
    }
    const Vector s = x_new - res.x;
    const double f_old = res.fx;
    res.x = x_new;
    res.fx = f_new;
    res.history.push_back(f_new);
    const Vector g_new = central_gradient(f, res.x, opt.diff_step, res.evals);
    const Vector y = g_new - g;
    g = g_new;

    const double df = std::abs(f_old - f_new);
    if (df <= opt.ftol * (std::abs(f_new) + 1e-12) &&
        s.lpNorm<Eigen::Infinity>() <= opt.xtol) {
      res.converged = true;
      ++res.iterations;
      break;
    }
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
  }
  return res;
}

// Central-difference Hessian with per-coordinate steps.
template <typename F>
Matrix numerical_hessian(F&& f, const Vector& x, const Vector& steps) {
  const auto n = x.size();
  Matrix hess(n, n);
  const double f0 = f(x);
  auto at = [&](Eigen::Index i, double di, Eigen::Index j, double dj) {
    Vector y = x;
    y[i] += di;
    y[j] += dj;
    return f(y);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = steps[i];
    hess(i, i) = (at(i, hi, i, 0.0) - 2.0 * f0 + at(i, -hi, i, 0.0)) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double hj = steps[j];
      const double v = (at(i, hi, j, hj) - at(i, hi, j, -hj) - at(i, -hi, j, hj) +
                        at(i, -hi, j, -hj)) /
                       (4.0 * hi * hj);
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

}  // namespace volmf::optim
