#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "volmf/error.hpp"

namespace volmf {

// Pairwise (cascade) summation; the reduction tree depends only on the length,
// so results do not depend on how callers partition work.
inline double pairwise_sum(std::span<const double> x) noexcept {
  constexpr std::size_t kBlock = 32;
  if (x.size() <= kBlock) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

inline double mean(std::span<const double> x) {
  if (x.empty()) throw ValidationError("mean of empty sequence");
  return pairwise_sum(x) / static_cast<double>(x.size());
}

// Sample variance with the n-1 denominator.
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw ValidationError("variance needs at least 2 values");
  const double m = mean(x);
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
  return pairwise_sum(sq) / static_cast<double>(x.size() - 1);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // NaN when fewer than 3 points
  double r2 = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares y = intercept + slope * x.
inline LinearFit ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("ols: length mismatch");
  if (x.size() < 2) throw ValidationError("ols: need at least 2 points");
  const auto n = static_cast<double>(x.size());
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw ValidationError("ols: abscissae are all equal");
  LinearFit fit;
  fit.n = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - fit.intercept - fit.slope * x[i];
    sse += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.slope_se = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : std::nan("");
  return fit;
}

}  // namespace volmf
