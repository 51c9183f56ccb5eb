#pragma once

// Multifractal detrended fluctuation analysis.
//
// Pipeline: profile -> per-scale segment variances after polynomial
// detrending (forward and backward segmentations) -> q-th order fluctuation
// functions F_q(s) -> generalized Hurst exponents h(q) from log-log slopes ->
// multifractality degrees and the singularity spectrum (alpha, f(alpha)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "volmf/error.hpp"
#include "volmf/io.hpp"
#include "volmf/numerics.hpp"

namespace volmf::mfdfa {

// q = i / 5 for i in [-125, 125]; lands exactly on 0 and on every integer.
inline std::vector<double> default_q_grid() {
  std::vector<double> q;
  for (int i = -125; i <= 125; ++i) q.push_back(i / 5.0);
  return q;
}

// `count` log-spaced integer scales in [lo, hi], duplicates removed.
inline std::vector<int> log_spaced_scales(int lo, int hi, int count) {
  std::vector<int> s;
  for (int k = 0; k < count; ++k) {
    const double t = count > 1 ? static_cast<double>(k) / (count - 1) : 0.0;
    s.push_back(static_cast<int>(std::lround(lo * std::pow(static_cast<double>(hi) / lo, t))));
  }
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

// Every integer in [lo, hi].
inline std::vector<int> integer_scales(int lo, int hi) {
  std::vector<int> s;
  for (int v = lo; v <= hi; ++v) s.push_back(v);
  return s;
}

struct Config {
  std::vector<double> q_grid = default_q_grid();
  std::vector<int> s_grid = integer_scales(20, 100);
  int detrend_order = 3;
  std::pair<int, int> fit_range{20, 100};
  double degree_q = 4.0;
};

inline void validate(const Config& c) {
  if (c.detrend_order < 0) throw ValidationError("detrend order must be nonnegative");
  if (c.q_grid.empty() || c.s_grid.empty()) throw ValidationError("empty q or s grid");
  if (!std::is_sorted(c.q_grid.begin(), c.q_grid.end()) ||
      std::adjacent_find(c.q_grid.begin(), c.q_grid.end()) != c.q_grid.end())
    throw ValidationError("q grid must be strictly increasing");
  if (!std::is_sorted(c.s_grid.begin(), c.s_grid.end()) ||
      std::adjacent_find(c.s_grid.begin(), c.s_grid.end()) != c.s_grid.end())
    throw ValidationError("s grid must be strictly increasing");
  if (c.s_grid.front() < c.detrend_order + 2)
    throw ValidationError("every scale must be at least detrend_order + 2");
  for (std::size_t i = 0; i < c.q_grid.size(); ++i) {
    const double mirror = c.q_grid[c.q_grid.size() - 1 - i];
    if (std::abs(c.q_grid[i] + mirror) > 1e-9) throw ValidationError("q grid must be symmetric about 0");
  }
  if (c.fit_range.first > c.fit_range.second || c.fit_range.first < c.s_grid.front() ||
      c.fit_range.second > c.s_grid.back())
    throw ValidationError("fit range must lie within the s grid span");
}

// Y(i) = sum_{j <= i} (r_j - <r>)
inline std::vector<double> profile(std::span<const double> returns) {
  if (returns.size() < 2) throw ValidationError("profile needs at least 2 values");
  const double m = mean(returns);
  std::vector<double> y(returns.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    acc += returns[i] - m;
    y[i] = acc;
  }
  return y;
}

// Orthonormal polynomial basis of degree <= order on s equispaced points of
// [-1, 1], by twice-iterated Gram-Schmidt. Row k has degree k.
class SegmentDetrender {
 public:
  SegmentDetrender(int s, int order) : s_(static_cast<std::size_t>(s)) {
    const std::size_t m = static_cast<std::size_t>(order) + 1;
    basis_.assign(m, std::vector<double>(s_));
    std::vector<double> x(s_);
    for (std::size_t i = 0; i < s_; ++i)
      x[i] = s_ > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(s_ - 1) : 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      auto& b = basis_[k];
      for (std::size_t i = 0; i < s_; ++i) b[i] = std::pow(x[i], static_cast<double>(k));
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) {
          double dot = 0.0;
          for (std::size_t i = 0; i < s_; ++i) dot += b[i] * basis_[j][i];
          for (std::size_t i = 0; i < s_; ++i) b[i] -= dot * basis_[j][i];
        }
      }
      double norm = 0.0;
      for (double v : b) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : b) v /= norm;
    }
    work_.resize(s_);
  }

  struct Variance {
    double value;  // mean squared residual
    bool zero;     // residual indistinguishable from rounding
  };

  Variance residual_variance(std::span<const double> y) {
    const double y0 = y[0];
    double raw = 0.0;
    for (std::size_t i = 0; i < s_; ++i) {
      work_[i] = y[i] - y0;
      raw += work_[i] * work_[i];
    }
    for (const auto& b : basis_) {
      double c = 0.0;
      for (std::size_t i = 0; i < s_; ++i) c += b[i] * work_[i];
      for (std::size_t i = 0; i < s_; ++i) work_[i] -= c * b[i];
    }
    double ss = 0.0;
    for (double v : work_) ss += v * v;
    const double var = ss / static_cast<double>(s_);
    const double floor = std::max(1e-30, 1e-24 * raw / static_cast<double>(s_));
    return {var, !(var > floor)};
  }

 private:
  std::size_t s_;
  std::vector<std::vector<double>> basis_;
  std::vector<double> work_;
};

// Segment variances F^2(nu, s): N_s forward segments from the start, then N_s
// backward segments from the end.
struct SegmentVariances {
  std::vector<double> values;
  std::vector<bool> zero;
};

inline SegmentVariances segment_variances(std::span<const double> y, int s, int order) {
  const std::size_t n = y.size();
  const std::size_t len = static_cast<std::size_t>(s);
  const std::size_t ns = n / len;
  SegmentDetrender det(s, order);
  SegmentVariances out;
  out.values.reserve(2 * ns);
  out.zero.reserve(2 * ns);
  for (std::size_t v = 0; v < ns; ++v) {
    const auto r = det.residual_variance(y.subspan(v * len, len));
    out.values.push_back(r.value);
    out.zero.push_back(r.zero);
  }
  for (std::size_t v = 0; v < ns; ++v) {
    const auto r = det.residual_variance(y.subspan(n - (v + 1) * len, len));
    out.values.push_back(r.value);
    out.zero.push_back(r.zero);
  }
  return out;
}

struct FluctuationMatrix {
  std::vector<double> q;
  std::vector<int> s;
  std::vector<double> log_f;             // ln F_q(s), q-major: [iq * s.size() + is]
  std::vector<std::size_t> excluded;     // zero-variance segments left out, same layout
  std::vector<std::size_t> segments;     // 2 N_s per scale

  double log_at(std::size_t iq, std::size_t is) const { return log_f[iq * s.size() + is]; }
  double at(std::size_t iq, std::size_t is) const { return std::exp(log_at(iq, is)); }
  std::size_t excluded_at(std::size_t iq, std::size_t is) const {
    return excluded[iq * s.size() + is];
  }
};

// ln F^2 of the segments with nonzero variance, plus how many were zero.
struct SegmentLogs {
  std::vector<double> logs;
  std::size_t zero_count = 0;
  std::size_t total = 0;
};

inline SegmentLogs segment_logs(const SegmentVariances& sv) {
  SegmentLogs out;
  out.total = sv.values.size();
  out.logs.reserve(sv.values.size());
  for (std::size_t i = 0; i < sv.values.size(); ++i) {
    if (sv.zero[i])
      ++out.zero_count;
    else
      out.logs.push_back(std::log(sv.values[i]));
  }
  return out;
}

// ln F_q. For q > 0 zero-variance segments contribute exactly zero to the
// mean; for q <= 0 they are excluded from it and counted in `excluded`.
inline double log_fluctuation(const SegmentLogs& sl, double q, std::size_t& excluded,
                              std::vector<double>& scratch) {
  if (sl.logs.empty()) throw NumericalError("all segments have zero variance");
  excluded = q <= 0.0 ? sl.zero_count : 0;
  const double count = static_cast<double>(sl.total - excluded);
  if (q == 0.0) return 0.5 * pairwise_sum(sl.logs) / count;
  const double half_q = 0.5 * q;
  double top = -std::numeric_limits<double>::infinity();
  for (double l : sl.logs) top = std::max(top, half_q * l);
  scratch.resize(sl.logs.size());
  for (std::size_t i = 0; i < sl.logs.size(); ++i) scratch[i] = std::exp(half_q * sl.logs[i] - top);
  return (top + std::log(pairwise_sum(scratch)) - std::log(count)) / q;
}

inline FluctuationMatrix fluctuation(std::span<const double> profile, const Config& cfg) {
  validate(cfg);
  const auto n = profile.size();
  if (n < 2 * static_cast<std::size_t>(cfg.s_grid.back()))
    throw ValidationError("profile of length " + std::to_string(n) +
                          " is shorter than twice the largest scale");
  FluctuationMatrix fm;
  fm.q = cfg.q_grid;
  fm.s = cfg.s_grid;
  const std::size_t nq = fm.q.size(), ns = fm.s.size();
  fm.log_f.assign(nq * ns, 0.0);
  fm.excluded.assign(nq * ns, 0);
  std::vector<double> scratch;
  for (std::size_t is = 0; is < ns; ++is) {
    const auto sl = segment_logs(segment_variances(profile, fm.s[is], cfg.detrend_order));
    fm.segments.push_back(sl.total);
    for (std::size_t iq = 0; iq < nq; ++iq) {
      std::size_t excl = 0;
      try {
        fm.log_f[iq * ns + is] = log_fluctuation(sl, fm.q[iq], excl, scratch);
      } catch (const NumericalError& e) {
        throw NumericalError("F_q(s) undefined at q=" + io::fmt(fm.q[iq]) +
                             ", s=" + std::to_string(fm.s[is]) + ": " + e.what());
      }
      fm.excluded[iq * ns + is] = excl;
    }
  }
  return fm;
}

struct HurstCurve {
  std::vector<double> q;
  std::vector<double> h;
  std::vector<double> se;
  std::vector<double> r2;
  std::pair<int, int> fit_range{0, 0};
};

// h(q) = OLS slope of ln F_q(s) on ln s over scales inside fit_range.
inline HurstCurve generalized_hurst(const FluctuationMatrix& fm, std::pair<int, int> fit_range) {
  std::vector<std::size_t> cols;
  std::vector<double> ls;
  for (std::size_t is = 0; is < fm.s.size(); ++is) {
    if (fm.s[is] < fit_range.first || fm.s[is] > fit_range.second) continue;
    cols.push_back(is);
    ls.push_back(std::log(static_cast<double>(fm.s[is])));
  }
  if (cols.size() < 3) throw ValidationError("need at least 3 scales inside the fit range");
  HurstCurve hc;
  hc.fit_range = fit_range;
  hc.q = fm.q;
  std::vector<double> lf(cols.size());
  for (std::size_t iq = 0; iq < fm.q.size(); ++iq) {
    for (std::size_t k = 0; k < cols.size(); ++k) lf[k] = fm.log_at(iq, cols[k]);
    const auto fit = ols(ls, lf);
    hc.h.push_back(fit.slope);
    hc.se.push_back(fit.slope_se);
    hc.r2.push_back(fit.r2);
  }
  return hc;
}

inline std::size_t grid_index(const std::vector<double>& grid, double q) {
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::abs(grid[i] - q) <= 1e-9) return i;
  throw ValidationError("q=" + io::fmt(q) + " is not on the grid");
}

// Delta h(q) = h(-q) - h(q)
inline double multifractality_degree(const HurstCurve& hc, double q) {
  if (!(q > 0.0)) throw ValidationError("degree moment must be positive");
  return hc.h[grid_index(hc.q, -q)] - hc.h[grid_index(hc.q, q)];
}

struct SingularitySpectrum {
  std::vector<double> q;
  std::vector<double> alpha;
  std::vector<double> f;
  std::string derivative_scheme = "central differences, one-sided at grid ends";
};

// alpha = h + q h'(q), f = q (alpha - h) + 1
inline SingularitySpectrum singularity_spectrum(const HurstCurve& hc) {
  const std::size_t n = hc.q.size();
  if (n < 3) throw ValidationError("spectrum needs at least 3 grid points");
  const double step = hc.q[1] - hc.q[0];
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(hc.q[i] - hc.q[i - 1] - step) > 1e-9 * std::max(1.0, std::abs(step)))
      throw ValidationError("spectrum needs a uniform q grid");
  SingularitySpectrum sp;
  sp.q = hc.q;
  for (std::size_t i = 0; i < n; ++i) {
    double dh;
    if (i == 0)
      dh = (hc.h[1] - hc.h[0]) / (hc.q[1] - hc.q[0]);
    else if (i + 1 == n)
      dh = (hc.h[n - 1] - hc.h[n - 2]) / (hc.q[n - 1] - hc.q[n - 2]);
    else
      dh = (hc.h[i + 1] - hc.h[i - 1]) / (hc.q[i + 1] - hc.q[i - 1]);
    const double a = hc.h[i] + hc.q[i] * dh;
    sp.alpha.push_back(a);
    sp.f.push_back(hc.q[i] * (a - hc.h[i]) + 1.0);
  }
  return sp;
}

// Delta alpha(q) = alpha(-q) - alpha(q)
inline double delta_alpha(const SingularitySpectrum& sp, double q) {
  if (!(q > 0.0)) throw ValidationError("degree moment must be positive");
  return sp.alpha[grid_index(sp.q, -q)] - sp.alpha[grid_index(sp.q, q)];
}

struct Analysis {
  FluctuationMatrix fluct;
  HurstCurve hurst;
  SingularitySpectrum spectrum;
  double h2 = 0.0;
  double delta_h = 0.0;      // at cfg.degree_q
  double delta_alpha = 0.0;  // at cfg.degree_q
};

inline Analysis analyze(std::span<const double> returns, const Config& cfg = {}) {
  Analysis a;
  const auto y = profile(returns);
  a.fluct = fluctuation(y, cfg);
  a.hurst = generalized_hurst(a.fluct, cfg.fit_range);
  a.spectrum = singularity_spectrum(a.hurst);
  a.h2 = a.hurst.h[grid_index(a.hurst.q, 2.0)];
  a.delta_h = multifractality_degree(a.hurst, cfg.degree_q);
  a.delta_alpha = volmf::mfdfa::delta_alpha(a.spectrum, cfg.degree_q);
  return a;
}

// `q,s,F`
inline void write_csv(std::ostream& os, const FluctuationMatrix& fm) {
  io::write_row(os, {"q", "s", "F"});
  for (std::size_t iq = 0; iq < fm.q.size(); ++iq)
    for (std::size_t is = 0; is < fm.s.size(); ++is)
      io::write_row(os, {io::fmt(fm.q[iq]), std::to_string(fm.s[is]), io::fmt(fm.at(iq, is))});
}

// `q,h,se`
inline void write_csv(std::ostream& os, const HurstCurve& hc) {
  io::write_row(os, {"q", "h", "se"});
  for (std::size_t i = 0; i < hc.q.size(); ++i)
    io::write_row(os, {io::fmt(hc.q[i]), io::fmt(hc.h[i]), io::fmt(hc.se[i])});
}

// `q,alpha,f`
inline void write_csv(std::ostream& os, const SingularitySpectrum& sp) {
  io::write_row(os, {"q", "alpha", "f"});
  for (std::size_t i = 0; i < sp.q.size(); ++i)
    io::write_row(os, {io::fmt(sp.q[i]), io::fmt(sp.alpha[i]), io::fmt(sp.f[i])});
}

inline nlohmann::json to_json(const Analysis& a, const Config& cfg) {
  std::size_t excluded = 0;
  for (auto e : a.fluct.excluded) excluded += e;
  return {{"h2", a.h2},
          {"degree_q", cfg.degree_q},
          {"delta_h", a.delta_h},
          {"delta_alpha", a.delta_alpha},
          {"detrend_order", cfg.detrend_order},
          {"fit_range", {cfg.fit_range.first, cfg.fit_range.second}},
          {"scales", cfg.s_grid},
          {"q_min", cfg.q_grid.front()},
          {"q_max", cfg.q_grid.back()},
          {"q_count", cfg.q_grid.size()},
          {"excluded_segments", excluded}};
}

}  // namespace volmf::mfdfa
