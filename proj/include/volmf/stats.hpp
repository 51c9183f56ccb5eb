#pragma once

// Descriptive statistics with delete-one jackknife errors, the cumulative
// volatility series, and the aggregational-Gaussianity kurtosis scan.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "volmf/error.hpp"
#include "volmf/ingest.hpp"
#include "volmf/io.hpp"
#include "volmf/numerics.hpp"

namespace volmf {

struct DescriptiveStats {
  double mean = 0.0;
  double sd = 0.0;
  double kurtosis = 0.0;  // Pearson, Gaussian = 3
  double skewness = 0.0;
  std::size_t nobs = 0;
  double se_mean = 0.0;
  double se_sd = 0.0;
  double se_kurtosis = 0.0;
  double se_skewness = 0.0;
};

// sqrt((n-1)/n * sum_i (theta_i - theta_bar)^2) over delete-one replicates.
inline double jackknife_se_from_replicates(std::span<const double> replicates) {
  const std::size_t n = replicates.size();
  if (n < 2) throw ValidationError("jackknife needs at least 2 replicates");
  const double m = mean(replicates);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (replicates[i] - m) * (replicates[i] - m);
  const auto nd = static_cast<double>(n);
  return std::sqrt((nd - 1.0) / nd * pairwise_sum(sq));
}

// Generic delete-one jackknife; O(n^2) for statistics that look at every value.
template <typename Statistic>
double jackknife_se(std::span<const double> values, Statistic&& statistic) {
  const std::size_t n = values.size();
  if (n < 2) throw ValidationError("jackknife needs at least 2 values");
  std::vector<double> sub(n - 1);
  std::vector<double> reps(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(i), sub.begin());
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(i) + 1, values.end(),
              sub.begin() + static_cast<std::ptrdiff_t>(i));
    try {
      reps[i] = statistic(std::span<const double>(sub));
    } catch (const Error& e) {
      throw NumericalError("jackknife subsample " + std::to_string(i) + ": " + e.what());
    }
    if (!std::isfinite(reps[i]))
      throw NumericalError("jackknife subsample " + std::to_string(i) + ": non-finite statistic");
  }
  return jackknife_se_from_replicates(reps);
}

namespace detail {

struct Moments {
  double mean, sd, skewness, kurtosis;
};

// Central moments from power sums of deviations about a reference point.
inline Moments moments_from_sums(double ref, double t1, double t2, double t3, double t4,
                                 double n) {
  const double d = t1 / n;
  const double a2 = t2 / n, a3 = t3 / n, a4 = t4 / n;
  const double m2 = a2 - d * d;
  const double m3 = a3 - 3.0 * d * a2 + 2.0 * d * d * d;
  const double m4 = a4 - 4.0 * d * a3 + 6.0 * d * d * a2 - 3.0 * d * d * d * d;
  return {ref + d, std::sqrt(m2 * n / (n - 1.0)), m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
}

}  // namespace detail

inline double skewness(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m3 += d * d * d;
  }
  const auto n = static_cast<double>(x.size());
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) throw ValidationError("degenerate sample");
  return m3 / std::pow(m2, 1.5);
}

inline double kurtosis(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  const auto n = static_cast<double>(x.size());
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw ValidationError("degenerate sample");
  return m4 / (m2 * m2);
}

// Mean, sd (n-1), skewness and Pearson kurtosis (n-denominator central
// moments), each with a jackknife error. Delete-one replicates are computed
// in O(n) from power sums about the full-sample mean.
inline DescriptiveStats descriptive(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 4) throw ValidationError("descriptive statistics need at least 4 values");
  const double m = mean(values);
  std::vector<double> p1(n), p2(n), p3(n), p4(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - m;
    p1[i] = d;
    p2[i] = d * d;
    p3[i] = p2[i] * d;
    p4[i] = p2[i] * p2[i];
  }
  const double s1 = pairwise_sum(p1), s2 = pairwise_sum(p2), s3 = pairwise_sum(p3),
               s4 = pairwise_sum(p4);
  const auto nd = static_cast<double>(n);
  if (!(s2 / nd > 0.0) || s2 / nd <= 1e-28 * m * m) throw ValidationError("degenerate sample");

  const auto full = detail::moments_from_sums(m, s1, s2, s3, s4, nd);
  DescriptiveStats out;
  out.nobs = n;
  out.mean = full.mean;
  out.sd = full.sd;
  out.skewness = full.skewness;
  out.kurtosis = full.kurtosis;

  std::vector<double> rm(n), rsd(n), rsk(n), rku(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto sub = detail::moments_from_sums(m, s1 - p1[i], s2 - p2[i], s3 - p3[i],
                                               s4 - p4[i], nd - 1.0);
    if (!std::isfinite(sub.kurtosis) || !std::isfinite(sub.skewness))
      throw NumericalError("jackknife subsample " + std::to_string(i) + ": degenerate sample");
    rm[i] = sub.mean;
    rsd[i] = sub.sd;
    rsk[i] = sub.skewness;
    rku[i] = sub.kurtosis;
  }
  out.se_mean = jackknife_se_from_replicates(rm);
  out.se_sd = jackknife_se_from_replicates(rsd);
  out.se_skewness = jackknife_se_from_replicates(rsk);
  out.se_kurtosis = jackknife_se_from_replicates(rku);
  return out;
}

enum class RbarMode {
  mean_abs,  // r_bar = mean |r_t|, series is drift-free
  mean       // r_bar = mean r_t
};

struct VolatilitySeries {
  std::vector<double> values;  // s_0 .. s_N
  double r_bar = 0.0;
  RbarMode mode = RbarMode::mean_abs;
};

// s_t = s_{t-1} + |r_t| - r_bar
inline VolatilitySeries volatility_series(std::span<const double> returns, double s0 = 0.0,
                                          RbarMode mode = RbarMode::mean_abs) {
  if (returns.empty()) throw ValidationError("volatility series needs returns");
  VolatilitySeries out;
  out.mode = mode;
  if (mode == RbarMode::mean_abs) {
    std::vector<double> a(returns.size());
    std::transform(returns.begin(), returns.end(), a.begin(), [](double r) { return std::abs(r); });
    out.r_bar = mean(a);
  } else {
    out.r_bar = mean(returns);
  }
  out.values.reserve(returns.size() + 1);
  out.values.push_back(s0);
  double s = s0;
  for (double r : returns) {
    s += std::abs(r) - out.r_bar;
    out.values.push_back(s);
  }
  return out;
}

struct AggGaussRow {
  int delta_t_minutes = 0;
  double kurtosis = 0.0;
  double se_kurtosis = 0.0;
  std::size_t nobs = 0;
};

struct AggGaussScan {
  std::vector<AggGaussRow> rows;  // ascending delta_t
  std::optional<double> slope;    // d ln(kurtosis) / d ln(delta_t) over the fit range
  std::optional<double> slope_se;
  std::pair<int, int> fit_range{0, 0};
  std::vector<std::string> warnings;
};

// Kurtosis of the return distribution across sampling periods, with a
// log-log OLS slope over rows whose period lies in fit_range.
inline AggGaussScan agg_gaussianity_scan(const TickSeries& ticks, std::vector<int> delta_ts,
                                         std::pair<int, int> fit_range,
                                         std::size_t min_nobs = 200) {
  std::sort(delta_ts.begin(), delta_ts.end());
  delta_ts.erase(std::unique(delta_ts.begin(), delta_ts.end()), delta_ts.end());
  AggGaussScan out;
  out.fit_range = fit_range;
  for (int dt : delta_ts) {
    try {
      const auto returns = log_returns(resample_last(ticks, dt));
      if (returns.size() < min_nobs) {
        out.warnings.push_back("delta_t " + std::to_string(dt) + ": only " +
                               std::to_string(returns.size()) + " returns, row omitted");
        continue;
      }
      const auto d = descriptive(returns.values);
      out.rows.push_back({dt, d.kurtosis, d.se_kurtosis, d.nobs});
    } catch (const Error& e) {
      out.warnings.push_back("delta_t " + std::to_string(dt) + ": " + e.what() + ", row omitted");
    }
  }
  std::vector<double> lx, ly;
  for (const auto& r : out.rows) {
    if (r.delta_t_minutes < fit_range.first || r.delta_t_minutes > fit_range.second) continue;
    lx.push_back(std::log(static_cast<double>(r.delta_t_minutes)));
    ly.push_back(std::log(r.kurtosis));
  }
  if (lx.size() >= 2) {
    const auto fit = ols(lx, ly);
    out.slope = fit.slope;
    if (std::isfinite(fit.slope_se)) out.slope_se = fit.slope_se;
  }
  return out;
}

inline nlohmann::json to_json(const DescriptiveStats& d) {
  return {{"nobs", d.nobs},         {"mean", d.mean},
          {"se_mean", d.se_mean},   {"sd", d.sd},
          {"se_sd", d.se_sd},       {"kurtosis", d.kurtosis},
          {"se_kurtosis", d.se_kurtosis}, {"skewness", d.skewness},
          {"se_skewness", d.se_skewness}};
}

inline nlohmann::json to_json(const AggGaussScan& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"delta_t", r.delta_t_minutes}, {"kurtosis", r.kurtosis},
                    {"se", r.se_kurtosis}, {"nobs", r.nobs}});
  return {{"rows", rows},
          {"fit_range", {s.fit_range.first, s.fit_range.second}},
          {"slope", s.slope ? nlohmann::json(*s.slope) : nlohmann::json()},
          {"slope_se", s.slope_se ? nlohmann::json(*s.slope_se) : nlohmann::json()},
          {"warnings", s.warnings}};
}

// `delta_t,kurtosis,se,nobs`
inline void write_csv(std::ostream& os, const AggGaussScan& s) {
  io::write_row(os, {"delta_t", "kurtosis", "se", "nobs"});
  for (const auto& r : s.rows)
    io::write_row(os, {std::to_string(r.delta_t_minutes), io::fmt(r.kurtosis),
                       io::fmt(r.se_kurtosis), std::to_string(r.nobs)});
}

// `t,s`
inline void write_csv(std::ostream& os, const VolatilitySeries& v) {
  io::write_row(os, {"t", "s"});
  for (std::size_t i = 0; i < v.values.size(); ++i)
    io::write_row(os, {std::to_string(i), io::fmt(v.values[i])});
}

inline void write_csv(std::ostream& os, const DescriptiveStats& d) {
  io::write_row(os, {"statistic", "value", "se"});
  io::write_row(os, {"mean", io::fmt(d.mean), io::fmt(d.se_mean)});
  io::write_row(os, {"sd", io::fmt(d.sd), io::fmt(d.se_sd)});
  io::write_row(os, {"kurtosis", io::fmt(d.kurtosis), io::fmt(d.se_kurtosis)});
  io::write_row(os, {"skewness", io::fmt(d.skewness), io::fmt(d.se_skewness)});
  io::write_row(os, {"nobs", std::to_string(d.nobs), ""});
}

}  // namespace volmf
