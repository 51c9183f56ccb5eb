#pragma once

// Adapters turning each estimator into a rolling-window Measures payload.

#include <span>
#include <string>
#include <vector>

#include "volmf/mfdfa.hpp"
#include "volmf/rolling.hpp"
#include "volmf/stats.hpp"
#include "volmf/tgarch.hpp"

namespace volmf {

inline Measures tgarch_measures(std::span<const double> window, Dist dist, const FitConfig& cfg = {}) {
  const auto f = fit(window, dist, cfg);
  Measures m{csv_columns(dist), csv_values(f), "ok"};
  if (!f.converged) m.status = "not-converged";
  else if (!f.hessian_ok) m.status = "hessian-not-pd";
  return m;
}

inline Measures mfdfa_measures(std::span<const double> window, const mfdfa::Config& cfg = {}) {
  const auto a = mfdfa::analyze(window, cfg);
  const auto& hc = a.hurst;
  return {{"h2", "delta_h", "delta_alpha", "h_neg", "h_pos"},
          {a.h2, a.delta_h, a.delta_alpha, hc.h[mfdfa::grid_index(hc.q, -cfg.degree_q)],
           hc.h[mfdfa::grid_index(hc.q, cfg.degree_q)]},
          "ok"};
}

inline Measures stats_measures(std::span<const double> window) {
  const auto d = descriptive(window);
  return {{"mean", "se_mean", "sd", "se_sd", "kurtosis", "se_kurtosis", "skewness", "se_skewness"},
          {d.mean, d.se_mean, d.sd, d.se_sd, d.kurtosis, d.se_kurtosis, d.skewness, d.se_skewness},
          "ok"};
}

}  // namespace volmf
