#pragma once

// Synthetic series with known scaling properties, used as oracles for the
// estimators.

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "volmf/error.hpp"
#include "volmf/ingest.hpp"
#include "volmf/rng.hpp"

namespace volmf::synth {

inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("gaussian_noise needs n >= 1");
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = standard_normal(rng);
  return out;
}

struct CascadeSpec {
  int levels = 16;  // series length 2^levels
  double a = 0.75;  // weight of the heavier half, 0.5 < a < 1
};

inline void validate(const CascadeSpec& spec) {
  if (spec.levels < 8 || spec.levels > 24)
    throw ValidationError("cascade levels must lie in [8, 24]");
  if (!(spec.a > 0.5 && spec.a < 1.0)) throw ValidationError("cascade weight must lie in (0.5, 1)");
}

// Deterministic binomial multifractal measure: x_k = a^(n - d) (1 - a)^d with
// d the binary digit sum of k. Sums to one.
inline std::vector<double> binomial_cascade(const CascadeSpec& spec) {
  validate(spec);
  const std::size_t len = std::size_t{1} << spec.levels;
  const double la = std::log(spec.a), lb = std::log1p(-spec.a);
  std::vector<double> out(len);
  for (std::size_t k = 0; k < len; ++k) {
    const int d = std::popcount(k);
    out[k] = std::exp((spec.levels - d) * la + d * lb);
  }
  return out;
}

// Unchecked weight; used by the validated entry point and by limit tests.
inline double cascade_h_formula(double q, double a) {
  const double b = 1.0 - a;
  if (q == 0.0) return -(std::log(a) + std::log(b)) / (2.0 * std::log(2.0));
  return 1.0 / q - std::log(std::pow(a, q) + std::pow(b, q)) / (q * std::log(2.0));
}

// h(q) = 1/q - ln(a^q + (1-a)^q) / (q ln 2); the q = 0 value is the limit
// -(ln a + ln(1-a)) / (2 ln 2).
inline double cascade_h_analytic(double q, double a) {
  if (!(a >= 0.5 && a < 1.0)) throw ValidationError("cascade weight must lie in [0.5, 1)");
  return cascade_h_formula(q, a);
}

// alpha(q) = d/dq [q h(q)] = -(a^q ln a + b^q ln b) / ((a^q + b^q) ln 2)
inline double cascade_alpha_analytic(double q, double a) {
  const double b = 1.0 - a;
  const double aq = std::pow(a, q), bq = std::pow(b, q);
  return -(aq * std::log(a) + bq * std::log(b)) / ((aq + bq) * std::log(2.0));
}

// Trades every `interval_seconds` whose log prices follow a Gaussian random
// walk with per-trade sd `step_sd` (natural log units).
inline TickSeries random_walk_ticks(std::size_t n_ticks, std::int64_t interval_seconds,
                                    std::uint64_t seed, double p0 = 100.0,
                                    double step_sd = 0.001, std::int64_t t0 = 0) {
  if (interval_seconds < 1) throw ValidationError("tick interval must be positive");
  Rng rng(seed);
  TickSeries out;
  out.records.reserve(n_ticks);
  double logp = std::log(p0);
  for (std::size_t i = 0; i < n_ticks; ++i) {
    if (i) logp += step_sd * standard_normal(rng);
    out.records.push_back({t0 + static_cast<std::int64_t>(i) * interval_seconds, std::exp(logp), 1.0});
  }
  return out;
}

}  // namespace volmf::synth
