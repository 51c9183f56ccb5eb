#pragma once

// Unit-variance innovation laws for the volatility model. All three are
// standardized so that sigma^2 is the conditional variance under every law.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "volmf/error.hpp"
#include "volmf/rng.hpp"

namespace volmf {

enum class Dist { student_t, normal, ged };

inline const char* to_string(Dist d) noexcept {
  switch (d) {
    case Dist::student_t: return "student-t";
    case Dist::normal: return "normal";
    case Dist::ged: return "ged";
  }
  return "?";
}

inline Dist parse_dist(std::string_view s) {
  if (s == "student-t" || s == "std" || s == "t") return Dist::student_t;
  if (s == "normal" || s == "norm") return Dist::normal;
  if (s == "ged") return Dist::ged;
  throw ValidationError("unknown distribution '" + std::string(s) + "'");
}

inline bool has_shape(Dist d) noexcept { return d != Dist::normal; }

inline void check_shape(Dist d, double shape) {
  if (d == Dist::student_t && !(shape > 2.0 && std::isfinite(shape)))
    throw NumericalError("student-t shape must exceed 2");
  if (d == Dist::ged && !(shape > 0.0 && std::isfinite(shape)))
    throw NumericalError("ged shape must be positive");
}

// Scale lambda of the GED so that the variance is one; lambda(2) = 1.
inline double ged_lambda(double shape) {
  return std::sqrt(std::exp2(-2.0 / shape) *
                   std::exp(std::lgamma(1.0 / shape) - std::lgamma(3.0 / shape)));
}

// Terms of the log density that depend only on the shape.
struct LogDensity {
  Dist dist;
  double shape;
  double constant;
  double scale;  // nu - 2 for student-t, lambda for ged

  LogDensity(Dist d, double s) : dist(d), shape(s), constant(0.0), scale(1.0) {
    using std::numbers::pi;
    switch (d) {
      case Dist::normal:
        constant = -0.5 * std::log(2.0 * pi);
        break;
      case Dist::student_t:
        check_shape(d, s);
        scale = s - 2.0;
        constant = std::lgamma(0.5 * (s + 1.0)) - std::lgamma(0.5 * s) -
                   0.5 * std::log(pi * scale);
        break;
      case Dist::ged:
        check_shape(d, s);
        scale = ged_lambda(s);
        constant = std::log(s) - (1.0 + 1.0 / s) * std::log(2.0) - std::log(scale) -
                   std::lgamma(1.0 / s);
        break;
    }
  }

  double operator()(double z) const noexcept {
    switch (dist) {
      case Dist::normal:
        return constant - 0.5 * z * z;
      case Dist::student_t:
        return constant - 0.5 * (shape + 1.0) * std::log1p(z * z / scale);
      case Dist::ged:
        return constant - 0.5 * std::pow(std::abs(z / scale), shape);
    }
    return 0.0;
  }
};

inline double log_density(Dist d, double z, double shape = 0.0) {
  return LogDensity(d, shape)(z);
}

// One unit-variance draw.
inline double draw_innovation(Dist d, double shape, Rng& rng) {
  switch (d) {
    case Dist::normal:
      return standard_normal(rng);
    case Dist::student_t: {
      const double z = standard_normal(rng);
      const double chi2 = 2.0 * standard_gamma(rng, 0.5 * shape);
      return z / std::sqrt(chi2 / shape) * std::sqrt((shape - 2.0) / shape);
    }
    case Dist::ged: {
      // |z / lambda|^k / 2 ~ Gamma(1/k)
      const double g = standard_gamma(rng, 1.0 / shape);
      const double mag = ged_lambda(shape) * std::pow(2.0 * g, 1.0 / shape);
      return rng.uniform() < 0.5 ? -mag : mag;
    }
  }
  return 0.0;
}

}  // namespace volmf
