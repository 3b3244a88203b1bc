#pragma once

// Standard normal density, distribution and upper tail.
//
// tail() is the quantity every relative-error computation divides by, so it
// is never formed as 1 - cdf(). The Mills ratio (1 - Phi(x)) / phi(x) is
// provided separately because the Stein-equation solution needs it far past
// the point where phi(x) underflows.

#include <cmath>
#include <numbers>
#include <utility>

#include "steinmd/errors.hpp"

namespace steinmd::gauss {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
inline constexpr double sqrt_2pi = 2.50662827463100050241576528481;

namespace detail {

inline void require_finite(double x, const char* who) {
  if (!std::isfinite(x)) throw domain_error(std::string(who) + ": argument must be finite");
}

// Lentz evaluation of R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...)))), x > 0.
inline double mills_continued_fraction(double x) {
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = x + k * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + k / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

}  // namespace detail

/// phi(x) = exp(-x^2/2) / sqrt(2 pi).
inline double pdf(double x) {
  detail::require_finite(x, "gauss::pdf");
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// 1 - Phi(x), accurate in relative terms for all x where it is a normal double.
inline double tail(double x) {
  detail::require_finite(x, "gauss::tail");
  return 0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0);
}

/// Phi(x).
inline double cdf(double x) {
  detail::require_finite(x, "gauss::cdf");
  return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
}

/// (1 - Phi(x)) / phi(x). Finite for every x where exp(x^2/2) is representable.
inline double mills_ratio(double x) {
  detail::require_finite(x, "gauss::mills_ratio");
  if (x >= 6.0) return detail::mills_continued_fraction(x);
  if (x >= -6.0) return tail(x) / pdf(x);
  // Phi(-x)/phi(x) with Phi(-x) ~ 1; exp overflows to +inf past |x| ~ 37.6.
  return cdf(-x) * sqrt_2pi * std::exp(0.5 * x * x);
}

/// Bracket phi(x)/(1+x) <= 1 - Phi(x) <= phi(x)/x, valid for x >= 1.
inline std::pair<double, double> mills_bracket(double x) {
  detail::require_finite(x, "gauss::mills_bracket");
  if (x < 1.0) throw domain_error("gauss::mills_bracket: requires x >= 1");
  const double p = pdf(x);
  return {p / (1.0 + x), p / x};
}

}  // namespace steinmd::gauss
