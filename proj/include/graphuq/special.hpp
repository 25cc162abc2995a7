#pragma once

// Special functions needed by Dirichlet-based uncertainty measures:
// log-gamma, digamma and trigamma for strictly positive arguments.
//
// These are implemented locally (Lanczos approximation for log-gamma, upward
// recurrence plus Bernoulli asymptotic series for the psi functions) so that
// results are bit-stable across platforms and so the same code paths can be
// reused by the reverse-mode differentiation layer, whose lgamma/digamma
// primitives need matching derivatives.

#include <cmath>
#include <stdexcept>

namespace graphuq {

namespace detail {

// Lanczos coefficients for g = 7, n = 9 (Godfrey's values).
inline constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // log(2*pi)/2

inline double lanczos_log_gamma(double x) {
  // Valid for x >= 0.5.
  const double z = x - 1.0;
  double series = kLanczos[0];
  for (int i = 1; i < 9; ++i) series += kLanczos[i] / (z + i);
  const double t = z + 7.5;
  return kHalfLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(series);
}

}  // namespace detail

// log(Gamma(x)) for x > 0. Relative accuracy is ~1e-13 over the supported
// range; arguments at or below zero are rejected.
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: argument must be positive");
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    return std::log(detail::kPi / std::sin(detail::kPi * x)) - detail::lanczos_log_gamma(1.0 - x);
  }
  return detail::lanczos_log_gamma(x);
}

// Digamma psi(x) = d/dx log(Gamma(x)) for x > 0.
// Upward recurrence psi(x) = psi(x+1) - 1/x lifts the argument to >= 8, where
// the asymptotic expansion with Bernoulli numbers up to B14 converges to well
// below 1e-14 relative error.
inline double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
  double result = 0.0;
  while (x < 8.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi(x) ~ log x - 1/(2x) - sum_{n>=1} B_{2n} / (2n x^{2n})
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
  return result + std::log(x) - 0.5 * inv - series;
}

// Trigamma psi'(x) for x > 0, by the same recurrence/asymptotic strategy.
inline double trigamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("trigamma: argument must be positive");
  double result = 0.0;
  while (x < 8.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // psi'(x) ~ 1/x + 1/(2x^2) + sum_{n>=1} B_{2n} / x^{2n+1}
  const double series =
      1.0 +
      inv * 0.5 +
      inv2 * (1.0 / 6.0 -
              inv2 * (1.0 / 30.0 -
                      inv2 * (1.0 / 42.0 -
                              inv2 * (1.0 / 30.0 -
                                      inv2 * (5.0 / 66.0 -
                                              inv2 * (691.0 / 2730.0 - inv2 * (7.0 / 6.0)))))));
  return result + inv * series;
}

}  // namespace graphuq
