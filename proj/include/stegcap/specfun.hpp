#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stegcap/error.hpp"

namespace stegcap {

struct SolverConfig {
  double relative_tolerance = 1e-12;
  int max_iterations = 100;

  void validate() const {
    if (!(relative_tolerance > 0.0) || !std::isfinite(relative_tolerance))
      throw DomainError("SolverConfig: relative_tolerance must be positive");
    if (max_iterations < 1) throw DomainError("SolverConfig: max_iterations must be >= 1");
  }
};

/// Lower real branch W_{-1} of the Lambert W function.
///
/// Defined on [-1/e, 0); returns the unique w <= -1 with w e^w = x.
/// Halley iteration from a branch-point series (near -1/e) or the
/// logarithmic asymptote (near 0), with bisection as a fallback.
inline double lambert_w_m1(double x, const SolverConfig& cfg = {}) {
  cfg.validate();
  const double branch = -std::exp(-1.0);
  if (std::isnan(x) || x >= 0.0) throw DomainError("lambert_w_m1: x must lie in [-1/e, 0)");
  if (x < branch) {
    if (branch - x > 4.0 * std::numeric_limits<double>::epsilon() * -branch)
      throw DomainError("lambert_w_m1: x must lie in [-1/e, 0)");
    return -1.0;
  }
  if (x == branch) return -1.0;

  const double q = 1.0 + std::numbers::e * x;  // distance from branch point, in [0, 1)
  double w;
  if (q < 0.25) {
    const double p = -std::sqrt(2.0 * q);
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else {
    const double l1 = std::log(-x);
    const double l2 = std::log(-l1);
    w = l1 - l2 + l2 / l1;
  }
  if (w > -1.0) w = -1.0 - std::sqrt(std::numeric_limits<double>::epsilon());

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    if (!std::isfinite(step)) break;
    double next = w - step;
    if (next > -1.0) next = 0.5 * (w - 1.0);
    const bool done = std::abs(next - w) <= cfg.relative_tolerance * std::abs(next);
    w = next;
    if (done) return w;
  }

  // Bisection on [lo, -1] where w e^w - x changes sign.
  double hi = -1.0;
  double lo = -2.0;
  while (lo * std::exp(lo) <= x) {
    lo *= 2.0;
    if (!std::isfinite(lo)) throw ConvergenceError("lambert_w_m1: bracket expansion failed");
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid * std::exp(mid) > x)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= cfg.relative_tolerance * std::abs(mid)) return 0.5 * (lo + hi);
  }
  throw ConvergenceError("lambert_w_m1: no convergence for x = " + std::to_string(x));
}

/// d - log1p(d) for d > -1, by its Taylor series near 0 where the direct
/// difference cancels.
inline double excess_minus_log1p(double d) {
  if (std::abs(d) >= 0.1) return d - std::log1p(d);
  double term = -d, sum = 0.0;
  for (int k = 2; k < 40; ++k) {
    term *= -d;
    sum += term / k;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

/// Excess d = a - 1 of the embedding factor: the root d >= 0 of
/// d - log1p(d) = gamma, i.e. a - ln a = 1 + gamma.
///
/// Working in d keeps full relative precision when gamma is tiny (a -> 1),
/// where routing through W_{-1}(-exp(-1 - gamma)) loses half the digits,
/// and avoids underflow of exp(-1 - gamma) when gamma is large.
inline double embedding_excess_from_gamma(double gamma, const SolverConfig& cfg = {}) {
  cfg.validate();
  if (std::isnan(gamma) || gamma < 0.0 || !std::isfinite(gamma))
    throw DomainError("embedding factor: gamma must be finite and >= 0");
  if (gamma == 0.0) return 0.0;

  auto h = [gamma](double d) { return excess_minus_log1p(d) - gamma; };

  double lo = 0.0;
  double hi = 1.0 + std::sqrt(2.0 * gamma) + gamma;
  while (h(hi) <= 0.0) hi *= 2.0;

  double d;
  if (gamma < 1.0) {
    d = std::sqrt(2.0 * gamma) + 2.0 * gamma / 3.0;
  } else {
    const double c = 1.0 + gamma;
    d = c + std::log(c) - 1.0;
  }
  if (!(d > lo && d < hi)) d = 0.5 * (lo + hi);

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double hv = h(d);
    if (hv == 0.0) return d;
    if (hv > 0.0)
      hi = d;
    else
      lo = d;

    const double d1 = d / (1.0 + d);
    const double d2 = 1.0 / ((1.0 + d) * (1.0 + d));
    const double newton = hv / d1;
    double next = d - newton / (1.0 - 0.5 * newton * d2 / d1);
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);

    if (std::abs(next - d) <= cfg.relative_tolerance * next) return next;
    if (hi - lo <= cfg.relative_tolerance * lo) return 0.5 * (lo + hi);
    d = next;
  }
  throw ConvergenceError("embedding factor: no convergence for gamma = " + std::to_string(gamma));
}

/// Embedding factor a >= 1 solving a - ln a = 1 + gamma. Equals
/// -W_{-1}(-exp(-(1 + gamma))).
inline double embedding_factor_from_gamma(double gamma, const SolverConfig& cfg = {}) {
  return 1.0 + embedding_excess_from_gamma(gamma, cfg);
}

/// |a - ln a - 1 - gamma|
inline double verify_residual(double a, double gamma) {
  return std::abs(a - std::log(a) - 1.0 - gamma);
}

}  // namespace stegcap
