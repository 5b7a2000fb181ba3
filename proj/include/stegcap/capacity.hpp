#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "stegcap/covariance.hpp"
#include "stegcap/error.hpp"
#include "stegcap/gaussmodel.hpp"
#include "stegcap/specfun.hpp"

namespace stegcap {

/// Label attached to every capacity figure: the divergence is taken at its
/// continuous upper bound, which is conservative for quantized covers.
inline constexpr const char* kConservativeLabel = "conservative (quantized covers)";

/// Either a detectability budget epsilon or a target average detector error P_E.
struct CapacityQuery {
  std::size_t n = 1;
  std::optional<double> epsilon;
  std::optional<double> p_e_avg;

  static CapacityQuery from_epsilon(double eps, std::size_t n) { return {n, eps, std::nullopt}; }
  static CapacityQuery from_pe(double pe, std::size_t n) { return {n, std::nullopt, pe}; }

  void validate() const {
    if (n < 1) throw DomainError("capacity: n must be >= 1");
    if (epsilon.has_value() == p_e_avg.has_value())
      throw DomainError("capacity: set exactly one of epsilon or P_E");
    if (epsilon && !(*epsilon >= 0.0 && *epsilon <= 1.0))
      throw DomainError("capacity: epsilon must lie in [0, 1]");
    if (p_e_avg && !(*p_e_avg >= 0.0 && *p_e_avg <= 0.5))
      throw DomainError("capacity: P_E must lie in [0, 0.5]");
  }

  bool lower_bound_mode() const noexcept { return p_e_avg.has_value(); }

  /// epsilon, or 1 - 2 P_E in lower-bound mode.
  double effective_epsilon() const {
    validate();
    return epsilon ? *epsilon : 1.0 - 2.0 * *p_e_avg;
  }
};

struct DetectionBounds {
  double kl_budget = 0.0;    ///< nats
  double p_d_max = 0.0;      ///< bound on the optimal detector's detection probability
  double p_e_min = 1.0;      ///< 1 - p_d_max: minimum total error alpha + beta
  double p_e_avg_min = 0.5;  ///< p_e_min / 2 under equal priors
  bool vacuous = false;      ///< sqrt(kl / 2) exceeded 1 and was clamped
};

inline DetectionBounds detection_bounds(double kl) {
  if (std::isnan(kl) || kl < 0.0) throw DomainError("detection_bounds: KL must be >= 0");
  DetectionBounds b;
  b.kl_budget = kl;
  const double raw = std::sqrt(kl / 2.0);
  b.vacuous = raw > 1.0;
  b.p_d_max = b.vacuous ? 1.0 : raw;
  b.p_e_min = 1.0 - b.p_d_max;
  b.p_e_avg_min = b.p_e_min / 2.0;
  return b;
}

/// 2 epsilon sqrt(n): square-root-law ceiling on the total rate, in nats.
inline double srl_bound(double epsilon, std::size_t n) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw DomainError("srl_bound: epsilon must lie in (0, 1]");
  if (n < 1) throw DomainError("srl_bound: n must be >= 1");
  return 2.0 * epsilon * std::sqrt(static_cast<double>(n));
}

struct CapacityResult {
  std::size_t n = 1;
  double epsilon = 0.0;  ///< effective epsilon (1 - 2 P_E in lower-bound mode)
  bool lower_bound_mode = false;
  double gamma = 0.0;             ///< 4 epsilon^2 / n
  double embedding_factor = 1.0;  ///< a* >= 1
  double embedding_excess = 0.0;  ///< a* - 1, carried separately for precision
  double rate_total = 0.0;        ///< (n/2) ln a*, nats
  double rate_per_element = 0.0;  ///< nats per cover element
  double srl_bound = 0.0;         ///< 2 epsilon sqrt(n), nats
  double achievable_rate = 0.0;   ///< max(0, rate_total - 2 epsilon), nats
  DetectionBounds detection;
};

/// Maximum embedding rate for a detectability budget.
///
/// Stego covariance is a* Sigma_c with a* - ln a* = 1 + 4 eps^2 / n, which
/// saturates D(P_s || P_c) = 2 eps^2; the rate is (n/2) ln a*.
inline CapacityResult max_embedding_rate(const CapacityQuery& q, const SolverConfig& cfg = {}) {
  q.validate();
  CapacityResult r;
  r.n = q.n;
  r.lower_bound_mode = q.lower_bound_mode();
  r.epsilon = q.effective_epsilon();
  const double n = static_cast<double>(q.n);
  r.gamma = 4.0 * r.epsilon * r.epsilon / n;
  r.embedding_excess = embedding_excess_from_gamma(r.gamma, cfg);
  r.embedding_factor = 1.0 + r.embedding_excess;
  r.rate_per_element = 0.5 * std::log1p(r.embedding_excess);
  r.rate_total = n * r.rate_per_element;
  r.srl_bound = 2.0 * r.epsilon * std::sqrt(n);
  r.achievable_rate = std::max(0.0, r.rate_total - 2.0 * r.epsilon);
  r.detection = detection_bounds(2.0 * r.epsilon * r.epsilon);
  return r;
}

/// Optimal message codebook distribution: N(0, (a* - 1) Sigma_c).
/// Throws DegenerateMessage when a* == 1 (nothing can be embedded).
inline GaussianModel optimal_codebook_params(const GaussianModel& cover, const CapacityQuery& q,
                                             const SolverConfig& cfg = {}) {
  q.validate();
  if (q.n != cover.dim())
    throw DimensionMismatch("codebook: query n = " + std::to_string(q.n) + " but cover has dimension " +
                            std::to_string(cover.dim()));
  const auto r = max_embedding_rate(q, cfg);
  if (r.embedding_excess == 0.0)
    throw DegenerateMessage("codebook: a* = 1, the optimal message covariance is zero");
  return GaussianModel::centered(cover.dim(), scaled(cover.covariance(), r.embedding_excess));
}

/// Distribution of s = c + m for independent cover and message.
inline GaussianModel stego_model(const GaussianModel& cover, const GaussianModel& message) {
  if (cover.dim() != message.dim()) throw DimensionMismatch("stego: cover and message dimensions differ");
  return GaussianModel(cover.mean() + message.mean(), sum(cover.covariance(), message.covariance(), cover.dim()));
}

struct EmbeddingFactorBounds {
  double a_lower = 1.0;
  double gamma = 0.0;
  std::string note;
};

/// Lower bound on the embedding factor implied by a target average error P_E:
/// a_lower solves a - ln a = 1 + 4 (1 - 2 P_E)^2 / n, and a_lower <= a <= a*.
inline EmbeddingFactorBounds embedding_factor_bounds_from_pe(double p_e_avg, std::size_t n,
                                                             const SolverConfig& cfg = {}) {
  if (!(p_e_avg >= 0.0 && p_e_avg <= 0.5)) throw DomainError("P_E must lie in [0, 0.5]");
  if (n < 1) throw DomainError("n must be >= 1");
  const double e = 1.0 - 2.0 * p_e_avg;
  EmbeddingFactorBounds b;
  b.gamma = 4.0 * e * e / static_cast<double>(n);
  b.a_lower = embedding_factor_from_gamma(b.gamma, cfg);
  b.note = "lower bound: a_lower <= a <= a*; rates computed from it bound capacity from below";
  return b;
}

}  // namespace stegcap
