#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "stegcap/capacity.hpp"
#include "stegcap/covariance.hpp"
#include "stegcap/error.hpp"
#include "stegcap/gaussmodel.hpp"
#include "stegcap/rng.hpp"

namespace stegcap {

inline constexpr std::size_t kMaxTrials = 10'000'000;
inline constexpr std::size_t kMaxCodebook = std::size_t{1} << 16;
inline constexpr std::size_t kMaxExperimentDim = 4096;
/// Cap on codebook entries touched by one decoding run (K * trials * n).
inline constexpr double kMaxDecodingWork = 2e10;

namespace streams {
inline constexpr std::uint64_t kDetection = 0x6465746563740000ull;
inline constexpr std::uint64_t kDecoding = 0x6465636f64650000ull;
}  // namespace streams

// ---------------------------------------------------------------------------
// Detection: optimal likelihood-ratio test between P_c and P_s = N(mu_c, a* Sigma_c)
// ---------------------------------------------------------------------------

struct DetectionExperiment {
  GaussianModel cover;
  double epsilon = 0.1;
  std::optional<QuantizationGrid> grid;
  std::size_t trials = 100'000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct DetectionReport {
  double alpha_hat = 0.0;  ///< false-positive rate on cover trials
  double beta_hat = 0.0;   ///< miss rate on stego trials
  double p_e_hat = 0.0;    ///< alpha_hat + beta_hat
  double p_e_bound = 1.0;  ///< 1 - epsilon
  double std_err = 0.0;
  bool pass = false;  ///< p_e_hat >= p_e_bound - 3 std_err
  std::size_t trials = 0;
  std::size_t cover_trials = 0;
  std::size_t stego_trials = 0;
  double embedding_factor = 1.0;
  double kl = 0.0;  ///< D(P_s || P_c) of the simulated pair
  std::vector<std::string> warnings;
};

/// Monte Carlo estimate of the optimal detector's errors at the designed
/// operating point. Labels are equiprobable; the decision is the exact
/// log-likelihood ratio against threshold 0.
inline DetectionReport run_detection(const DetectionExperiment& e) {
  if (!(e.epsilon > 0.0 && e.epsilon < 1.0)) throw DomainError("detection: epsilon must lie in (0, 1)");
  if (e.trials < 1) throw DomainError("detection: trials must be >= 1");
  if (e.trials > kMaxTrials) throw BudgetExceeded("detection: trials capped at 1e7");
  if (e.cover.dim() > kMaxExperimentDim) throw BudgetExceeded("detection: n capped at 4096");
  if (e.grid) e.grid->validate();

  const std::size_t n = e.cover.dim();
  const auto cap = max_embedding_rate(CapacityQuery::from_epsilon(e.epsilon, n));
  const double a = cap.embedding_factor;
  const double excess = cap.embedding_excess;
  const double log_a = std::log1p(excess);
  const double shrink = excess / (1.0 + excess);  // 1 - 1/a
  const double stego_scale = std::sqrt(a);
  const auto factor = e.cover.factor();
  const Eigen::VectorXd& mu = e.cover.mean();

  std::vector<std::uint8_t> label(e.trials), decision(e.trials);
  for_each_trial(e.trials, e.threads, [&](std::size_t t) {
    auto engine = substream(e.seed, streams::kDetection, t);
    boost::random::normal_distribution<double> normal;
    const bool stego = (engine() >> 63) != 0;
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = normal(engine);
    if (stego) z *= stego_scale;
    Eigen::VectorXd x = mu + factor.multiply_lower(z);
    if (e.grid)
      for (std::size_t i = 0; i < n; ++i) x[i] = e.grid->quantize(x[i]);
    const double q = factor.mahalanobis(x - mu);
    const double llr = -0.5 * static_cast<double>(n) * log_a + 0.5 * q * shrink;
    label[t] = stego ? 1 : 0;
    decision[t] = llr > 0.0 ? 1 : 0;
  });

  DetectionReport r;
  std::size_t false_pos = 0, misses = 0;
  for (std::size_t t = 0; t < e.trials; ++t) {
    if (label[t] == 0) {
      ++r.cover_trials;
      false_pos += decision[t];
    } else {
      ++r.stego_trials;
      misses += 1 - decision[t];
    }
  }
  r.trials = e.trials;
  r.alpha_hat = r.cover_trials ? static_cast<double>(false_pos) / static_cast<double>(r.cover_trials) : 0.0;
  r.beta_hat = r.stego_trials ? static_cast<double>(misses) / static_cast<double>(r.stego_trials) : 0.0;
  r.p_e_hat = r.alpha_hat + r.beta_hat;
  double var = 0.0;
  if (r.cover_trials) var += r.alpha_hat * (1.0 - r.alpha_hat) / static_cast<double>(r.cover_trials);
  if (r.stego_trials) var += r.beta_hat * (1.0 - r.beta_hat) / static_cast<double>(r.stego_trials);
  r.std_err = std::sqrt(var);
  r.p_e_bound = 1.0 - e.epsilon;
  r.pass = r.p_e_hat >= r.p_e_bound - 3.0 * r.std_err;
  r.embedding_factor = a;
  r.kl = 0.5 * static_cast<double>(n) * (excess - log_a);
  if (e.trials < 1000) r.warnings.push_back("fewer than 1000 trials; standard errors are unreliable");
  return r;
}

inline bool is_diagonal(const CovarianceSpec& c) {
  if (std::holds_alternative<cov::ScaledIdentity>(c)) return true;
  if (auto* a = std::get_if<cov::Ar1Toeplitz>(&c)) return a->rho == 0.0;
  const auto& m = std::get<cov::Dense>(c).matrix;
  return (m - Eigen::MatrixXd(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

/// Exact total error alpha + beta of the optimal test between N(mu, Sigma)
/// and N(mu, a Sigma) for a diagonal cover; equals 1 - V(P_s, P_c).
///
/// The whitened statistic q is chi-square with n degrees of freedom under
/// the cover and a times that under the stego model, so both error integrals
/// are regularized incomplete gamma functions.
inline double exact_lrt_error_diagonal(const GaussianModel& cover, double a) {
  if (!(a >= 1.0) || !std::isfinite(a)) throw DomainError("exact LRT error: a must be >= 1");
  if (!is_diagonal(cover.covariance())) throw DomainError("exact LRT error: cover covariance must be diagonal");
  if (a == 1.0) return 1.0;
  const double n = static_cast<double>(cover.dim());
  const double excess = a - 1.0;
  const double threshold = n * a * std::log1p(excess) / excess;
  const double alpha = boost::math::gamma_q(0.5 * n, 0.5 * threshold);
  const double beta = boost::math::gamma_p(0.5 * n, 0.5 * threshold / a);
  return alpha + beta;
}

// ---------------------------------------------------------------------------
// Decoding: random Gaussian codebooks, maximum-likelihood decoder
// ---------------------------------------------------------------------------

/// Dimension-free cover description instantiated at each n of a sweep.
struct CoverFamily {
  double mean = 0.0;
  CovarianceSpec covariance = cov::ScaledIdentity{1.0};

  GaussianModel at(std::size_t n) const {
    if (is_dense(covariance)) throw DomainError("cover family must use a structured covariance");
    return GaussianModel::centered(n, covariance, mean);
  }
};

struct DecodingExperiment {
  CoverFamily cover;
  double epsilon = 0.5;
  double rate_fraction = 0.25;  ///< ln K as a fraction of the capacity I(n)
  std::vector<std::size_t> n_list{16, 64, 256};
  std::optional<std::size_t> codebook_size;  ///< overrides the rate-derived K
  std::size_t trials = 20'000;
  std::uint64_t seed = 0;
  std::optional<QuantizationGrid> grid;
  unsigned threads = 1;
};

struct DecodingPoint {
  std::size_t n = 0;
  std::size_t codebook_size = 0;
  double capacity_nats = 0.0;  ///< I(n) at the experiment's epsilon
  double rate_nats = 0.0;      ///< ln K
  std::size_t trials = 0;
  std::size_t errors = 0;
  double p_b_hat = 0.0;
  double std_err = 0.0;
};

struct DecodingReport {
  std::vector<DecodingPoint> points;  ///< sorted by n
  bool monotone_trend = true;
  std::string decoder = "maximum-likelihood over the codebook";
};

/// K = round(exp(rate_fraction * I(n))), at least 2.
inline std::size_t codebook_size_for(double rate_fraction, double capacity_nats) {
  const double log_k = rate_fraction * capacity_nats;
  if (log_k > std::log(static_cast<double>(kMaxCodebook)) + 0.5)
    throw BudgetExceeded("decoding: codebook size exp(" + std::to_string(log_k) + ") exceeds 2^16");
  const auto k = static_cast<std::size_t>(std::llround(std::exp(log_k)));
  if (k > kMaxCodebook) throw BudgetExceeded("decoding: codebook size exceeds 2^16");
  return std::max<std::size_t>(2, k);
}

/// Nonincreasing within two combined standard errors between consecutive n.
inline bool nonincreasing_within(const std::vector<DecodingPoint>& pts, double sigmas = 2.0) {
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double tol = sigmas * std::hypot(pts[k - 1].std_err, pts[k].std_err);
    if (pts[k].p_b_hat > pts[k - 1].p_b_hat + tol) return false;
  }
  return true;
}

/// Block error rate of random codes s = c + m_i decoded by
/// argmax_j p_c(s - m_j). Each trial draws a fresh codebook, so the
/// estimate is the ensemble-average error of the random-coding argument.
inline DecodingReport run_decoding(const DecodingExperiment& e) {
  if (!(e.epsilon > 0.0 && e.epsilon <= 1.0)) throw DomainError("decoding: epsilon must lie in (0, 1]");
  if (!(e.rate_fraction > 0.0) || !std::isfinite(e.rate_fraction))
    throw DomainError("decoding: rate_fraction must be > 0");
  if (e.n_list.empty()) throw DomainError("decoding: n_list is empty");
  if (e.trials < 1) throw DomainError("decoding: trials must be >= 1");
  if (e.trials > kMaxTrials) throw BudgetExceeded("decoding: trials capped at 1e7");
  if (e.codebook_size && (*e.codebook_size < 1 || *e.codebook_size > kMaxCodebook))
    throw BudgetExceeded("decoding: codebook size must lie in [1, 2^16]");
  if (e.grid) e.grid->validate();

  std::vector<std::size_t> ns = e.n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  DecodingReport report;
  for (const std::size_t n : ns) {
    if (n < 1 || n > kMaxExperimentDim) throw BudgetExceeded("decoding: n must lie in [1, 4096]");
    const GaussianModel cover = e.cover.at(n);
    const auto cap = max_embedding_rate(CapacityQuery::from_epsilon(e.epsilon, n));
    DecodingPoint pt;
    pt.n = n;
    pt.capacity_nats = cap.rate_total;
    pt.codebook_size = e.codebook_size ? *e.codebook_size : codebook_size_for(e.rate_fraction, cap.rate_total);
    pt.rate_nats = std::log(static_cast<double>(pt.codebook_size));
    pt.trials = e.trials;
    const std::size_t k = pt.codebook_size;
    if (static_cast<double>(k) * static_cast<double>(e.trials) * static_cast<double>(n) > kMaxDecodingWork)
      throw BudgetExceeded("decoding: K * trials * n exceeds 2e10");

    const auto factor = cover.factor();
    const Eigen::VectorXd& mu = cover.mean();
    const double code_sd = std::sqrt(cap.embedding_excess);

    std::vector<std::uint8_t> wrong(e.trials, 0);
    if (k > 1) {
      for_each_trial(e.trials, e.threads, [&](std::size_t t) {
        auto engine = substream(e.seed, streams::kDecoding + n, t);
        boost::random::normal_distribution<double> normal;
        boost::random::uniform_int_distribution<std::size_t> pick(0, k - 1);
        const std::size_t sent = pick(engine);

        // Codewords in whitened coordinates: m_j = L w_j with w_j ~ N(0, (a*-1) I).
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> words(k, n);
        for (Eigen::Index j = 0; j < words.rows(); ++j)
          for (Eigen::Index i = 0; i < words.cols(); ++i) words(j, i) = code_sd * normal(engine);

        Eigen::VectorXd z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = normal(engine);
        const Eigen::VectorXd w_sent = words.row(static_cast<Eigen::Index>(sent)).transpose();
        Eigen::VectorXd s = mu + factor.multiply_lower(z) + factor.multiply_lower(w_sent);
        if (e.grid)
          for (std::size_t i = 0; i < n; ++i) s[i] = e.grid->quantize(s[i]);
        const Eigen::VectorXd y = factor.solve_lower(s - mu);

        const Eigen::VectorXd score = words.rowwise().squaredNorm() - 2.0 * (words * y);
        Eigen::Index best = 0;
        score.minCoeff(&best);
        wrong[t] = static_cast<std::size_t>(best) != sent ? 1 : 0;
      });
    }
    for (auto w : wrong) pt.errors += w;
    pt.p_b_hat = static_cast<double>(pt.errors) / static_cast<double>(e.trials);
    pt.std_err = std::sqrt(pt.p_b_hat * (1.0 - pt.p_b_hat) / static_cast<double>(e.trials));
    report.points.push_back(pt);
  }
  report.monotone_trend = nonincreasing_within(report.points);
  return report;
}

}  // namespace stegcap
