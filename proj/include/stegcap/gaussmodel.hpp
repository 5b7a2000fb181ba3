#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/random/normal_distribution.hpp>

#include "stegcap/covariance.hpp"
#include "stegcap/specfun.hpp"
#include "stegcap/error.hpp"

namespace stegcap {

/// Row-per-draw sample matrix (count x n).
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Multivariate Gaussian N(mean, covariance) with a strictly positive definite covariance.
class GaussianModel {
 public:
  GaussianModel(Eigen::VectorXd mean, CovarianceSpec covariance)
      : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (mean_.size() == 0) throw DomainError("GaussianModel: dimension must be >= 1");
    if (!mean_.allFinite()) throw DomainError("GaussianModel: mean has non-finite entries");
    validate_covariance(covariance_, dim());
  }

  static GaussianModel centered(std::size_t n, CovarianceSpec covariance, double mean = 0.0) {
    return GaussianModel(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), mean), std::move(covariance));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const CovarianceSpec& covariance() const noexcept { return covariance_; }
  CovarianceFactor factor() const { return CovarianceFactor(covariance_, dim()); }

 private:
  Eigen::VectorXd mean_;
  CovarianceSpec covariance_;
};

/// Uniform scalar quantizer applied per coordinate. `bits` only enters the
/// entropy of the quantized distribution.
struct QuantizationGrid {
  double step = 1.0;
  int bits = 0;
  double origin = 0.0;

  void validate() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("QuantizationGrid: step must be > 0");
    if (bits < 0) throw DomainError("QuantizationGrid: bits must be >= 0");
    if (!std::isfinite(origin)) throw DomainError("QuantizationGrid: origin must be finite");
  }

  /// Nearest grid index; ties go toward +infinity.
  std::int64_t index(double x) const {
    return static_cast<std::int64_t>(std::floor((x - origin) / step + 0.5));
  }

  double quantize(double x) const { return origin + step * static_cast<double>(index(x)); }
};

namespace detail {

// tr(Sigma_q^{-1} Sigma_p) when neither covariance is dense.
inline double structured_trace(const CovarianceSpec& q, const CovarianceSpec& p, std::size_t n) {
  const double nd = static_cast<double>(n);
  auto p_diag = [&p]() {
    if (auto* s = std::get_if<cov::ScaledIdentity>(&p)) return s->sigma2;
    return std::get<cov::Ar1Toeplitz>(p).sigma2;
  };
  if (auto* sq = std::get_if<cov::ScaledIdentity>(&q)) return nd * p_diag() / sq->sigma2;

  const auto& aq = std::get<cov::Ar1Toeplitz>(q);
  if (auto* sp = std::get_if<cov::ScaledIdentity>(&p)) return sp->sigma2 * ar1_inverse_trace(aq, n);

  const auto& ap = std::get<cov::Ar1Toeplitz>(p);
  if (n == 1) return ap.sigma2 / aq.sigma2;
  const double c = 1.0 / (aq.sigma2 * (1.0 - aq.rho * aq.rho));
  return c * ap.sigma2 *
         (2.0 + (nd - 2.0) * (1.0 + aq.rho * aq.rho) - 2.0 * (nd - 1.0) * aq.rho * ap.rho);
}

// k - 1 - ln k without cancellation for k near 1.
inline double excess_minus_log(double k) { return excess_minus_log1p(k - 1.0); }

}  // namespace detail

/// D(p || q) between Gaussians, in nats.
///
/// Proportional structured covariances use the scalar form n(k - 1 - ln k);
/// dense pairs go through the eigenvalues of L_q^{-1} Sigma_p L_q^{-T}, which
/// avoids the trace/log-determinant cancellation when p is close to q.
inline double kl_divergence(const GaussianModel& p, const GaussianModel& q) {
  if (p.dim() != q.dim())
    throw DimensionMismatch("KL: dimensions " + std::to_string(p.dim()) + " and " + std::to_string(q.dim()));
  const std::size_t n = p.dim();
  const auto fq = q.factor();
  const double mahal = fq.mahalanobis(q.mean() - p.mean());

  double core;
  if (auto k = proportionality(p.covariance(), q.covariance())) {
    core = static_cast<double>(n) * detail::excess_minus_log(*k);
  } else if (!is_dense(p.covariance()) && !is_dense(q.covariance())) {
    const auto fp = p.factor();
    core = detail::structured_trace(q.covariance(), p.covariance(), n) + fq.log_det() - fp.log_det() -
           static_cast<double>(n);
  } else {
    validate_covariance(p.covariance(), n);
    Eigen::LLT<Eigen::MatrixXd> llt(to_dense(q.covariance(), n));
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("KL: reference covariance factorization failed");
    Eigen::MatrixXd tmp = llt.matrixL().solve(to_dense(p.covariance(), n));
    Eigen::MatrixXd whitened = llt.matrixL().solve(tmp.transpose());
    whitened = 0.5 * (whitened + whitened.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(whitened, Eigen::EigenvaluesOnly);
    core = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double lambda = es.eigenvalues()[i];
      if (!(lambda > 0.0)) throw NotPositiveDefinite("KL: whitened covariance not positive definite");
      core += detail::excess_minus_log(lambda);
    }
  }
  const double kl = 0.5 * (core + mahal);
  return kl > 0.0 ? kl : 0.0;
}

/// D(P_s || P_c): divergence of the stego model from the cover model.
inline double kl_gaussian(const GaussianModel& stego, const GaussianModel& cover) {
  return kl_divergence(stego, cover);
}

/// D(P_c || P_s): the reverse divergence, cover measured against stego.
inline double kl_gaussian_reverse(const GaussianModel& cover, const GaussianModel& stego) {
  return kl_divergence(cover, stego);
}

/// Entropy of the quantized model: differential entropy plus bits * ln 2.
inline double entropy_quantized(const GaussianModel& p, const QuantizationGrid& grid) {
  grid.validate();
  const double n = static_cast<double>(p.dim());
  const double h = 0.5 * (n * std::log(2.0 * std::numbers::pi * std::numbers::e) + p.factor().log_det());
  return h + static_cast<double>(grid.bits) * std::numbers::ln2;
}

/// Draws `count` rows from the model, optionally rounded to the grid.
/// Deterministic for a given seed.
inline SampleMatrix sample(const GaussianModel& p, const std::optional<QuantizationGrid>& grid, std::size_t count,
                           std::uint64_t seed) {
  if (count == 0) throw DomainError("sample: count must be >= 1");
  if (grid) grid->validate();
  const auto f = p.factor();
  const std::size_t n = p.dim();
  std::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> normal;
  SampleMatrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(n));
  Eigen::VectorXd z(n);
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t i = 0; i < n; ++i) z[i] = normal(engine);
    Eigen::VectorXd x = p.mean() + f.multiply_lower(z);
    if (grid)
      for (std::size_t i = 0; i < n; ++i) x[i] = grid->quantize(x[i]);
    out.row(static_cast<Eigen::Index>(r)) = x.transpose();
  }
  return out;
}

struct HistogramBin {
  std::vector<std::int64_t> cell;
  std::size_t count_p = 0;
  std::size_t count_q = 0;
};

struct EmpiricalKl {
  double kl = 0.0;       ///< nats
  double std_err = 0.0;  ///< delta-method standard error
  std::size_t samples_p = 0;
  std::size_t samples_q = 0;
  std::vector<HistogramBin> bins;  ///< union of occupied cells, lexicographic
};

/// Plug-in KL D(P || Q) between the histograms of two sample sets on a grid.
///
/// Each occupied cell gets one pseudo-count (probability 1/N before
/// renormalization), so the estimate stays finite on disjoint supports.
inline EmpiricalKl empirical_kl_quantized(const SampleMatrix& samples_p, const SampleMatrix& samples_q,
                                          const QuantizationGrid& grid) {
  grid.validate();
  if (samples_p.rows() == 0 || samples_q.rows() == 0) throw EmptySample("empirical KL: empty sample set");
  if (samples_p.cols() != samples_q.cols())
    throw DimensionMismatch("empirical KL: sample sets have different dimensions");
  const auto n = samples_p.cols();
  if (n < 1 || n > 3) throw DomainError("empirical KL: histogram estimate limited to n <= 3");

  std::map<std::vector<std::int64_t>, std::pair<std::size_t, std::size_t>> table;
  std::vector<std::int64_t> key(static_cast<std::size_t>(n));
  auto tally = [&](const SampleMatrix& s, bool first) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      for (Eigen::Index i = 0; i < n; ++i) key[static_cast<std::size_t>(i)] = grid.index(s(r, i));
      auto& slot = table[key];
      (first ? slot.first : slot.second) += 1;
    }
  };
  tally(samples_p, true);
  tally(samples_q, false);

  EmpiricalKl out;
  out.samples_p = static_cast<std::size_t>(samples_p.rows());
  out.samples_q = static_cast<std::size_t>(samples_q.rows());
  const double bins = static_cast<double>(table.size());
  const double np = static_cast<double>(out.samples_p);
  const double nq = static_cast<double>(out.samples_q);

  double kl = 0.0, second = 0.0, chi = 0.0;
  out.bins.reserve(table.size());
  for (const auto& [cell, counts] : table) {
    const double ph = (static_cast<double>(counts.first) + 1.0) / (np + bins);
    const double qh = (static_cast<double>(counts.second) + 1.0) / (nq + bins);
    const double lr = std::log(ph / qh);
    kl += ph * lr;
    second += ph * lr * lr;
    chi += ph * ph / qh;
    out.bins.push_back({cell, counts.first, counts.second});
  }
  out.kl = kl;
  const double var = (second - kl * kl) / np + (chi - 1.0) / nq;
  out.std_err = std::sqrt(var > 0.0 ? var : 0.0);
  return out;
}

}  // namespace stegcap
