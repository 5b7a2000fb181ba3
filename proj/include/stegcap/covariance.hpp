#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "stegcap/error.hpp"

namespace stegcap {

/// Largest dimension for which dense (cubic-cost) covariance operations are allowed.
inline constexpr std::size_t kMaxDenseDim = 4096;

/// Eigenvalues below this fraction of the largest one count as singular.
inline constexpr double kConditionFloor = 1e-12;

namespace cov {

struct Dense {
  Eigen::MatrixXd matrix;
};

/// sigma2 * I
struct ScaledIdentity {
  double sigma2 = 1.0;
};

/// Stationary AR(1) covariance: entries sigma2 * rho^|i-j|.
struct Ar1Toeplitz {
  double sigma2 = 1.0;
  double rho = 0.0;
};

}  // namespace cov

using CovarianceSpec = std::variant<cov::Dense, cov::ScaledIdentity, cov::Ar1Toeplitz>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

inline bool is_dense(const CovarianceSpec& c) { return std::holds_alternative<cov::Dense>(c); }

/// Checks shape and strict positive definiteness for an n-dimensional model.
inline void validate_covariance(const CovarianceSpec& c, std::size_t n) {
  if (n == 0) throw DomainError("covariance: dimension must be >= 1");
  std::visit(
      Overloaded{
          [n](const cov::Dense& d) {
            if (static_cast<std::size_t>(d.matrix.rows()) != n ||
                static_cast<std::size_t>(d.matrix.cols()) != n)
              throw DimensionMismatch("dense covariance is " + std::to_string(d.matrix.rows()) + "x" +
                                      std::to_string(d.matrix.cols()) + ", expected " +
                                      std::to_string(n) + "x" + std::to_string(n));
            if (n > kMaxDenseDim)
              throw DomainError("dense covariance limited to n <= 4096; use a structured form");
            if (!d.matrix.allFinite()) throw NotPositiveDefinite("covariance has non-finite entries");
            const double scale = d.matrix.cwiseAbs().maxCoeff();
            if ((d.matrix - d.matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
              throw NotPositiveDefinite("covariance is not symmetric");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.matrix, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            const double hi = es.eigenvalues().maxCoeff();
            if (!(hi > 0.0) || lo < kConditionFloor * hi)
              throw NotPositiveDefinite("covariance eigenvalue " + std::to_string(lo) +
                                        " below 1e-12 of the largest");
          },
          [](const cov::ScaledIdentity& s) {
            if (!(s.sigma2 > 0.0) || !std::isfinite(s.sigma2))
              throw NotPositiveDefinite("scaled identity needs sigma2 > 0");
          },
          [n](const cov::Ar1Toeplitz& a) {
            if (!(a.sigma2 > 0.0) || !std::isfinite(a.sigma2))
              throw NotPositiveDefinite("AR(1) covariance needs sigma2 > 0");
            if (!(std::abs(a.rho) < 1.0)) throw NotPositiveDefinite("AR(1) covariance needs |rho| < 1");
            if (n > 1) {
              const double r = (1.0 - std::abs(a.rho)) / (1.0 + std::abs(a.rho));
              if (r * r < kConditionFloor) throw NotPositiveDefinite("AR(1) covariance is numerically singular");
            }
          }},
      c);
}

inline Eigen::MatrixXd to_dense(const CovarianceSpec& c, std::size_t n) {
  return std::visit(Overloaded{[](const cov::Dense& d) -> Eigen::MatrixXd { return d.matrix; },
                               [n](const cov::ScaledIdentity& s) -> Eigen::MatrixXd {
                                 return s.sigma2 * Eigen::MatrixXd::Identity(n, n);
                               },
                               [n](const cov::Ar1Toeplitz& a) -> Eigen::MatrixXd {
                                 Eigen::MatrixXd m(n, n);
                                 for (std::size_t i = 0; i < n; ++i)
                                   for (std::size_t j = 0; j < n; ++j)
                                     m(i, j) = a.sigma2 * std::pow(a.rho, std::abs(static_cast<double>(i) -
                                                                                   static_cast<double>(j)));
                                 return m;
                               }},
                    c);
}

/// factor * Sigma, keeping the structured form.
inline CovarianceSpec scaled(const CovarianceSpec& c, double factor) {
  return std::visit(Overloaded{[factor](const cov::Dense& d) -> CovarianceSpec {
                                 return cov::Dense{factor * d.matrix};
                               },
                               [factor](const cov::ScaledIdentity& s) -> CovarianceSpec {
                                 return cov::ScaledIdentity{factor * s.sigma2};
                               },
                               [factor](const cov::Ar1Toeplitz& a) -> CovarianceSpec {
                                 return cov::Ar1Toeplitz{factor * a.sigma2, a.rho};
                               }},
                    c);
}

/// Sigma_a + Sigma_b; stays structured when both share the same structure.
inline CovarianceSpec sum(const CovarianceSpec& a, const CovarianceSpec& b, std::size_t n) {
  if (auto* x = std::get_if<cov::ScaledIdentity>(&a))
    if (auto* y = std::get_if<cov::ScaledIdentity>(&b)) return cov::ScaledIdentity{x->sigma2 + y->sigma2};
  if (auto* x = std::get_if<cov::Ar1Toeplitz>(&a))
    if (auto* y = std::get_if<cov::Ar1Toeplitz>(&b))
      if (x->rho == y->rho) return cov::Ar1Toeplitz{x->sigma2 + y->sigma2, x->rho};
  return cov::Dense{to_dense(a, n) + to_dense(b, n)};
}

/// k with target == k * reference when both are structured and share a shape.
inline std::optional<double> proportionality(const CovarianceSpec& target, const CovarianceSpec& reference) {
  if (auto* t = std::get_if<cov::ScaledIdentity>(&target))
    if (auto* r = std::get_if<cov::ScaledIdentity>(&reference)) return t->sigma2 / r->sigma2;
  if (auto* t = std::get_if<cov::Ar1Toeplitz>(&target))
    if (auto* r = std::get_if<cov::Ar1Toeplitz>(&reference))
      if (t->rho == r->rho) return t->sigma2 / r->sigma2;
  return std::nullopt;
}

/// tr(Sigma^{-1}) for the AR(1) form, from its tridiagonal inverse.
inline double ar1_inverse_trace(const cov::Ar1Toeplitz& a, std::size_t n) {
  if (n == 1) return 1.0 / a.sigma2;
  const double r2 = a.rho * a.rho;
  return (2.0 + static_cast<double>(n - 2) * (1.0 + r2)) / (a.sigma2 * (1.0 - r2));
}

/// Lower Cholesky factor L (Sigma = L L^T) with structure-aware products and solves.
class CovarianceFactor {
 public:
  CovarianceFactor(const CovarianceSpec& c, std::size_t n) : spec_(c), n_(n) {
    validate_covariance(c, n);
    if (auto* d = std::get_if<cov::Dense>(&c)) {
      llt_.compute(d->matrix);
      if (llt_.info() != Eigen::Success) throw NotPositiveDefinite("Cholesky factorization failed");
    }
  }

  std::size_t dim() const noexcept { return n_; }
  const CovarianceSpec& spec() const noexcept { return spec_; }

  /// x = L z
  Eigen::VectorXd multiply_lower(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    check(z.size());
    return std::visit(Overloaded{[&](const cov::Dense&) -> Eigen::VectorXd {
                                   return llt_.matrixL() * z;
                                 },
                                 [&](const cov::ScaledIdentity& s) -> Eigen::VectorXd {
                                   return std::sqrt(s.sigma2) * z;
                                 },
                                 [&](const cov::Ar1Toeplitz& a) -> Eigen::VectorXd {
                                   Eigen::VectorXd x(n_);
                                   const double sd = std::sqrt(a.sigma2);
                                   const double innov = sd * std::sqrt(1.0 - a.rho * a.rho);
                                   x[0] = sd * z[0];
                                   for (std::size_t i = 1; i < n_; ++i) x[i] = a.rho * x[i - 1] + innov * z[i];
                                   return x;
                                 }},
                      spec_);
  }

  /// z = L^{-1} v
  Eigen::VectorXd solve_lower(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    check(v.size());
    return std::visit(Overloaded{[&](const cov::Dense&) -> Eigen::VectorXd {
                                   return llt_.matrixL().solve(v);
                                 },
                                 [&](const cov::ScaledIdentity& s) -> Eigen::VectorXd {
                                   return v / std::sqrt(s.sigma2);
                                 },
                                 [&](const cov::Ar1Toeplitz& a) -> Eigen::VectorXd {
                                   Eigen::VectorXd z(n_);
                                   const double sd = std::sqrt(a.sigma2);
                                   const double innov = sd * std::sqrt(1.0 - a.rho * a.rho);
                                   z[0] = v[0] / sd;
                                   for (std::size_t i = 1; i < n_; ++i) z[i] = (v[i] - a.rho * v[i - 1]) / innov;
                                   return z;
                                 }},
                      spec_);
  }

  /// v^T Sigma^{-1} v
  double mahalanobis(const Eigen::Ref<const Eigen::VectorXd>& v) const { return solve_lower(v).squaredNorm(); }

  double log_det() const {
    const double n = static_cast<double>(n_);
    return std::visit(Overloaded{[&](const cov::Dense&) {
                                   return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
                                 },
                                 [&](const cov::ScaledIdentity& s) { return n * std::log(s.sigma2); },
                                 [&](const cov::Ar1Toeplitz& a) {
                                   return n * std::log(a.sigma2) + (n - 1.0) * std::log1p(-a.rho * a.rho);
                                 }},
                      spec_);
  }

  /// L as an explicit n x n matrix. O(n^2) for the structured forms.
  Eigen::MatrixXd lower_matrix() const {
    if (is_dense(spec_)) return llt_.matrixL();
    const auto n = static_cast<Eigen::Index>(n_);
    Eigen::MatrixXd l(n, n);
    for (Eigen::Index j = 0; j < n; ++j) l.col(j) = multiply_lower(Eigen::VectorXd::Unit(n, j));
    return l;
  }

 private:
  void check(Eigen::Index size) const {
    if (static_cast<std::size_t>(size) != n_)
      throw DimensionMismatch("vector length " + std::to_string(size) + " does not match dimension " +
                              std::to_string(n_));
  }

  CovarianceSpec spec_;
  std::size_t n_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace stegcap
