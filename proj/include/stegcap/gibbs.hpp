#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "stegcap/covariance.hpp"
#include "stegcap/error.hpp"
#include "stegcap/gaussmodel.hpp"

namespace stegcap::gibbs {

/// Exhaustive enumeration is refused above this many joint states.
inline constexpr std::size_t kMaxStates = 10'000'000;

/// Finite Markov random field: sites, a symmetric neighborhood system,
/// cliques of mutually neighboring sites, per-site alphabets and a temperature.
struct MRFSpec {
  std::vector<std::string> sites;
  std::vector<std::vector<std::size_t>> neighbors;  ///< per site
  std::vector<std::vector<std::size_t>> cliques;
  std::vector<std::vector<double>> alphabet;  ///< per site, ordered
  double temperature = 1.0;

  std::size_t site_count() const noexcept { return sites.size(); }

  bool are_neighbors(std::size_t i, std::size_t j) const {
    const auto& nb = neighbors[i];
    return std::find(nb.begin(), nb.end(), j) != nb.end();
  }

  void validate() const {
    const std::size_t n = sites.size();
    if (n == 0) throw InvalidState("MRF: no sites");
    if (neighbors.size() != n) throw InvalidState("MRF: neighbor list count differs from site count");
    if (alphabet.size() != n) throw InvalidState("MRF: alphabet count differs from site count");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw DomainError("MRF: temperature must be > 0");
    for (std::size_t i = 0; i < n; ++i) {
      if (alphabet[i].empty()) throw InvalidState("MRF: empty alphabet at site " + sites[i]);
      for (std::size_t j : neighbors[i]) {
        if (j >= n) throw InvalidState("MRF: neighbor index out of range at site " + sites[i]);
        if (j == i) throw InvalidState("MRF: site " + sites[i] + " lists itself as a neighbor");
        if (!are_neighbors(j, i))
          throw InvalidState("MRF: neighborhood not symmetric between " + sites[i] + " and " + sites[j]);
      }
    }
    for (const auto& c : cliques) {
      if (c.empty()) throw InvalidState("MRF: empty clique");
      for (std::size_t a = 0; a < c.size(); ++a) {
        if (c[a] >= n) throw InvalidState("MRF: clique member out of range");
        for (std::size_t b = a + 1; b < c.size(); ++b) {
          if (c[a] == c[b]) throw InvalidState("MRF: repeated site in clique");
          if (!are_neighbors(c[a], c[b]))
            throw InvalidState("MRF: clique members " + sites[c[a]] + " and " + sites[c[b]] + " are not neighbors");
        }
      }
    }
  }

  /// Product of alphabet sizes; throws StateSpaceTooLarge above kMaxStates.
  std::size_t state_count() const {
    std::size_t total = 1;
    for (const auto& a : alphabet) {
      if (a.size() > kMaxStates / total) throw StateSpaceTooLarge("MRF: state space exceeds 1e7 states");
      total *= a.size();
    }
    return total;
  }

  bool cliques_disjoint() const {
    std::set<std::size_t> seen;
    for (const auto& c : cliques)
      for (std::size_t s : c)
        if (!seen.insert(s).second) return false;
    return true;
  }
};

enum class PotentialForm {
  Quadratic,          ///< (T/2) (f - mu) Sigma^{-1} (f - mu)^T
  AbsoluteDeviation,  ///< (T/2) |L^{-1} (f - mu)|_1, a non-Gaussian control
};

struct CliquePotential {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

struct PotentialSpec {
  std::vector<CliquePotential> cliques;  ///< parallel to MRFSpec::cliques
  PotentialForm form = PotentialForm::Quadratic;

  void validate(const MRFSpec& spec) const {
    if (cliques.size() != spec.cliques.size())
      throw InvalidState("potential: " + std::to_string(cliques.size()) + " clique potentials for " +
                         std::to_string(spec.cliques.size()) + " cliques");
    for (std::size_t k = 0; k < cliques.size(); ++k) {
      const auto m = static_cast<Eigen::Index>(spec.cliques[k].size());
      if (cliques[k].mean.size() != m) throw DimensionMismatch("potential: clique mean size mismatch");
      validate_covariance(cov::Dense{cliques[k].covariance}, spec.cliques[k].size());
    }
  }
};

/// One value per site, each drawn from that site's alphabet.
struct FieldState {
  std::vector<double> values;
};

inline void validate_state(const MRFSpec& spec, const FieldState& f) {
  if (f.values.size() != spec.site_count()) throw InvalidState("state: wrong number of site values");
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const auto& a = spec.alphabet[i];
    if (std::find(a.begin(), a.end(), f.values[i]) == a.end())
      throw InvalidState("state: value at site " + spec.sites[i] + " not in its alphabet");
  }
}

/// Mixed-radix decoding of a state index; site 0 varies fastest.
inline FieldState state_at(const MRFSpec& spec, std::size_t index) {
  FieldState f;
  f.values.resize(spec.site_count());
  for (std::size_t i = 0; i < spec.site_count(); ++i) {
    const std::size_t radix = spec.alphabet[i].size();
    f.values[i] = spec.alphabet[i][index % radix];
    index /= radix;
  }
  return f;
}

namespace detail {

/// Per-clique Cholesky factors, computed once per enumeration.
class PreparedPotential {
 public:
  PreparedPotential(const MRFSpec& spec, const PotentialSpec& pot) : spec_(spec), pot_(pot) {
    spec.validate();
    pot.validate(spec);
    for (const auto& c : pot.cliques) factors_.emplace_back(c.covariance);
  }

  double energy(const FieldState& f) const {
    double u = 0.0;
    for (std::size_t k = 0; k < spec_.cliques.size(); ++k) {
      const auto& members = spec_.cliques[k];
      Eigen::VectorXd dev(static_cast<Eigen::Index>(members.size()));
      for (std::size_t m = 0; m < members.size(); ++m)
        dev[static_cast<Eigen::Index>(m)] = f.values[members[m]] - pot_.cliques[k].mean[static_cast<Eigen::Index>(m)];
      const Eigen::VectorXd w = factors_[k].matrixL().solve(dev);
      const double v = pot_.form == PotentialForm::Quadratic ? w.squaredNorm() : w.lpNorm<1>();
      u += 0.5 * spec_.temperature * v;
    }
    return u;
  }

 private:
  const MRFSpec& spec_;
  const PotentialSpec& pot_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
};

// exp(-(x - max)) normalized; robust against large exponents.
inline std::vector<double> normalize_log_weights(const std::vector<double>& log_w) {
  const double top = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> p(log_w.size());
  double z = 0.0;
  for (std::size_t i = 0; i < log_w.size(); ++i) z += (p[i] = std::exp(log_w[i] - top));
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace detail

/// U_f = sum over cliques of the clique potential.
inline double energy(const MRFSpec& spec, const PotentialSpec& pot, const FieldState& f) {
  detail::PreparedPotential prepared(spec, pot);
  validate_state(spec, f);
  return prepared.energy(f);
}

/// Energies of every state, indexed as in state_at().
inline std::vector<double> all_energies(const MRFSpec& spec, const PotentialSpec& pot) {
  detail::PreparedPotential prepared(spec, pot);
  const std::size_t m = spec.state_count();
  std::vector<double> u(m);
  for (std::size_t s = 0; s < m; ++s) u[s] = prepared.energy(state_at(spec, s));
  return u;
}

/// Z = sum over all states of exp(-U / T).
inline double partition_function(const MRFSpec& spec, const PotentialSpec& pot) {
  const auto u = all_energies(spec, pot);
  double z = 0.0;
  for (double v : u) z += std::exp(-v / spec.temperature);
  return z;
}

/// Gibbs pmf over all states from their energies.
inline std::vector<double> pmf_from_energies(const std::vector<double>& energies, double temperature) {
  std::vector<double> log_w(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) log_w[i] = -energies[i] / temperature;
  return detail::normalize_log_weights(log_w);
}

inline std::vector<double> gibbs_table(const MRFSpec& spec, const PotentialSpec& pot) {
  return pmf_from_energies(all_energies(spec, pot), spec.temperature);
}

/// P(xi = f) = exp(-U_f / T) / Z.
inline double gibbs_pmf(const MRFSpec& spec, const PotentialSpec& pot, const FieldState& f) {
  validate_state(spec, f);
  detail::PreparedPotential prepared(spec, pot);
  const std::size_t m = spec.state_count();
  const double uf = prepared.energy(f);
  double z = 0.0;
  for (std::size_t s = 0; s < m; ++s) z += std::exp(-(prepared.energy(state_at(spec, s)) - uf) / spec.temperature);
  return 1.0 / z;
}

/// N(mu, Sigma) density evaluated at every joint state and renormalized
/// over the finite state space.
inline std::vector<double> quantized_gaussian_pmf_on_alphabet(const GaussianModel& model, const MRFSpec& spec) {
  spec.validate();
  if (model.dim() != spec.site_count())
    throw DimensionMismatch("Gaussian model dimension differs from the number of sites");
  const std::size_t m = spec.state_count();
  const auto factor = model.factor();
  std::vector<double> log_w(m);
  Eigen::VectorXd x(static_cast<Eigen::Index>(model.dim()));
  for (std::size_t s = 0; s < m; ++s) {
    const auto f = state_at(spec, s);
    for (std::size_t i = 0; i < f.values.size(); ++i) x[static_cast<Eigen::Index>(i)] = f.values[i];
    log_w[s] = -0.5 * factor.mahalanobis(x - model.mean());
  }
  return detail::normalize_log_weights(log_w);
}

/// Joint Gaussian whose covariance is block-diagonal in the clique
/// parameters. Requires cliques that partition the sites.
inline GaussianModel block_diagonal_model(const MRFSpec& spec, const PotentialSpec& pot) {
  spec.validate();
  pot.validate(spec);
  if (!spec.cliques_disjoint()) throw DomainError("block-diagonal model needs disjoint cliques");
  const auto n = static_cast<Eigen::Index>(spec.site_count());
  std::vector<bool> covered(spec.site_count(), false);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < spec.cliques.size(); ++k) {
    const auto& members = spec.cliques[k];
    for (std::size_t a = 0; a < members.size(); ++a) {
      covered[members[a]] = true;
      mean[static_cast<Eigen::Index>(members[a])] = pot.cliques[k].mean[static_cast<Eigen::Index>(a)];
      for (std::size_t b = 0; b < members.size(); ++b)
        sigma(static_cast<Eigen::Index>(members[a]), static_cast<Eigen::Index>(members[b])) =
            pot.cliques[k].covariance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end())
    throw DomainError("block-diagonal model needs every site in some clique");
  return GaussianModel(mean, cov::Dense{sigma});
}

struct EquivalenceReport {
  double max_abs_diff = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::size_t states = 0;
};

/// Largest pointwise gap between the Gibbs pmf and the renormalized Gaussian.
inline EquivalenceReport equivalence_report(const MRFSpec& spec, const PotentialSpec& pot, const GaussianModel& model,
                                            double tolerance) {
  if (!spec.cliques_disjoint()) throw DomainError("equivalence check needs disjoint cliques");
  const auto gibbs = gibbs_table(spec, pot);
  const auto gauss = quantized_gaussian_pmf_on_alphabet(model, spec);
  EquivalenceReport r;
  r.states = gibbs.size();
  for (std::size_t s = 0; s < gibbs.size(); ++s) r.max_abs_diff = std::max(r.max_abs_diff, std::abs(gibbs[s] - gauss[s]));
  r.tolerance = tolerance;
  r.pass = r.max_abs_diff <= tolerance;
  return r;
}

/// max |P(f_i | all other sites) - P(f_i | neighbors of i)| over sites and
/// states; zero for a Markov random field.
inline double markov_gap(const MRFSpec& spec, const PotentialSpec& pot) {
  const auto p = gibbs_table(spec, pot);
  const std::size_t sites = spec.site_count();
  std::vector<std::size_t> stride(sites, 1);
  for (std::size_t i = 1; i < sites; ++i) stride[i] = stride[i - 1] * spec.alphabet[i - 1].size();
  auto digit = [&](std::size_t s, std::size_t i) { return (s / stride[i]) % spec.alphabet[i].size(); };

  double gap = 0.0;
  for (std::size_t i = 0; i < sites; ++i) {
    // Marginal over (site i, its neighbors), keyed by their digits.
    std::vector<std::size_t> local{i};
    local.insert(local.end(), spec.neighbors[i].begin(), spec.neighbors[i].end());
    std::map<std::vector<std::size_t>, double> joint_local;
    std::vector<std::size_t> key(local.size());
    for (std::size_t s = 0; s < p.size(); ++s) {
      for (std::size_t k = 0; k < local.size(); ++k) key[k] = digit(s, local[k]);
      joint_local[key] += p[s];
    }
    for (std::size_t s = 0; s < p.size(); ++s) {
      const std::size_t own = digit(s, i);
      const std::size_t base = s - own * stride[i];
      double rest = 0.0;
      for (std::size_t v = 0; v < spec.alphabet[i].size(); ++v) rest += p[base + v * stride[i]];
      const double full = p[s] / rest;

      for (std::size_t k = 0; k < local.size(); ++k) key[k] = digit(s, local[k]);
      const double num = joint_local[key];
      double den = 0.0;
      for (std::size_t v = 0; v < spec.alphabet[i].size(); ++v) {
        key[0] = v;
        den += joint_local[key];
      }
      gap = std::max(gap, std::abs(full - num / den));
    }
  }
  return gap;
}

}  // namespace stegcap::gibbs
