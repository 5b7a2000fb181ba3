#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "stegcap/capacity.hpp"
#include "stegcap/covariance.hpp"
#include "stegcap/error.hpp"
#include "stegcap/gaussmodel.hpp"
#include "stegcap/gibbs.hpp"
#include "stegcap/montecarlo.hpp"

namespace stegcap::io {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const char* what) {
  if (!j.is_number()) throw SchemaError(std::string("field '") + what + "' must be a number");
  return j.get<double>();
}

inline Eigen::MatrixXd matrix(const Json& j, std::size_t n) {
  if (!j.is_array() || j.size() != n) throw SchemaError("dense matrix must have " + std::to_string(n) + " rows");
  Eigen::MatrixXd m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != n)
      throw SchemaError("dense matrix row " + std::to_string(r) + " must have " + std::to_string(n) + " entries");
    for (std::size_t c = 0; c < n; ++c) m(r, c) = number(j[r][c], "matrix");
  }
  return m;
}

inline Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

inline Json to_json(const CovarianceSpec& c) {
  return std::visit(Overloaded{[](const cov::Dense& d) {
                                 return Json{{"type", "dense"}, {"matrix", detail::matrix_json(d.matrix)}};
                               },
                               [](const cov::ScaledIdentity& s) {
                                 return Json{{"type", "scaled_identity"}, {"sigma2", s.sigma2}};
                               },
                               [](const cov::Ar1Toeplitz& a) {
                                 return Json{{"type", "ar1_toeplitz"}, {"sigma2", a.sigma2}, {"rho", a.rho}};
                               }},
                    c);
}

/// `n` is only needed for the dense variant.
inline CovarianceSpec covariance_from_json(const Json& j, std::size_t n) {
  const auto type = detail::require(j, "type").get<std::string>();
  if (type == "scaled_identity") return cov::ScaledIdentity{detail::number(detail::require(j, "sigma2"), "sigma2")};
  if (type == "ar1_toeplitz")
    return cov::Ar1Toeplitz{detail::number(detail::require(j, "sigma2"), "sigma2"),
                            detail::number(detail::require(j, "rho"), "rho")};
  if (type == "dense") return cov::Dense{detail::matrix(detail::require(j, "matrix"), n)};
  throw SchemaError("unknown covariance type '" + type + "'");
}

inline Json to_json(const QuantizationGrid& g) {
  return Json{{"step", g.step}, {"bits", g.bits}, {"origin", g.origin}};
}

inline QuantizationGrid grid_from_json(const Json& j) {
  QuantizationGrid g;
  g.step = detail::number(detail::require(j, "step"), "step");
  if (j.contains("bits")) g.bits = j.at("bits").get<int>();
  if (j.contains("origin")) g.origin = detail::number(j.at("origin"), "origin");
  g.validate();
  return g;
}

/// Constant means are written as a scalar to keep large-n files small.
inline Json to_json(const GaussianModel& m) {
  Json j;
  j["dim"] = m.dim();
  const auto& mu = m.mean();
  if ((mu.array() == mu[0]).all()) {
    j["mean"] = mu[0];
  } else {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < mu.size(); ++i) arr.push_back(mu[i]);
    j["mean"] = arr;
  }
  j["covariance"] = to_json(m.covariance());
  return j;
}

inline GaussianModel model_from_json(const Json& j) {
  const auto& dim_j = detail::require(j, "dim");
  if (!dim_j.is_number_integer() || dim_j.get<long long>() < 1) throw SchemaError("'dim' must be a positive integer");
  const auto n = dim_j.get<std::size_t>();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (j.contains("mean")) {
    const auto& mj = j.at("mean");
    if (mj.is_number()) {
      mean.setConstant(mj.get<double>());
    } else {
      if (!mj.is_array() || mj.size() != n) throw SchemaError("'mean' must be a number or an array of length dim");
      for (std::size_t i = 0; i < n; ++i) mean[static_cast<Eigen::Index>(i)] = detail::number(mj[i], "mean");
    }
  }
  return GaussianModel(mean, covariance_from_json(detail::require(j, "covariance"), n));
}

inline Json to_json(const DetectionBounds& b) {
  return Json{{"kl_budget_nats", b.kl_budget},
              {"p_d_max", b.p_d_max},
              {"p_e_min", b.p_e_min},
              {"p_e_avg_min", b.p_e_avg_min},
              {"vacuous", b.vacuous}};
}

/// Rate fields are divided by `unit_scale` (1 for nats, ln 2 for bits).
inline Json to_json(const CapacityResult& r, double unit_scale = 1.0) {
  return Json{{"n", r.n},
              {"epsilon", r.epsilon},
              {"lower_bound_mode", r.lower_bound_mode},
              {"gamma", r.gamma},
              {"embedding_factor", r.embedding_factor},
              {"rate_total", r.rate_total / unit_scale},
              {"rate_per_element", r.rate_per_element / unit_scale},
              {"srl_bound", r.srl_bound / unit_scale},
              {"achievable_rate", r.achievable_rate / unit_scale},
              {"detection", to_json(r.detection)}};
}

inline Json to_json(const DetectionReport& r) {
  return Json{{"alpha_hat", r.alpha_hat},
              {"beta_hat", r.beta_hat},
              {"p_e_hat", r.p_e_hat},
              {"p_e_bound", r.p_e_bound},
              {"std_err", r.std_err},
              {"pass", r.pass},
              {"trials", r.trials},
              {"cover_trials", r.cover_trials},
              {"stego_trials", r.stego_trials},
              {"embedding_factor", r.embedding_factor},
              {"kl_nats", r.kl},
              {"warnings", r.warnings}};
}

inline Json to_json(const DetectionExperiment& e) {
  Json j{{"cover", to_json(e.cover)}, {"epsilon", e.epsilon}, {"trials", e.trials}, {"seed", e.seed},
         {"threads", e.threads}};
  j["grid"] = e.grid ? to_json(*e.grid) : Json(nullptr);
  return j;
}

inline Json to_json(const DecodingExperiment& e) {
  Json j{{"cover", {{"mean", e.cover.mean}, {"covariance", to_json(e.cover.covariance)}}},
         {"epsilon", e.epsilon},
         {"rate_fraction", e.rate_fraction},
         {"n_list", e.n_list},
         {"trials", e.trials},
         {"seed", e.seed},
         {"threads", e.threads}};
  j["codebook_size"] = e.codebook_size ? Json(*e.codebook_size) : Json(nullptr);
  j["grid"] = e.grid ? to_json(*e.grid) : Json(nullptr);
  return j;
}

inline Json to_json(const DecodingReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.points)
    pts.push_back(Json{{"n", p.n},
                       {"codebook_size", p.codebook_size},
                       {"capacity_nats", p.capacity_nats},
                       {"rate_nats", p.rate_nats},
                       {"trials", p.trials},
                       {"errors", p.errors},
                       {"p_b_hat", p.p_b_hat},
                       {"std_err", p.std_err}});
  return Json{{"decoder", r.decoder}, {"points", pts}, {"monotone_trend", r.monotone_trend}};
}

inline Json to_json(const gibbs::EquivalenceReport& r) {
  return Json{{"max_abs_diff", r.max_abs_diff}, {"tolerance", r.tolerance}, {"pass", r.pass}, {"states", r.states}};
}

/// MRF description plus its clique potentials, as stored in one file.
struct GibbsSpecFile {
  gibbs::MRFSpec spec;
  gibbs::PotentialSpec potential;
};

inline GibbsSpecFile gibbs_from_json(const Json& j) {
  GibbsSpecFile f;
  auto& s = f.spec;
  for (const auto& site : detail::require(j, "sites")) s.sites.push_back(site.get<std::string>());
  const std::size_t n = s.sites.size();
  if (j.contains("neighbors")) {
    s.neighbors = j.at("neighbors").get<std::vector<std::vector<std::size_t>>>();
  } else {
    s.neighbors.assign(n, {});
  }
  s.cliques = detail::require(j, "cliques").get<std::vector<std::vector<std::size_t>>>();
  const auto& alpha = detail::require(j, "alphabet");
  if (!alpha.is_array() || alpha.empty()) throw SchemaError("'alphabet' must be a non-empty array");
  if (alpha[0].is_array()) {
    s.alphabet = alpha.get<std::vector<std::vector<double>>>();
  } else {
    s.alphabet.assign(n, alpha.get<std::vector<double>>());
  }
  s.temperature = j.contains("temperature") ? detail::number(j.at("temperature"), "temperature") : 1.0;

  const std::string form = j.value("potential_form", std::string("quadratic"));
  if (form == "quadratic")
    f.potential.form = gibbs::PotentialForm::Quadratic;
  else if (form == "absolute")
    f.potential.form = gibbs::PotentialForm::AbsoluteDeviation;
  else
    throw SchemaError("unknown potential_form '" + form + "'");

  const auto& pots = detail::require(j, "potentials");
  if (!pots.is_array() || pots.size() != s.cliques.size())
    throw SchemaError("'potentials' must list one entry per clique");
  for (std::size_t k = 0; k < pots.size(); ++k) {
    const std::size_t m = s.cliques[k].size();
    gibbs::CliquePotential cp;
    const auto mean = detail::require(pots[k], "mean").get<std::vector<double>>();
    if (mean.size() != m) throw SchemaError("potential " + std::to_string(k) + ": mean size differs from clique size");
    cp.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(m));
    cp.covariance = detail::matrix(detail::require(pots[k], "covariance"), m);
    f.potential.cliques.push_back(std::move(cp));
  }
  s.validate();
  f.potential.validate(s);
  return f;
}

inline Json to_json(const GibbsSpecFile& f) {
  const auto& s = f.spec;
  Json pots = Json::array();
  for (const auto& c : f.potential.cliques) {
    std::vector<double> mean(c.mean.data(), c.mean.data() + c.mean.size());
    pots.push_back(Json{{"mean", mean}, {"covariance", detail::matrix_json(c.covariance)}});
  }
  return Json{{"sites", s.sites},
              {"neighbors", s.neighbors},
              {"cliques", s.cliques},
              {"alphabet", s.alphabet},
              {"temperature", s.temperature},
              {"potential_form", f.potential.form == gibbs::PotentialForm::Quadratic ? "quadratic" : "absolute"},
              {"potentials", pots}};
}

}  // namespace stegcap::io
