// Acceptance suite. Usage: acceptance [criterion...]; with no arguments all
// twelve criteria run. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mrf_gen.hpp"
#include "oracles.hpp"
#include "stegcap/cli.hpp"

using namespace stegcap;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;  // keep the first failure
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void within_time(Outcome& o, Clock::time_point t0, double limit) {
  const double s = seconds_since(t0);
  if (s >= limit) o.fail("took " + io::format_double(s) + " s, limit " + io::format_double(limit) + " s");
  if (o.pass) o.detail += (o.detail.empty() ? "" : "; ") + std::string("runtime ") + io::format_double(std::round(s * 1000) / 1000) + " s";
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// 1. a - ln a - 1 - gamma vanishes over 200 log-spaced gamma in [1e-8, 50].
Outcome embedding_identity() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double gamma = std::pow(10.0, -8.0 + (std::log10(50.0) + 8.0) * k / 199.0);
    const double a = embedding_factor_from_gamma(gamma);
    const double scaled = verify_residual(a, gamma) / (1.0 + gamma);
    worst = std::max(worst, scaled);
    if (scaled > 1e-10) o.fail("gamma=" + fmt(gamma) + " residual/(1+gamma)=" + fmt(scaled));
  }
  o.detail = "max residual/(1+gamma) " + fmt(worst);
  within_time(o, t0, 1.0);
  return o;
}

// 2. a*(0) = 1 and rate -> 0 as eps -> 0.
Outcome trivial_endpoint() {
  Outcome o;
  if (embedding_factor_from_gamma(0.0) != 1.0) o.fail("a*(0) != 1");
  for (std::size_t n : {1u, 100u, 1'000'000u}) {
    const auto r = max_embedding_rate(CapacityQuery::from_epsilon(0.0, n));
    if (std::abs(r.rate_total) > 1e-12 || std::abs(r.embedding_factor - 1.0) > 1e-12)
      o.fail("eps=0, n=" + std::to_string(n) + " rate=" + fmt(r.rate_total));
  }
  double prev = 0.0;
  for (double eps = 1e-1; eps >= 1e-14; eps /= 10) {
    const double rate = max_embedding_rate(CapacityQuery::from_epsilon(eps, 1)).rate_total;
    if (eps < 1e-12 && rate > 1e-12) o.fail("eps=" + fmt(eps) + " rate=" + fmt(rate));
    if (prev != 0.0 && rate >= prev) o.fail("rate not shrinking with eps");
    prev = rate;
  }
  return o;
}

// 3. rate <= 2 eps sqrt(n) everywhere, and rate(4n)/rate(n) in [1.9, 2.0] for n >= 1e4.
Outcome srl_dominance_and_scaling() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::vector<double> eps_grid{0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0};
  const auto n_grid = cli::log_grid(1, 10'000'000, 10);
  std::size_t dominance_violations = 0, ratio_violations = 0, ratio_checked = 0;
  double ratio_lo = 1e300, ratio_hi = 0.0;
  for (double eps : eps_grid) {
    for (std::size_t n : n_grid) {
      const auto r = max_embedding_rate(CapacityQuery::from_epsilon(eps, n));
      if (!(r.rate_total <= r.srl_bound)) ++dominance_violations;
      if (n < 10'000) continue;
      const double q = max_embedding_rate(CapacityQuery::from_epsilon(eps, 4 * n)).rate_total / r.rate_total;
      ++ratio_checked;
      ratio_lo = std::min(ratio_lo, q);
      ratio_hi = std::max(ratio_hi, q);
      if (!(q >= 1.9 && q <= 2.0)) ++ratio_violations;
    }
  }
  if (dominance_violations) o.fail(std::to_string(dominance_violations) + " grid points exceed 2 eps sqrt(n)");
  if (ratio_violations)
    o.fail("SRL dominance holds; " + std::to_string(ratio_violations) + " of " + std::to_string(ratio_checked) +
           " rate(4n)/rate(n) ratios outside [1.9, 2.0], observed range [" + io::format_double(ratio_lo) + ", " + io::format_double(ratio_hi) +
           "]");
  else
    o.detail = "ratios in [" + fmt(ratio_lo) + ", " + fmt(ratio_hi) + "]";
  within_time(o, t0, 5.0);
  return o;
}

// 4. P_E = 0.1 and 0.2 curves over [1e2, 1e6]: increasing, concave, ordered.
Outcome rate_curves() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto rows = cli::rate_vs_n_rows({0.1, 0.2}, cli::log_grid(100, 1'000'000, 20));
  std::size_t checked = 0;
  for (const auto& c : cli::check_rate_curves(rows)) {
    if (c.name.find("4n") != std::string::npos || c.name.find("2 eps sqrt") != std::string::npos) continue;
    ++checked;
    if (!c.pass) o.fail(c.name);
  }
  if (checked != 5) o.fail("expected 5 shape checks, ran " + std::to_string(checked));
  o.detail = std::to_string(rows.size()) + " rows";
  within_time(o, t0, 5.0);
  return o;
}

std::vector<GaussianModel> random_covers(std::uint64_t seed, int count) {
  oracle::Gen g(seed);
  std::vector<GaussianModel> out;
  for (int i = 0; i < count; ++i) {
    const std::size_t n = g.integer(1, 16);
    out.emplace_back(g.vector(n), cov::Dense{g.spd(n, 50.0)});
  }
  return out;
}

// 5. KL(stego || cover) = 2 eps^2 for the optimal codebook.
Outcome constraint_saturation() {
  Outcome o;
  oracle::Gen g(505);
  double worst = 0.0;
  for (const auto& cover : random_covers(5, 20)) {
    const double eps = g.uniform(0.05, 1.0);
    const auto q = CapacityQuery::from_epsilon(eps, cover.dim());
    const auto stego = stego_model(cover, optimal_codebook_params(cover, q));
    const double rel = std::abs(kl_gaussian(stego, cover) - 2 * eps * eps) / (2 * eps * eps);
    worst = std::max(worst, rel);
    if (rel > 1e-9) o.fail("n=" + std::to_string(cover.dim()) + " relative error " + fmt(rel));
  }
  o.detail = "20 covers, max relative error " + fmt(worst);
  return o;
}

// 6. The reverse divergence of the same pair leads back to the same a*.
Outcome reverse_kl_consistency() {
  Outcome o;
  oracle::Gen g(606);
  double worst = 0.0;
  for (const auto& cover : random_covers(6, 20)) {
    const double eps = g.uniform(0.05, 1.0);
    const std::size_t n = cover.dim();
    const auto cap = max_embedding_rate(CapacityQuery::from_epsilon(eps, n));
    const auto stego = stego_model(cover, optimal_codebook_params(cover, CapacityQuery::from_epsilon(eps, n)));
    const double d_rev = kl_gaussian_reverse(cover, stego);
    // Oracle: solve (n/2)(1/a + ln a - 1) = d_rev for a >= 1 by bisection.
    long double lo = 1.0L, hi = 2.0L;
    auto f = [n](long double a) { return 0.5L * n * (1.0L / a + std::log(a) - 1.0L); };
    while (f(hi) < d_rev) hi *= 2.0L;
    for (int it = 0; it < 300; ++it) {
      const long double mid = 0.5L * (lo + hi);
      (f(mid) < d_rev ? lo : hi) = mid;
    }
    const double a_rev = static_cast<double>(0.5L * (lo + hi));
    const double rel = std::abs(a_rev - cap.embedding_factor) / cap.embedding_factor;
    worst = std::max(worst, rel);
    if (rel > 1e-6) o.fail("n=" + std::to_string(n) + " a*=" + fmt(cap.embedding_factor) + " a_rev=" + fmt(a_rev));
  }
  o.detail = "20 covers, max relative gap " + fmt(worst);
  return o;
}

// 7. Gibbs pmf equals the renormalized quantized Gaussian on disjoint cliques.
Outcome gibbs_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  oracle::Gen g(707);
  std::vector<oracle::RandomMrf> specs;
  for (int i = 0; i < 12; ++i) specs.push_back(oracle::random_disjoint_mrf(g, g.integer(1, 7), 6));
  for (const char* file : {"single_site.json", "pairs_2x2.json", "triangle.json"}) {
    const auto f = cli::load_gibbs_spec(std::string(STEGCAP_DATA_DIR) + "/gibbs/" + file);
    specs.push_back({f.spec, f.potential});
  }
  double worst = 0.0;
  std::size_t states = 0;
  for (const auto& m : specs) {
    const auto r = gibbs::equivalence_report(m.spec, m.potential, gibbs::block_diagonal_model(m.spec, m.potential), 1e-12);
    worst = std::max(worst, r.max_abs_diff);
    states += r.states;
    if (!r.pass) o.fail("max abs diff " + fmt(r.max_abs_diff));
  }
  o.detail = std::to_string(specs.size()) + " specs, " + std::to_string(states) + " states, max abs diff " + fmt(worst);
  within_time(o, t0, 10.0);
  return o;
}

DetectionReport detection_run() {
  return run_detection({GaussianModel::centered(4, cov::ScaledIdentity{1.0}), 0.3, std::nullopt, 100'000, 7, 1});
}

// 8. Exact LRT error respects 1 - sqrt(KL/2); Monte Carlo meets 1 - eps.
Outcome detection_bound() {
  Outcome o;
  const auto t0 = Clock::now();
  for (std::size_t n : {1u, 2u, 4u, 8u}) {
    for (double a : {1.01, 1.1, 1.5, 2.0, 4.0}) {
      const double kl = 0.5 * n * (a - 1 - std::log(a));
      const double exact = exact_lrt_error_diagonal(GaussianModel::centered(n, cov::ScaledIdentity{1.0}), a);
      const double bound = 1.0 - std::sqrt(kl / 2);
      if (!(exact >= bound)) o.fail("n=" + std::to_string(n) + " a=" + fmt(a) + " exact " + fmt(exact) + " < " + fmt(bound));
    }
  }
  const auto r = detection_run();
  if (!(r.p_e_hat >= 0.7 - 3 * r.std_err)) o.fail("P_e_hat " + fmt(r.p_e_hat) + " below 0.7 - 3 se");
  o.detail = "P_e_hat " + fmt(r.p_e_hat) + " +/- " + fmt(r.std_err);
  within_time(o, t0, 60.0);
  return o;
}

DecodingReport decoding_trend_run() {
  DecodingExperiment e;
  e.rate_fraction = 0.25;
  e.n_list = {16, 64, 256};
  e.seed = 7;
  return run_decoding(e);
}

DecodingReport decoding_overload_run() {
  DecodingExperiment e;
  e.rate_fraction = 1.5;
  e.n_list = {64};
  e.trials = 2000;
  e.seed = 7;
  return run_decoding(e);
}

// 9. P_B falls with n below capacity and is large above it.
Outcome achievability_trend() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto trend = decoding_trend_run();
  if (!trend.monotone_trend) o.fail("P_B not nonincreasing within 2 se");
  const auto over = decoding_overload_run();
  if (!(over.points[0].p_b_hat > 0.2)) o.fail("P_B at rate fraction 1.5 is " + fmt(over.points[0].p_b_hat));
  std::string pb;
  for (const auto& p : trend.points) pb += (pb.empty() ? "" : ", ") + fmt(p.p_b_hat);
  o.detail = "P_B(16, 64, 256) = " + pb + "; overloaded P_B " + fmt(over.points[0].p_b_hat);
  within_time(o, t0, 300.0);
  return o;
}

// 10. Theoretical payload at n = 2^18 is far below shipped practical points.
Outcome payload_comparison() {
  Outcome o;
  const auto t0 = Clock::now();
  std::ifstream is(std::string(STEGCAP_DATA_DIR) + "/published_points_approx.csv");
  const auto pts = cli::read_published_points(is);
  if (pts.empty()) o.fail("no published points shipped");
  const auto rows = cli::payload_vs_pe_rows(std::size_t{1} << 18, cli::pe_grid(0.05, 0.45, 0.01), pts);
  double top = 0.0;
  std::size_t flagged = 0, eligible = 0;
  for (const auto& r : rows) {
    if (r.kind == "theoretical") {
      top = std::max(top, r.theoretical_bpp);
      if (!(r.theoretical_bpp < 0.01)) o.fail("theoretical " + fmt(r.theoretical_bpp) + " bpp at P_E " + fmt(r.pe));
    } else if (r.payload_bpp >= 0.05) {
      ++eligible;
      flagged += r.above_theoretical;
      if (!r.above_theoretical) o.fail(r.method + " at " + fmt(r.payload_bpp) + " bpp not flagged");
    }
  }
  o.detail = "max theoretical " + fmt(top) + " bpp; " + std::to_string(flagged) + "/" + std::to_string(eligible) + " flagged";
  within_time(o, t0, 5.0);
  return o;
}

// 11. Quantization does not increase the divergence.
Outcome quantized_kl_direction() {
  Outcome o;
  const double eps = 0.5;
  std::string detail;
  std::uint64_t seed = 1100;
  for (std::size_t n : {1u, 2u}) {
    const auto cover = n == 1 ? GaussianModel::centered(1, cov::ScaledIdentity{1.0})
                              : GaussianModel::centered(2, cov::Ar1Toeplitz{1.0, 0.5});
    const auto stego = stego_model(cover, optimal_codebook_params(cover, CapacityQuery::from_epsilon(eps, n)));
    const double continuous = kl_gaussian(stego, cover);
    for (double step : {1.0, 0.5}) {
      const QuantizationGrid grid{step, 0, 0.0};
      const auto stego_draws = sample(stego, grid, 1'000'000, seed++);
      const auto cover_draws = sample(cover, grid, 1'000'000, seed++);
      const auto est = empirical_kl_quantized(stego_draws, cover_draws, grid);
      if (!(est.kl <= continuous + 3 * est.std_err))
        o.fail("n=" + std::to_string(n) + " step=" + fmt(step) + " empirical " + fmt(est.kl) + " > " + fmt(continuous));
      detail += (detail.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + ",step=" + fmt(step) + ": " +
                fmt(est.kl) + " <= " + fmt(continuous);
    }
  }
  if (o.pass) o.detail = detail;
  return o;
}

bool same(const DetectionReport& a, const DetectionReport& b) {
  return a.alpha_hat == b.alpha_hat && a.beta_hat == b.beta_hat && a.p_e_hat == b.p_e_hat && a.std_err == b.std_err &&
         a.cover_trials == b.cover_trials;
}

bool same(const DecodingReport& a, const DecodingReport& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    if (a.points[i].errors != b.points[i].errors || a.points[i].p_b_hat != b.points[i].p_b_hat ||
        a.points[i].std_err != b.points[i].std_err)
      return false;
  return a.monotone_trend == b.monotone_trend;
}

// 12. Criteria 8 and 9 reproduce bit-for-bit, including across thread counts.
Outcome determinism() {
  Outcome o;
  if (!same(detection_run(), detection_run())) o.fail("detection differs between runs");
  if (!same(decoding_trend_run(), decoding_trend_run())) o.fail("decoding trend differs between runs");
  if (!same(decoding_overload_run(), decoding_overload_run())) o.fail("overloaded decoding differs between runs");
  auto threaded = DetectionExperiment{GaussianModel::centered(4, cov::ScaledIdentity{1.0}), 0.3, std::nullopt, 100'000, 7, 4};
  if (!same(detection_run(), run_detection(threaded))) o.fail("detection differs with 4 threads");
  o.detail = "identical estimates on rerun and with 4 threads";
  return o;
}

struct Criterion {
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {"embedding-factor identity over 200 gamma values", embedding_identity},
      {"trivial endpoint a*(0) = 1, rate(0) = 0", trivial_endpoint},
      {"square-root-law dominance and 4n scaling", srl_dominance_and_scaling},
      {"rate-vs-n curves increasing, concave, ordered", rate_curves},
      {"codebook saturates KL = 2 eps^2", constraint_saturation},
      {"reverse KL recovers the same a*", reverse_kl_consistency},
      {"Gibbs pmf equals quantized Gaussian", gibbs_equivalence},
      {"detection error bound", detection_bound},
      {"random-coding achievability trend", achievability_trend},
      {"theoretical payload vs published points", payload_comparison},
      {"quantized KL does not exceed continuous KL", quantized_kl_direction},
      {"seeded experiments are bit-for-bit reproducible", determinism},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    char* end = nullptr;
    const long k = std::strtol(argv[i], &end, 10);
    if (*end != '\0' || k < 1 || k > static_cast<long>(all.size())) {
      std::cerr << "usage: acceptance [1-" << all.size() << "]...\n";
      return 2;
    }
    selected.push_back(static_cast<int>(k));
  }
  if (selected.empty())
    for (int k = 1; k <= static_cast<int>(all.size()); ++k) selected.push_back(k);

  int failures = 0;
  for (int k : selected) {
    const auto& c = all[static_cast<std::size_t>(k - 1)];
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << "criterion " << k << ": " << c.title;
    if (!o.detail.empty()) std::cout << " (" << o.detail << ")";
    std::cout << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
