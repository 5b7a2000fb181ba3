// stegcap: steganographic capacity of Gaussian-modeled covers.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "stegcap/cli.hpp"

namespace {

using namespace stegcap;
using namespace stegcap::cli;

std::uint64_t default_seed() {
  const char* env = std::getenv("STEGCAP_SEED");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw CLI::ValidationError("STEGCAP_SEED", "must be a non-negative integer");
  }
}

void add_cover_options(CLI::App* sub, CoverOptions& c, bool with_n = true) {
  sub->add_option("--cover", c.cover_file, "Cover model JSON file");
  if (with_n) sub->add_option("--n", c.n, "Number of cover elements (inline cover)")->check(CLI::PositiveNumber);
  sub->add_option("--sigma2", c.sigma2, "Cover variance (inline cover)")->check(CLI::PositiveNumber);
  sub->add_option("--rho", c.rho, "AR(1) lag-one correlation (inline cover)");
  sub->add_option("--mean", c.mean, "Cover mean (inline cover)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum steganographic embedding rate for Gaussian-modeled covers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion) + " (" + kBuildId + ")");

  RunContext ctx;
  app.add_flag("--no-timestamp", ctx.no_timestamp, "Omit timestamps from run manifests");
  app.add_flag("--check", ctx.check, "Verify result properties; exit 1 if any fails");

  std::uint64_t seed = 0;
  bool seed_set = false;

  CapacityOptions cap;
  auto* c_cap = app.add_subcommand("capacity", "Maximum embedding rate for a budget or target P_E");
  auto* eps_opt = c_cap->add_option("--epsilon", cap.epsilon, "Detectability budget in [0, 1]");
  auto* pe_opt = c_cap->add_option("--pe", cap.pe, "Target average detector error in [0, 0.5] (lower-bound mode)");
  eps_opt->excludes(pe_opt);
  c_cap->add_option("--n", cap.n, "Number of cover elements")->required()->check(CLI::PositiveNumber);
  c_cap->add_option("--units", cap.units, "Rate units")->check(CLI::IsMember({"nats", "bits"}));
  c_cap->add_option("--output,-o", cap.output, "Write JSON here instead of stdout");

  RateVsNOptions rvn;
  auto* c_rvn = app.add_subcommand("rate-vs-n", "Rate lower-bound curves against n as CSV");
  c_rvn->add_option("--pe", rvn.pes, "P_E values")->delimiter(',');
  c_rvn->add_option("--n-min", rvn.n_min)->check(CLI::PositiveNumber);
  c_rvn->add_option("--n-max", rvn.n_max)->check(CLI::PositiveNumber);
  c_rvn->add_option("--points-per-decade", rvn.points_per_decade)->check(CLI::PositiveNumber);
  c_rvn->add_option("--output,-o", rvn.output, "CSV output path");

  PayloadVsPeOptions pvp;
  auto* c_pvp = app.add_subcommand("payload-vs-pe", "Theoretical payload against P_E with published points");
  c_pvp->add_option("--n", pvp.n, "Number of cover elements (default 2^18)")->check(CLI::PositiveNumber);
  c_pvp->add_option("--pe-min", pvp.pe_min);
  c_pvp->add_option("--pe-max", pvp.pe_max);
  c_pvp->add_option("--pe-step", pvp.pe_step);
  c_pvp->add_option("--published", pvp.published, "CSV: method,steganalyzer,payload_bpp,pe,source");
  c_pvp->add_option("--output,-o", pvp.output, "CSV output path");

  CodebookOptions cb;
  auto* c_cb = app.add_subcommand("codebook-params", "Optimal message and stego distributions");
  add_cover_options(c_cb, cb.cover);
  auto* cb_eps = c_cb->add_option("--epsilon", cb.epsilon);
  auto* cb_pe = c_cb->add_option("--pe", cb.pe);
  cb_eps->excludes(cb_pe);
  c_cb->add_option("--output,-o", cb.output);

  DetectSimOptions det;
  auto* c_det = app.add_subcommand("detect-sim", "Monte Carlo likelihood-ratio detection experiment");
  add_cover_options(c_det, det.cover);
  c_det->add_option("--epsilon", det.epsilon);
  c_det->add_option("--trials", det.trials)->check(CLI::PositiveNumber);
  c_det->add_option("--threads", det.threads)->check(CLI::PositiveNumber);
  c_det->add_option("--grid-step", det.grid_step, "Quantize samples to this grid step");
  c_det->add_option("--output,-o", det.output);

  DecodeSimOptions dec;
  auto* c_dec = app.add_subcommand("decode-sim", "Monte Carlo random-codebook decoding experiment");
  add_cover_options(c_dec, dec.cover, false);
  c_dec->add_option("--epsilon", dec.epsilon);
  c_dec->add_option("--rate-fraction", dec.rate_fraction);
  c_dec->add_option("--n,--n-list", dec.n_list, "Comma-separated cover sizes")->delimiter(',');
  c_dec->add_option("--codebook-size", dec.codebook_size);
  c_dec->add_option("--trials", dec.trials)->check(CLI::PositiveNumber);
  c_dec->add_option("--threads", dec.threads)->check(CLI::PositiveNumber);
  c_dec->add_option("--grid-step", dec.grid_step);
  c_dec->add_option("--output,-o", dec.output);

  GibbsCheckOptions gc;
  auto* c_gc = app.add_subcommand("gibbs-check", "Exhaustive Gibbs vs quantized-Gaussian comparison");
  c_gc->add_option("--spec", gc.spec_file, "MRF spec JSON")->required();
  c_gc->add_option("--tolerance", gc.tolerance);
  c_gc->add_option("--output,-o", gc.output);

  for (auto* sub : {c_det, c_dec}) {
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& v) {
          seed = v;
          seed_set = true;
        },
        "Master seed (default: $STEGCAP_SEED or 0)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (!seed_set) seed = default_seed();
    if (c_cap->parsed()) {
      if (!cap.epsilon && !cap.pe) throw CLI::RequiredError("--epsilon or --pe");
      return run_capacity(cap, ctx);
    }
    if (c_rvn->parsed()) return run_rate_vs_n(rvn, ctx);
    if (c_pvp->parsed()) return run_payload_vs_pe(pvp, ctx);
    if (c_cb->parsed()) {
      if (!cb.epsilon && !cb.pe) throw CLI::RequiredError("--epsilon or --pe");
      return run_codebook_params(cb, ctx);
    }
    if (c_det->parsed()) {
      det.seed = seed;
      return run_detect_sim(det, ctx);
    }
    if (c_dec->parsed()) {
      dec.seed = seed;
      return run_decode_sim(dec, ctx);
    }
    if (c_gc->parsed()) return run_gibbs_check(gc, ctx);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const SchemaError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const DimensionMismatch& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return exit_code::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::kCheckFailed;
  }
  return exit_code::kUsage;
}
