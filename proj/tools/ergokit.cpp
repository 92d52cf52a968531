// ergokit command-line entry point: gap, constants, verify, identities.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "ergokit/error.hpp"
#include "ergokit/pipeline.hpp"

namespace {

enum Exit { kPass = 0, kVerificationFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ergodicity-rate verification for Langevin and fiber lay-down dynamics"};
  app.require_subcommand(1);

  std::string config;
  ergokit::Overrides ov;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t paths = 0;
  double dt = 0.0;
  int threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "TOML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--paths", paths, "ensemble path count")->check(CLI::PositiveNumber);
    sub->add_option("--dt", dt, "integrator step")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  };
  auto* gap = app.add_subcommand("gap", "spectral gap of the overdamped generator");
  auto* constants = app.add_subcommand("constants", "explicit rate constants");
  auto* verify = app.add_subcommand("verify", "ensemble check of the ergodicity bound");
  auto* identities = app.add_subcommand("identities", "operator identity residuals");
  for (auto* sub : {gap, constants, verify, identities}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    for (auto* sub : {gap, constants, verify, identities}) {
      if (sub->count("--seed")) ov.seed = seed;
      if (sub->count("--out")) ov.out = out;
      if (sub->count("--paths")) ov.paths = paths;
      if (sub->count("--dt")) ov.dt = dt;
      if (sub->count("--threads")) ov.threads = threads;
    }
    ergokit::RunConfig cfg = ergokit::load_config(config);
    ergokit::apply_overrides(cfg, ov);

    if (*gap) {
      const auto r = ergokit::cmd_gap(cfg);
      std::printf("gap %.10g (extrapolated %.10g) -> %s\n", r.spectral.gap, r.spectral.extrapolated,
                  (cfg.out / "gap.json").c_str());
      return kPass;
    }
    if (*constants) {
      const auto r = ergokit::cmd_constants(cfg);
      std::printf("kappa1 %.10g kappa2 %.10g (gap %s, kato %s) -> %s\n", r.used.kappa1, r.used.kappa2,
                  r.gap_source.c_str(), r.kato_source.c_str(), (cfg.out / "constants.json").c_str());
      return kPass;
    }
    if (*verify) {
      const auto r = ergokit::cmd_verify(cfg);
      std::printf("verdict %s: %zu paths, %zu invalid -> %s\n", r.pass ? "pass" : "fail", r.run.paths,
                  r.run.invalid_paths, (cfg.out / "verify.json").c_str());
      return r.pass ? kPass : kVerificationFailure;
    }
    const auto r = ergokit::cmd_identities(cfg);
    std::printf("identities %s: %zu checks -> %s\n", r.pass ? "pass" : "fail", r.residuals.size(),
                (cfg.out / "identities.json").c_str());
    return r.pass ? kPass : kVerificationFailure;
  } catch (const ergokit::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.kind()) {
      case ergokit::ErrorKind::Config: return kConfigError;
      case ergokit::ErrorKind::Verification: return kVerificationFailure;
      case ergokit::ErrorKind::Numerical: return kNumericalFailure;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
  }
  return kNumericalFailure;
}
