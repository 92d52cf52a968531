#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ergokit/error.hpp"
#include "ergokit/pipeline.hpp"

using namespace ergokit;

namespace {

const char* kHarmonic = R"(
seed = 5
[model]
kind = "langevin"
alpha = 1.0
beta = 1.0
d = 1
[potential]
kind = "quadratic"
coefficients = [0.5]
[constants]
gap = "analytic"
kato = "analytic"
[ensemble]
paths = 200
horizon = 2.0
checkpoints = [1.0, 2.0]
dt = 0.01
observables = ["x1", "omega1"]
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: defaults, blocks and schema errors") {
  const RunConfig cfg = parse_config(kHarmonic);
  CHECK(cfg.seed == 5);
  CHECK(cfg.has_ensemble);
  CHECK(cfg.ensemble.paths == 200);
  CHECK(cfg.ensemble.integrator.scheme == Scheme::BAOAB);
  CHECK(cfg.ensemble.sampler.kind == SamplerKind::ExactGaussian);
  CHECK(cfg.observables.size() == 2);

  CHECK_THROWS_WITH(parse_config("[model]\nkind = \"langevin\"\n"), "schema error: missing [potential] block");
  CHECK_THROWS_WITH(parse_config("[potential]\nkind = \"quadratic\"\n"), "schema error: missing [model] block");
  CHECK_THROWS_WITH(parse_config("[model]\nkind = \"langevin\"\nfoo = 1\n[potential]\nkind = \"quadratic\"\n"),
                    "schema error: unknown key 'foo' in [model]");
  CHECK_THROWS_WITH(parse_config("[model]\nkind = \"langevin\"\nd = 2\n[potential]\nkind = \"quadratic\"\n"
                                 "coefficients = [0.5]\n"),
                    "schema error: [potential] coefficients needs 2 entries");
  CHECK_THROWS_WITH(parse_config("[model]\nkind = \"fiber\"\nd = 2\n[potential]\nkind = \"pair\"\n"),
                    "schema error: pair potentials need the langevin model");
  try {
    parse_config("[model\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }

  RunConfig o = cfg;
  Overrides ov;
  ov.paths = 64;
  ov.dt = 0.02;
  ov.seed = 9;
  apply_overrides(o, ov);
  CHECK(o.ensemble.paths == 64);
  CHECK(o.ensemble.integrator.dt == 0.02);
  CHECK(o.seed == 9);
}

TEST_CASE("constants command reproduces the closed-form examples") {
  RunConfig cfg = parse_config(kHarmonic);
  auto r = cmd_constants(cfg, false);
  CHECK(r.used.kappa1 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.used.kappa2 == doctest::Approx(2 * std::sqrt(2.0) + std::sqrt(6.0) + 3 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(r.kato_source == "analytic");

  cfg = parse_config(R"(
[model]
kind = "fiber"
sigma = 1.0
d = 2
[potential]
kind = "quadratic"
[constants]
gap = 1.0
kato = [0.0, 0.0]
)");
  r = cmd_constants(cfg, false);
  CHECK(r.used.kappa1 == doctest::Approx(2 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(r.used.kappa2 == doctest::Approx(2 * std::sqrt(2.0) + 2).epsilon(1e-12));
  CHECK(r.json["provenance"] == "estimated");
}

TEST_CASE("gap command on the periodic torus") {
  RunConfig cfg = parse_config(R"(
[model]
kind = "langevin"
[potential]
kind = "flat-periodic"
periods = [6.283185307179586]
)");
  const auto r = cmd_gap(cfg, false);
  CHECK(std::abs(r.spectral.gap - 1.0) <= 0.01);
  CHECK(r.refinement_csv.rfind("level,nodes,gap,residual,iterations\n", 0) == 0);
}

TEST_CASE("verify writes reproducible reports") {
  const auto dir = std::filesystem::temp_directory_path() / "ergokit_test_pipeline";
  std::filesystem::remove_all(dir);
  RunConfig cfg = parse_config(kHarmonic);
  cfg.out = dir;
  cfg.threads = 1;
  const auto a = cmd_verify(cfg);
  CHECK(a.pass);
  cfg.threads = 3;
  const auto b = cmd_verify(cfg, false);
  CHECK(a.csv_body == b.csv_body);
  const std::string csv = slurp(dir / "verify.csv");
  CHECK(csv.rfind("# ergokit verify ", 0) == 0);
  CHECK(csv.substr(csv.find('\n') + 1) == a.csv_body);
  CHECK(std::filesystem::exists(dir / "verify.json"));

  // kappa1 / t alone exceeds the error at short times; the control needs t >= 5.
  cfg.verify.kappa2_scale = 1e-2;
  cfg.ensemble.paths = 400;
  cfg.ensemble.horizon = 5.0;
  cfg.ensemble.checkpoints = {5.0};
  cfg.ensemble.integrator.dt = 0.02;
  CHECK_FALSE(cmd_verify(cfg, false).pass);

  RunConfig no_ens = parse_config("[model]\nkind = \"langevin\"\n[potential]\nkind = \"quadratic\"\n");
  CHECK_THROWS_WITH(cmd_verify(no_ens, false), "schema error: verify needs an [ensemble] block");
  std::filesystem::remove_all(dir);
}

TEST_CASE("identities command passes on the bundled family") {
  const auto r = cmd_identities(parse_config(kHarmonic), false);
  CHECK(r.pass);
  CHECK(r.residuals.size() > 20);
}
