// Acceptance run: one PASS/FAIL line per criterion. Usage: acceptance <configs dir> <output dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "ergokit/parallel.hpp"
#include "ergokit/pipeline.hpp"

using namespace ergokit;
namespace fs = std::filesystem;

namespace {

fs::path g_configs, g_out;

RunConfig config(const std::string& name) {
  RunConfig cfg = load_config(g_configs / (name + ".toml"));
  cfg.out = g_out / name;
  return cfg;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string body_after_header(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string s = ss.str();
  return s.substr(s.find('\n') + 1);
}

std::size_t index_of(const EnsembleRun& run, const std::string& name) {
  for (std::size_t j = 0; j < run.series.size(); ++j)
    if (run.series[j].name == name) return j;
  throw config_error("observable " + name + " missing from the run");
}

std::size_t time_index(const EnsembleRun& run, double t) {
  for (std::size_t k = 0; k < run.times.size(); ++k)
    if (std::abs(run.times[k] - t) < 1e-9) return k;
  throw config_error("checkpoint missing from the run");
}

/// E[M_t^2] / (scale t) against 1 within max(5%, 3 SE).
bool qv_ratio_ok(const EnsembleRun& run, double t, double scale, std::string& detail) {
  const std::size_t j = index_of(run, "omega1");
  const std::size_t k = time_index(run, t);
  const double ratio = run.series[j].qv_simulated[k] / (scale * t);
  const double se = run.series[j].qv_se[k] / (scale * t);
  char buf[96];
  std::snprintf(buf, sizeof buf, " t=%g:%.4f+-%.4f", t, ratio, se);
  detail += buf;
  return std::abs(ratio - 1.0) <= std::max(0.05, 3.0 * se);
}

struct Criterion {
  int id;
  const char* what;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance <configs dir> <output dir>\n");
    return 2;
  }
  g_configs = argv[1];
  g_out = argv[2];
  fs::create_directories(g_out);

  // The two bundled verification scenarios feed criteria 5 to 8; run each once.
  std::optional<VerifyReport> langevin, fiber;
  auto langevin_run = [&]() -> const VerifyReport& {
    if (!langevin) langevin = cmd_verify(config("langevin_harmonic"));
    return *langevin;
  };
  auto fiber_run = [&]() -> const VerifyReport& {
    if (!fiber) fiber = cmd_verify(config("fiber_d2"));
    return *fiber;
  };

  const std::vector<Criterion> criteria = {
      {1, "constant formulas",
       [](std::string& d) {
         const auto l = langevin_rates(1, 1, 1, {1, 2, 0, 0});
         const auto f = fiber_rates(1, 2, 1, {0, 0});
         const double k2 = 2 * std::sqrt(2.0) + std::sqrt(6.0) + 3 * std::sqrt(2.0);
         char buf[160];
         std::snprintf(buf, sizeof buf, "langevin k1=%.15g k2=%.15g; fiber k1=%.15g k2=%.15g",
                       l.specialized.kappa1, l.specialized.kappa2, f.specialized.kappa1, f.specialized.kappa2);
         d = buf;
         return std::abs(l.specialized.kappa1 - 2) <= 1e-12 && std::abs(l.specialized.kappa2 - k2) <= 1e-12 &&
                std::abs(f.specialized.kappa1 - 2 * std::sqrt(2.0)) <= 1e-12 &&
                std::abs(f.specialized.kappa2 - (2 * std::sqrt(2.0) + 2)) <= 1e-12;
       }},
      {2, "specialized = sqrt(2) x generic over 1000 random tuples per model",
       [](std::string& d) {
         std::mt19937_64 rng(2024);
         std::uniform_real_distribution<double> pos(0.05, 20.0), k(0.0, 10.0);
         std::uniform_int_distribution<int> dim(2, 12);
         double worst = 0.0;
         for (int i = 0; i < 1000; ++i) {
           for (const auto& r : {langevin_rates(pos(rng), pos(rng), pos(rng), {k(rng), k(rng), k(rng), k(rng)}),
                                 fiber_rates(pos(rng), dim(rng), pos(rng), {k(rng), k(rng)})}) {
             worst = std::max({worst, rel(r.specialized.kappa1, std::sqrt(2.0) * r.generic.kappa1),
                               rel(r.specialized.kappa2, std::sqrt(2.0) * r.generic.kappa2)});
           }
         }
         char buf[64];
         std::snprintf(buf, sizeof buf, "max relative difference %.2e", worst);
         d = buf;
         return worst <= 1e-12;
       }},
      {3, "spectral gap of the overdamped generator",
       [](std::string& d) {
         const auto ou = cmd_gap(config("ou1d"));
         const auto q2 = cmd_gap(config("quad2d"));
         char buf[128];
         std::snprintf(buf, sizeof buf, "x^2/2: %.8f (oracle 1); anisotropic 2-d: %.8f (oracle 1)", ou.spectral.gap,
                       q2.spectral.gap);
         d = buf;
         return rel(ou.spectral.gap, 1.0) <= 0.01 && rel(q2.spectral.gap, 1.0) <= 0.02;
       }},
      {4, "operator identities over the bundled family",
       [](std::string& d) {
         RunConfig fiber3 = config("fiber_d2");
         fiber3.model.d = 3;
         fiber3.potential.coefficients = {0.5, 0.5, 0.5};
         fiber3.out = g_out / "fiber_d3";
         std::size_t checks = 0;
         double worst = 0.0, worst_sphere = 0.0;
         bool ok = true;
         bool sphere2 = false, sphere3 = false;
         for (const RunConfig& c : {config("langevin_harmonic"), config("quad2d"), config("fiber_d2"), fiber3}) {
           const auto r = cmd_identities(c);
           ok = ok && r.pass;
           for (const auto& x : r.residuals) {
             ++checks;
             const double v = x.scale > 0 ? x.residual / x.scale : x.residual;
             if (x.identity == IdentityTag::SphereLaplacian) {
               worst_sphere = std::max(worst_sphere, v);
               (c.model.d == 2 ? sphere2 : sphere3) = true;
             } else {
               worst = std::max(worst, v);
             }
           }
         }
         char buf[160];
         std::snprintf(buf, sizeof buf, "%zu checks, worst relative residual %.2e, sphere Laplacian %.2e", checks,
                       worst, worst_sphere);
         d = buf;
         return ok && sphere2 && sphere3 && worst <= 1e-6 && worst_sphere <= 1e-8;
       }},
      {5, "quadratic-variation law",
       [&](std::string& d) {
         bool ok = true;
         d = "langevin E[M^2]/(2t):";
         for (double t : {1.0, 5.0}) ok = qv_ratio_ok(langevin_run().run, t, 2.0, d) && ok;
         d += "; fiber E[M^2]/(t/2):";
         for (double t : {1.0, 5.0}) ok = qv_ratio_ok(fiber_run().run, t, 0.5, d) && ok;
         return ok;
       }},
      {6, "microscopic-average bound 2/t for f = omega",
       [&](std::string& d) {
         const auto& run = langevin_run().run;
         const std::size_t j = index_of(run, "omega1");
         bool ok = true;
         double margin = kInf;
         for (std::size_t k = 0; k < run.times.size(); ++k) {
           const double lhs = run.series[j].mean_square[k];
           const double bound = 2.0 / run.times[k] + 3.0 * run.series[j].mean_square_se[k];
           ok = ok && lhs <= bound;
           margin = std::min(margin, bound / lhs);
         }
         d = std::to_string(run.times.size()) + " checkpoints, smallest bound/value ratio " + std::to_string(margin);
         return ok;
       }},
      {7, "main ergodicity bound, with a failing negative control",
       [&](std::string& d) {
         const auto& l = langevin_run();
         const auto& f = fiber_run();
         const bool lb = l.bounds[index_of(l.run, "x1")].all_pass;
         const bool fb = f.bounds[index_of(f.run, "x1")].all_pass;
         // Same ensemble, kappa2 divided by 100.
         const auto& c = l.json["observables"][index_of(l.run, "x1")];
         const bool control_same =
             bound_check(l.run, index_of(l.run, "x1"), c["C1"].get<double>(), c["C2"].get<double>() / 100.0).all_pass;
         const bool control_cfg = cmd_verify(config("negative_control")).pass;
         d = std::string("langevin ") + (lb ? "pass" : "fail") + ", fiber " + (fb ? "pass" : "fail") +
             ", negative control " + (control_same || control_cfg ? "pass (wrong)" : "fail (expected)");
         return lb && fb && !control_same && !control_cfg;
       }},
      {8, "invariance of mu, perturbed initial law flagged",
       [&](std::string& d) {
         const bool l = langevin_run().json["invariance"]["pass"].get<bool>();
         const bool f = fiber_run().json["invariance"]["pass"].get<bool>();
         RunConfig bad = config("langevin_harmonic");
         bad.ensemble.paths = 2000;
         bad.ensemble.horizon = 1.0;
         bad.ensemble.checkpoints = {1.0};
         bad.ensemble.sampler.velocity_scale = 1.3;
         const auto rep = cmd_verify(bad, false);
         const auto& flagged = rep.json["invariance"]["flagged_times"];
         const bool caught = !flagged.empty() && flagged[0].get<double>() == 0.0;
         d = std::string("langevin ") + (l ? "pass" : "fail") + ", fiber " + (f ? "pass" : "fail") +
             ", mis-scaled velocities " + (caught ? "flagged at t=0" : "not flagged");
         return l && f && caught;
       }},
      {9, "byte-identical CSV bodies at 1 and 4 threads",
       [](std::string& d) {
         bool ok = true;
         for (const char* name : {"langevin_harmonic", "fiber_d2"}) {
           RunConfig cfg = config(name);
           cfg.ensemble.paths = 400;
           cfg.ensemble.horizon = 5.0;
           cfg.ensemble.checkpoints = {1.0, 2.0, 5.0};
           std::string bodies[2];
           for (int i = 0; i < 2; ++i) {
             cfg.threads = i == 0 ? 1 : 4;
             cfg.out = g_out / (std::string("repro_") + name + "_t" + std::to_string(cfg.threads));
             cmd_verify(cfg);
             bodies[i] = body_after_header(cfg.out / "verify.csv");
           }
           const bool same = !bodies[0].empty() && bodies[0] == bodies[1];
           ok = ok && same;
           d += std::string(d.empty() ? "" : ", ") + name + (same ? " identical" : " differ");
         }
         set_thread_count(0);
         return ok;
       }},
      {10, "singular pair potential: robustness and sufficient-criteria FAIL",
       [](std::string& d) {
         const auto r = cmd_verify(config("lj_pair"));
         const double frac = r.json["invalid_fraction"].get<double>();
         const bool inv = r.json["invariance"]["pass"].get<bool>();
         const bool growth = r.json["sufficient_criteria"]["growth_pass"].get<bool>();
         char buf[200];
         std::snprintf(buf, sizeof buf, "invalid fraction %.2e, invariance %s, Hessian growth check %s (c_hat %.3g)",
                       frac, inv ? "pass" : "fail", growth ? "PASS (wrong)" : "FAIL (expected)",
                       r.json["sufficient_criteria"]["c_hat"].get<double>());
         d = buf;
         return frac <= 1e-3 && inv && !growth;
       }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::string detail;
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d: %s  %s (%s) [%.1f s]\n", c.id, ok ? "PASS" : "FAIL", c.what, detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
