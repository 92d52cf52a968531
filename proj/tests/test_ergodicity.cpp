#include "doctest.h"

#include <cmath>

#include "ergokit/ergodicity.hpp"
#include "ergokit/error.hpp"
#include "ergokit/parallel.hpp"

using namespace ergokit;

namespace {

ModelParams langevin(int d, double alpha = 1.0, double beta = 1.0) {
  ModelParams p;
  p.d = d;
  p.alpha = alpha;
  p.beta = beta;
  return p;
}

ModelParams fiber(int d, double sigma = 1.0) {
  ModelParams p;
  p.model = ModelKind::Fiber;
  p.d = d;
  p.sigma = sigma;
  return p;
}

EnsembleConfig small_run(std::size_t paths, double dt, std::vector<double> checkpoints) {
  EnsembleConfig cfg;
  cfg.paths = paths;
  cfg.horizon = checkpoints.back();
  cfg.checkpoints = std::move(checkpoints);
  cfg.integrator.dt = dt;
  cfg.integrator.seed = 21;
  return cfg;
}

}  // namespace

TEST_CASE("exact initial sampler matches the Gaussian moments") {
  const auto phi = Potential::quadratic({0.5, 2.0});
  const GibbsMeasure mu(phi, langevin(2, 1.0, 2.0));
  SampleDiagnostics diag;
  const auto pts = sample_initial(mu, 100000, {}, 7, &diag);
  CHECK(diag.moments_checked);
  CHECK(diag.max_moment_z <= 5.0);
  double w2 = 0.0, x2 = 0.0;
  for (const auto& s : pts) {
    w2 += s.omega[1] * s.omega[1];
    x2 += s.x[1] * s.x[1];
  }
  CHECK(std::abs(w2 / pts.size() - 0.5) <= 5 * 0.5 * std::sqrt(2.0 / pts.size()));
  CHECK(std::abs(x2 / pts.size() - 0.25) <= 5 * 0.25 * std::sqrt(2.0 / pts.size()));
}

TEST_CASE("fiber velocities are unit vectors") {
  const auto phi = Potential::quadratic({0.5, 0.5, 0.5});
  const GibbsMeasure mu(phi, fiber(3), VelocityMarginal::UniformSphere);
  for (const auto& s : sample_initial(mu, 2000, {}, 3)) {
    const double n = std::sqrt(s.omega[0] * s.omega[0] + s.omega[1] * s.omega[1] + s.omega[2] * s.omega[2]);
    CHECK(std::abs(n - 1.0) <= 1e-14);
  }
}

TEST_CASE("metropolis sampler tunes its proposal on a pair potential") {
  PairPotentialParams pp;
  const auto phi = Potential::pair_interaction(pp);
  ModelParams p;
  p.N = 2;
  const GibbsMeasure mu(phi, p);
  SamplerSpec spec;
  spec.kind = SamplerKind::Metropolis;
  spec.proposal_scale = 50.0;  // far too large; the pilot must shrink it
  spec.burn_in = 500;
  spec.draws_per_chain = 20;
  SampleDiagnostics diag;
  const auto pts = sample_initial(mu, 2000, spec, 5, &diag);
  CHECK(diag.acceptance >= 0.1);
  CHECK(diag.acceptance <= 0.7);
  CHECK(diag.proposal_scale < 50.0);
  CHECK(diag.moments_checked);
  for (const auto& s : pts) CHECK(phi.value(s.x) < kInf);
  spec.kind = SamplerKind::ExactGaussian;
  CHECK_THROWS_WITH(sample_initial(mu, 10, spec, 5),
                    "exact position sampling needs a quadratic or flat periodic potential");
}

TEST_CASE("the constant observable has zero time-average error") {
  const auto phi = Potential::quadratic({0.5});
  const GibbsMeasure mu(phi, langevin(1));
  std::vector<BoundObservable> obs{BoundObservable(Observable::constant(1.0), phi, mu.params())};
  const auto run = run_ensemble(small_run(50, 0.01, {0.5, 1.0}), mu, obs);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::abs(run.series[0].rms_error[k]) <= 1e-12);
    CHECK(run.series[0].qv_simulated[k] <= 1e-24);
  }
}

TEST_CASE("harmonic Langevin: quadratic variation, microscopic and invariance checks") {
  const auto phi = Potential::quadratic({0.5});
  const GibbsMeasure mu(phi, langevin(1));
  std::vector<BoundObservable> obs{BoundObservable(Observable::velocity(0), phi, mu.params()),
                                   BoundObservable(Observable::position(0), phi, mu.params())};
  CHECK(obs[0].microscopic());
  CHECK(*obs[0].dissipation() == -1.0);
  CHECK(*obs[1].mean() == 0.0);
  CHECK(std::abs(*obs[1].fluctuation() - 1.0) <= 1e-12);
  const auto run = run_ensemble(small_run(2000, 0.01, {1.0, 2.0}), mu, obs);
  CHECK(run.invalid_paths == 0);
  const auto qv = qv_check(run, 0, obs[0]);
  CHECK(qv.all_pass);
  CHECK(std::abs(qv.target[1] - 4.0) <= 1e-12);
  CHECK(microscopic_check(run, 0, obs[0], mu.params()).all_pass);
  CHECK(invariance_check(run).all_pass);
  // rms error of the velocity average decreases with t.
  CHECK(run.series[0].rms_error[1] < run.series[0].rms_error[0]);
}

TEST_CASE("a mis-scaled initial velocity law is flagged at t = 0") {
  const auto phi = Potential::quadratic({0.5});
  const GibbsMeasure mu(phi, langevin(1));
  std::vector<BoundObservable> obs{BoundObservable(Observable::velocity(0), phi, mu.params())};
  auto cfg = small_run(2000, 0.05, {0.5});
  cfg.sampler.velocity_scale = 1.3;
  const auto rep = invariance_check(run_ensemble(cfg, mu, obs));
  CHECK_FALSE(rep.all_pass);
  REQUIRE_FALSE(rep.flagged_times.empty());
  CHECK(rep.flagged_times.front() == 0.0);
}

TEST_CASE("ensemble results do not depend on the thread count") {
  const auto phi = Potential::quadratic({0.5, 0.5});
  const GibbsMeasure mu(phi, fiber(2), VelocityMarginal::UniformSphere);
  auto cfg = small_run(300, 0.02, {0.4, 1.0});
  cfg.integrator.scheme = Scheme::TangentHeun;
  auto once = [&](int threads) {
    set_thread_count(threads);
    std::vector<BoundObservable> obs{BoundObservable(Observable::velocity(0), phi, mu.params())};
    return run_ensemble(cfg, mu, obs);
  };
  const auto a = once(1);
  const auto b = once(3);
  set_thread_count(0);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a.series[0].rms_error[k] == b.series[0].rms_error[k]);
    CHECK(a.series[0].qv_simulated[k] == b.series[0].qv_simulated[k]);
  }
}

TEST_CASE("long-path reference mean of a coordinate") {
  const auto phi = Potential::quadratic({0.5});
  const GibbsMeasure mu(phi, langevin(1));
  const BoundObservable x(Observable::position(0), phi, mu.params());
  IntegratorConfig icfg;
  icfg.dt = 0.05;
  const double m = long_path_mean(mu, x, icfg, 2000.0, 9);
  CHECK(std::abs(m) <= 0.15);
}

TEST_CASE("observable parsing and ensemble configuration errors") {
  CHECK(Observable::parse("omega2").kind == Observable::Kind::Velocity);
  CHECK(Observable::parse("omega2").index == 1);
  CHECK(Observable::parse("x1").kind == Observable::Kind::Position);
  CHECK(Observable::parse("1").kind == Observable::Kind::Constant);
  CHECK_THROWS_WITH(Observable::parse("y3"), "unknown observable: y3");
  const auto phi = Potential::quadratic({0.5});
  const GibbsMeasure mu(phi, langevin(1));
  CHECK_THROWS_WITH(BoundObservable(Observable::velocity(1), phi, mu.params()),
                    "observable omega2 exceeds the dimension 1");
  std::vector<BoundObservable> obs{BoundObservable(Observable::velocity(0), phi, mu.params())};
  CHECK_THROWS_WITH(run_ensemble(small_run(10, 0.03, {0.5}), mu, obs), "checkpoint is not a multiple of dt");
}
