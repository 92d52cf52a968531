#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <sstream>

#include "ergokit/integrators.hpp"

using namespace ergokit;

namespace {

ModelParams langevin1d(double alpha = 1.0, double beta = 1.0) {
  ModelParams p;
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

struct Stats {
  double n = 0, s = 0, s2 = 0;
  void add(double v) {
    n += 1;
    s += v;
    s2 += v * v;
  }
  double mean() const { return s / n; }
  double var() const { return s2 / n - mean() * mean(); }
  double se() const { return std::sqrt(var() / n); }
};

/// Exact covariance of (x, omega) after `steps` steps of a linear scheme, extracted from the
/// integrator's own update map.
double linear_second_moment(const Integrator& integ, int steps) {
  Eigen::Matrix2d M, N;
  std::vector<double> zero{0.0};
  for (int c = 0; c < 2; ++c) {
    PhasePoint s{{c == 0 ? 1.0 : 0.0}, {c == 1 ? 1.0 : 0.0}};
    integ.attempt(s, integ.config().dt, zero);
    M(0, c) = s.x[0];
    M(1, c) = s.omega[0];
  }
  PhasePoint s{{0.0}, {0.0}};
  integ.attempt(s, integ.config().dt, {1.0});
  N << s.x[0], 0, s.omega[0], 0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
  for (int k = 0; k < steps; ++k) cov = M * cov * M.transpose() + N * N.transpose();
  return cov(0, 0);
}

}  // namespace

TEST_CASE("free BAOAB velocity update is the exact Ornstein-Uhlenbeck transition") {
  const auto phi = Potential::flat_periodic({1.0});
  IntegratorConfig cfg;
  cfg.dt = 0.05;
  cfg.seed = 3;
  const Integrator integ(phi, langevin1d(0.7, 2.0), cfg);
  PhasePoint s{{0.5}, {0.0}};
  const double c = std::exp(-0.7 * cfg.dt);
  Stats r;
  for (int k = 0; k < 100000; ++k) {
    const double v0 = s.omega[0];
    s.x[0] = 0.5;  // stay in the box; the force is zero anyway
    REQUIRE(integ.step(s, 0, k).valid);
    r.add(s.omega[0] - c * v0);
  }
  const double target = (1.0 / 2.0) * (1.0 - std::exp(-2 * 0.7 * cfg.dt));
  const double se = target * std::sqrt(2.0 / r.n);
  CHECK(std::abs(r.var() - target) <= 3 * se);
  CHECK(std::abs(r.mean()) <= 3 * r.se());
}

TEST_CASE("Euler-Maruyama with zero noise is the deterministic Euler step") {
  const auto phi = Potential::quadratic({0.5});
  IntegratorConfig cfg;
  cfg.scheme = Scheme::EulerMaruyama;
  cfg.dt = 1e-3;
  const Integrator integ(phi, langevin1d(0.3, 2.0), cfg);
  PhasePoint s{{0.8}, {-0.4}};
  REQUIRE(integ.attempt(s, cfg.dt, {0.0}));
  CHECK(s.x[0] == 0.8 + (-0.4) * 1e-3);
  CHECK(s.omega[0] == -0.4 + (-0.3 * -0.4 - 0.5 * 0.8) * 1e-3);
}

TEST_CASE("harmonic Langevin keeps the Gaussian marginal") {
  const auto phi = Potential::quadratic({0.5});
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  cfg.seed = 11;
  const Integrator integ(phi, langevin1d(), cfg);
  const NoiseStream init(99);
  Stats x, w, x2, w2;
  const int paths = 400, steps = 5000;
  for (int p = 0; p < paths; ++p) {
    PhasePoint s{{init.normal(p, 0, noise_tag::kInitialPosition, 0)},
                 {init.normal(p, 0, noise_tag::kInitialVelocity, 0)}};
    for (int k = 0; k < steps; ++k) REQUIRE(integ.step(s, p, k).valid);
    x.add(s.x[0]);
    w.add(s.omega[0]);
    x2.add(s.x[0] * s.x[0]);
    w2.add(s.omega[0] * s.omega[0]);
  }
  CHECK(std::abs(x.mean()) <= 3 * x.se());
  CHECK(std::abs(w.mean()) <= 3 * w.se());
  CHECK(std::abs(x2.mean() - 1.0) <= 3 * x2.se());
  CHECK(std::abs(w2.mean() - 1.0) <= 3 * w2.se());
}

TEST_CASE("weak-order sanity: halving dt at least halves the bias of E[x_T^2]") {
  const auto phi = Potential::quadratic({0.5});
  for (Scheme sc : {Scheme::BAOAB, Scheme::EulerMaruyama}) {
    CAPTURE(to_string(sc));
    std::vector<double> bias;
    for (double dt : {0.2, 0.1, 0.05}) {
      IntegratorConfig cfg;
      cfg.scheme = sc;
      cfg.dt = dt;
      const Integrator integ(phi, langevin1d(), cfg);
      bias.push_back(std::abs(linear_second_moment(integ, static_cast<int>(std::lround(2.0 / dt))) - 1.0));
    }
    CHECK(bias[0] > 0.0);
    CHECK(bias[1] <= 0.5 * bias[0]);
    CHECK(bias[2] <= 0.5 * bias[1]);
  }
}

TEST_CASE("spherical Brownian motion on the circle decorrelates at rate sigma^2 / 2") {
  const auto phi = Potential::flat_periodic({10.0, 10.0});
  IntegratorConfig cfg;
  cfg.scheme = Scheme::TangentHeun;
  cfg.dt = 1e-3;
  cfg.seed = 5;
  const double sigma = 1.3;
  const Integrator integ(phi, fiber(2, sigma), cfg);
  Stats corr;
  double worst = 0.0;
  for (int p = 0; p < 4000; ++p) {
    const double th = 0.001 * p;
    PhasePoint s{{5.0, 5.0}, {std::cos(th), std::sin(th)}};
    const auto w0 = s.omega;
    for (int k = 0; k < 500; ++k) {
      REQUIRE(integ.step(s, p, k).valid);
      worst = std::max(worst, std::abs(std::hypot(s.omega[0], s.omega[1]) - 1.0));
      s.x = {5.0, 5.0};
    }
    corr.add(s.omega[0] * w0[0] + s.omega[1] * w0[1]);
  }
  CHECK(std::abs(corr.mean() - std::exp(-0.5 * sigma * sigma * 0.5)) <= 3 * corr.se());
  CHECK(worst <= 1e-15);
}

TEST_CASE("free fiber dynamics in d = 3 keeps the uniform law on the sphere") {
  const auto phi = Potential::flat_periodic({10.0, 10.0, 10.0});
  for (Scheme sc : {Scheme::TangentHeun, Scheme::ItoProjected}) {
    CAPTURE(to_string(sc));
    IntegratorConfig cfg;
    cfg.scheme = sc;
    cfg.dt = 1e-2;
    cfg.seed = 8;
    const Integrator integ(phi, fiber(3), cfg);
    const NoiseStream init(4);
    std::array<Stats, 3> m1, m2;
    for (int p = 0; p < 3000; ++p) {
      std::vector<double> w(3);
      init.normals(p, 0, noise_tag::kInitialVelocity, w);
      const double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
      for (double& v : w) v /= n;
      PhasePoint s{{5.0, 5.0, 5.0}, w};
      for (int k = 0; k < 100; ++k) {
        REQUIRE(integ.step(s, p, k).valid);
        s.x = {5.0, 5.0, 5.0};
      }
      for (int i = 0; i < 3; ++i) {
        m1[i].add(s.omega[i]);
        m2[i].add(s.omega[i] * s.omega[i]);
      }
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(m1[i].mean()) <= 3 * m1[i].se());
      CHECK(std::abs(m2[i].mean() - 1.0 / 3.0) <= 3 * m2[i].se());
    }
  }
}

TEST_CASE("trajectories depend only on the noise keys") {
  const auto phi = Potential::quadratic({0.5});
  IntegratorConfig cfg;
  cfg.seed = 77;
  const Integrator integ(phi, langevin1d(), cfg);
  auto run = [&](std::uint32_t path) {
    PhasePoint s{{0.3}, {0.1}};
    for (int k = 0; k < 200; ++k) integ.step(s, path, k);
    return s;
  };
  const auto a = run(5);
  run(6);
  const auto b = run(5);
  CHECK(a.x[0] == b.x[0]);
  CHECK(a.omega[0] == b.omega[0]);
  CHECK(run(6).x[0] != a.x[0]);
}

TEST_CASE("singular potential: substepping near the core, invalid beyond the cap") {
  PairPotentialParams pp;
  const auto phi = Potential::pair_interaction(pp);
  ModelParams p;
  p.N = 2;
  IntegratorConfig cfg;
  cfg.dt = 0.05;
  cfg.force_cap = 200.0;
  cfg.seed = 2;
  const Integrator integ(phi, p, cfg);
  // Particles approaching each other fast: the plain step would cross the core.
  PhasePoint s{{-0.6, 0.6}, {3.0, -3.0}};
  bool refined = false;
  for (int k = 0; k < 40; ++k) {
    const auto out = integ.step(s, 0, k);
    REQUIRE(out.valid);
    refined = refined || out.refinement > 0;
    CHECK(s.x[0] < s.x[1]);
  }
  CHECK(refined);

  IntegratorConfig strict = cfg;
  strict.max_refinements = 0;
  strict.force_cap = 1e-3;
  const Integrator capped(phi, p, strict);
  PhasePoint t{{-0.6, 0.6}, {0.0, 0.0}};
  CHECK_FALSE(capped.step(t, 0, 0).valid);
  CHECK(t.x[0] == -0.6);
}

TEST_CASE("configuration errors and trajectory records") {
  const auto phi = Potential::quadratic({0.5});
  IntegratorConfig cfg;
  cfg.dt = 0.0;
  CHECK_THROWS_WITH(Integrator(phi, langevin1d(), cfg), "dt must be positive");
  cfg.dt = 0.1;
  cfg.scheme = Scheme::TangentHeun;
  CHECK_THROWS_WITH(Integrator(phi, langevin1d(), cfg),
                    "scheme tangent-heun does not apply to the langevin model");
  CHECK_THROWS_WITH(scheme_from_string("rk4"), "unknown integrator scheme: rk4");

  std::ostringstream os;
  write_trajectory_record(os, 3, 0.5, PhasePoint{{1.0}, {2.0}});
  const std::string bytes = os.str();
  REQUIRE(bytes.size() == 32);
  double v[4];
  std::memcpy(v, bytes.data(), 32);
  CHECK(v[0] == 3.0);
  CHECK(v[1] == 0.5);
  CHECK(v[3] == 2.0);
}
