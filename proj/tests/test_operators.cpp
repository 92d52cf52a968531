#include "doctest.h"

#include <cmath>

#include "ergokit/operators.hpp"

using namespace ergokit;

namespace {

ModelParams langevin(double alpha = 1, double beta = 1, int d = 1, int N = 1) {
  ModelParams p;
  p.model = ModelKind::Langevin;
  p.alpha = alpha;
  p.beta = beta;
  p.d = d;
  p.N = N;
  return p;
}

ModelParams fiber(int d, double sigma = 1) {
  ModelParams p;
  p.model = ModelKind::Fiber;
  p.d = d;
  p.sigma = sigma;
  return p;
}

Potential unit_quadratic(int n) { return Potential::quadratic(std::vector<double>(n, 0.5)); }

std::shared_ptr<const XFunction> bump1(double c, double r, std::vector<double> poly = {1.0}) {
  Univariate u;
  u.poly = std::move(poly);
  u.center = c;
  u.radius = r;
  return XFunction::product({u});
}

void require_all_pass(const std::vector<ResidualReport>& reports) {
  for (const auto& r : reports) {
    INFO(to_string(r.identity), " ", r.function_id, " residual=", r.residual, " scale=", r.scale);
    CHECK(r.pass);
  }
}

}  // namespace

TEST_CASE("univariate jets agree with finite differences") {
  Univariate u;
  u.poly = {0.3, -1.0, 0.5};
  u.center = 0.4;
  u.radius = 1.7;
  const double x = 0.9, h = 1e-3;
  for (int k = 1; k <= 4; ++k) {
    const double fd = (u.derivative(k - 1, x + h) - u.derivative(k - 1, x - h)) / (2 * h);
    CHECK(u.derivative(k, x) == doctest::Approx(fd).epsilon(1e-5));
  }
  CHECK(u.derivative(0, 0.4 + 1.7) == 0.0);
  CHECK_THROWS(u.derivative(5, x));
}

TEST_CASE("inner products on the examples") {
  const QuadratureScheme q(unit_quadratic(1), langevin());
  const auto one = PhaseFunction::constant(1, 1);
  CHECK(q.inner_product(one, one) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(q.x_mass() <= 1.0 + 1e-12);
  CHECK(q.x_mass() >= 1.0 - 1e-8);
  const auto w = PhaseFunction::velocity_coordinate(1, 1, 0);
  CHECK(q.inner_product(w, w) == doctest::Approx(1.0).epsilon(1e-9));

  const QuadratureScheme qs(unit_quadratic(2), fiber(2));
  const auto w1 = PhaseFunction::velocity_coordinate(2, 2, 0);
  const auto w2 = PhaseFunction::velocity_coordinate(2, 2, 1);
  CHECK(std::abs(qs.inner_product(w1, w2)) < 1e-14);
  CHECK(qs.inner_product(w1, w1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("velocity rule integrates monomials") {
  const QuadratureScheme q(unit_quadratic(2), langevin(1, 2, 2));
  const double m = q.velocity_average([](std::span<const double> w) { return w[0] * w[0] * w[1] * w[1]; });
  CHECK(m == doctest::Approx(0.25));
}

TEST_CASE("operator actions on the examples") {
  SUBCASE("fiber Laplace-Beltrami of coordinates") {
    for (int d : {2, 3}) {
      for (int k = 0; k < d; ++k) {
        const auto r = check_sphere_laplacian(d, k);
        INFO("d=", d, " k=", k, " residual=", r.residual);
        CHECK(r.pass);
        CHECK(r.residual <= 1e-8);
      }
    }
  }
  SUBCASE("Langevin S on omega_1") {
    const auto p = langevin(2.0, 1.5);
    const auto w = PhaseFunction::velocity_coordinate(1, 1, 0);
    const auto r = apply_S(w, p) + p.alpha * w;
    CHECK(r.is_zero());
  }
  SUBCASE("L annihilates constants") {
    for (const auto& p : {langevin(1.3, 0.7), fiber(3, 0.8)}) {
      const int n = p.position_dim();
      CHECK(apply_L(PhaseFunction::constant(n, n), p).is_zero());
    }
  }
}

TEST_CASE("velocity projection") {
  const auto p = langevin(1, 2);
  const auto h = bump1(0.0, 2.0, {0.0, 1.0});
  const auto g = PhaseFunction::product(1, {{1.0, {0}}}, h);
  const auto pg = project_P(g, p);
  CHECK((pg - g).is_zero());
  const auto w2 = PhaseFunction::product(1, {{1.0, {2}}}, nullptr);
  const auto pw2 = project_P(w2, p);
  REQUIRE(pw2.terms().size() == 1);
  CHECK(pw2.terms()[0].coef == doctest::Approx(0.5));
  CHECK(pw2.velocity_independent());
  CHECK(project_P(PhaseFunction::velocity_coordinate(2, 2, 0), fiber(2)).is_zero());
  const auto f = PhaseFunction::product(1, {{1.0, {2}}, {0.7, {1}}, {-0.2, {0}}}, h);
  CHECK((project_P(project_P(f, p), p) - project_P(f, p)).is_zero());
}

TEST_CASE("E4 residuals on the examples") {
  SUBCASE("Langevin alpha = 2") {
    const auto phi = unit_quadratic(1);
    const auto p = langevin(2.0, 1.0);
    const QuadratureScheme q(phi, p);
    for (const auto& f : macroscopic_family(phi, p)) {
      const auto r = check_identity(IdentityTag::E4, f, q);
      CHECK(r.residual <= 1e-8 * r.scale);
    }
  }
  SUBCASE("fiber d = 3, sigma = 1") {
    const auto phi = unit_quadratic(3);
    const auto p = fiber(3, 1.0);
    const QuadratureScheme q(phi, p);
    for (const auto& f : macroscopic_family(phi, p)) {
      const auto r = check_identity(IdentityTag::E4, f, q);
      CHECK(r.residual <= 1e-8 * r.scale);
    }
  }
}

TEST_CASE("constant function gives zero residuals") {
  const auto phi = unit_quadratic(2);
  const auto p = fiber(2);
  const QuadratureScheme q(phi, p);
  const auto one = PhaseFunction::constant(2, 2);
  for (auto tag : {IdentityTag::Antisymmetry, IdentityTag::SSymmetry, IdentityTag::SNonpositive,
                   IdentityTag::Invariance, IdentityTag::E1Margin, IdentityTag::E4,
                   IdentityTag::PLAP, IdentityTag::SphereGaussian}) {
    const auto r = check_identity(tag, one, q);
    CHECK(r.residual == 0.0);
    CHECK(r.pass);
  }
}

TEST_CASE("identity suite passes for bundled models") {
  SUBCASE("Langevin 1-d") { require_all_pass(run_identity_suite(unit_quadratic(1), langevin(1.5, 0.8))); }
  SUBCASE("Langevin 2-d anisotropic") {
    require_all_pass(run_identity_suite(Potential::quadratic({0.5, 2.0}), langevin(1.0, 2.0, 2)));
  }
  SUBCASE("Langevin periodic") {
    require_all_pass(run_identity_suite(Potential::flat_periodic({6.283185307179586}), langevin()));
  }
  SUBCASE("fiber d = 2") { require_all_pass(run_identity_suite(unit_quadratic(2), fiber(2))); }
  SUBCASE("fiber d = 3") { require_all_pass(run_identity_suite(unit_quadratic(3), fiber(3, 0.7))); }
  SUBCASE("Langevin pair potential") {
    PairPotentialParams q;
    ModelParams p = langevin(1, 1, 1, 2);
    require_all_pass(run_identity_suite(Potential::pair_interaction(q), p));
  }
}

TEST_CASE("family sizes") {
  for (int n : {1, 2, 3}) {
    const auto fam = test_family(unit_quadratic(n), langevin(1, 1, n));
    CHECK(fam.size() >= 20);
    CHECK(fam.size() <= 50);
  }
  for (int d : {2, 3, 4}) {
    const auto fam = test_family(unit_quadratic(d), fiber(d));
    CHECK(fam.size() >= 20);
    CHECK(fam.size() <= 50);
  }
}

TEST_CASE("error paths") {
  const auto p = langevin();
  auto numeric = XFunction::numerical(
      1, [](std::span<const double> x) { return std::exp(-x[0] * x[0]); }, {-1}, {1});
  auto f = PhaseFunction::product(1, {{1.0, {0}}}, numeric);
  const auto g = derivative_x(derivative_x(f, 0), 0);
  CHECK_THROWS_WITH(derivative_x(g, 0), "missing derivative oracle order");
  CHECK_THROWS_WITH(identity_from_string("e5"), "identity tag unknown: e5");
  const QuadratureScheme q(unit_quadratic(1), p);
  const auto far = PhaseFunction::product(1, {{1.0, {0}}}, bump1(6.0, 2.0));
  CHECK_THROWS_WITH(q.norm(far), "support exceeds quadrature box");
  const auto w = PhaseFunction::velocity_coordinate(1, 1, 0);
  CHECK_THROWS_WITH(check_identity(IdentityTag::PLAP, w, q),
                    "domain mismatch: PLAP identity needs f = Pf");
}

TEST_CASE("numerical oracle on a tensor rule") {
  PairPotentialParams pp;
  const auto phi = Potential::pair_interaction(pp);
  QuadratureOptions opt;
  opt.box_lo = {-1.0, 0.2};
  opt.box_hi = {-0.2, 1.0};
  const QuadratureScheme q(phi, langevin(1, 1, 1, 2), opt);
  auto h = XFunction::numerical(
      2,
      [](std::span<const double> x) {
        const double a = 1 - std::pow((x[0] + 0.6) / 0.4, 2), b = 1 - std::pow((x[1] - 0.6) / 0.4, 2);
        return a > 0 && b > 0 ? std::exp(2 - 1 / a - 1 / b) : 0.0;
      },
      {-1.0, 0.2}, {-0.2, 1.0});
  std::vector<Univariate> u(2);
  u[0].center = -0.6;
  u[1].center = 0.6;
  u[0].radius = u[1].radius = 0.4;
  const auto exact = XFunction::product(u);
  const auto fn = PhaseFunction::product(2, {{1.0, {0, 0}}}, h);
  const auto fe = PhaseFunction::product(2, {{1.0, {0, 0}}}, exact);
  const double gn = q.norm(apply_G_phi(fn)), ge = q.norm(apply_G_phi(fe));
  CHECK(gn == doctest::Approx(ge).epsilon(1e-5));
}
