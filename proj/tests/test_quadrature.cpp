#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>

#include "ergokit/core.hpp"
#include "ergokit/quadrature.hpp"
#include "ergokit/rng.hpp"

using namespace ergokit;

TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
  const auto r = quad::gauss_legendre(6);
  for (int k = 0; k <= 11; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
    CHECK(s == doctest::Approx(exact).epsilon(1e-13));
  }
}

TEST_CASE("Gauss-Hermite reproduces normal moments") {
  const auto r = quad::gauss_hermite(5);
  const double exact[] = {1, 0, 1, 0, 3, 0, 15, 0, 105, 0};
  for (int k = 0; k < 10; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    CHECK(s == doctest::Approx(exact[k]).epsilon(1e-12));
  }
}

TEST_CASE("gaussian rule is scaled by beta") {
  const auto r = quad::gaussian_rule(2, 2.0, 4);
  double s = 0;
  for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.node(q)[1], 2);
  CHECK(s == doctest::Approx(0.5));
}

TEST_CASE("sphere rules are exact on monomials up to their degree") {
  for (int d : {2, 3, 4}) {
    ModelParams p;
    p.model = ModelKind::Fiber;
    p.d = d;
    const auto rule = quad::sphere_rule(d, 9);
    std::vector<int> e(d, 0);
    // all exponent vectors of total degree <= 9
    std::function<void(int, int)> rec = [&](int k, int left) {
      if (k == d) {
        double s = 0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
          double v = rule.weights[q];
          for (int i = 0; i < d; ++i) v *= std::pow(rule.node(q)[i], e[i]);
          s += v;
        }
        CHECK(s == doctest::Approx(velocity_moment(p, e)).epsilon(1e-12).scale(1.0));
        return;
      }
      for (int v = 0; v <= left; ++v) {
        e[k] = v;
        rec(k + 1, left - v);
      }
      e[k] = 0;
    };
    rec(0, 9);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double r2 = 0;
      for (double c : rule.node(q)) r2 += c * c;
      CHECK(std::abs(r2 - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("Monte-Carlo sphere rule reports its standard error") {
  const auto rule = quad::sphere_monte_carlo(6, 4000, 11);
  CHECK(rule.size() == 4000);
  CHECK(rule.standard_error == doctest::Approx(1.0 / std::sqrt(4000.0)));
  double s = 0;
  for (std::size_t q = 0; q < rule.size(); ++q) s += rule.weights[q] * std::pow(rule.node(q)[0], 2);
  CHECK(std::abs(s - 1.0 / 6.0) < 5 * std::sqrt(2.0 / (6.0 * 8.0)) * rule.standard_error);
}

TEST_CASE("box integration of a gaussian") {
  const std::vector<double> lo{-8, -8}, hi{8, 8};
  const auto r = quad::integrate_box(
      [](std::span<const double> x) {
        return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1])) / (2 * std::numbers::pi);
      },
      lo, hi);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Philox4x32-10 known-answer vectors") {
  const auto z = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  CHECK(z[0] == 0x6627e8d5u);
  CHECK(z[1] == 0xe169c58du);
  CHECK(z[2] == 0xbc57ac4cu);
  CHECK(z[3] == 0x9b00dbd8u);
  const auto f = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                      {0xffffffffu, 0xffffffffu});
  CHECK(f[0] == 0x408f276du);
  CHECK(f[1] == 0x41c83b0eu);
  CHECK(f[2] == 0xa20bc7c6u);
  CHECK(f[3] == 0x6d5451fdu);
}

TEST_CASE("noise stream is keyed, not sequential") {
  const NoiseStream a(42), b(42), c(43);
  std::vector<double> z1(5), z2(5);
  a.normals(7, 123, noise_tag::kDynamics, z1);
  // evaluate in a different order
  for (int k = 4; k >= 0; --k) z2[k] = b.normal(7, 123, noise_tag::kDynamics, k);
  for (int k = 0; k < 5; ++k) CHECK(z1[k] == z2[k]);
  CHECK(c.normal(7, 123, noise_tag::kDynamics, 0) != z1[0]);
  CHECK(a.normal(7, 124, noise_tag::kDynamics, 0) != z1[0]);
  CHECK(a.normal(8, 123, noise_tag::kDynamics, 0) != z1[0]);
  CHECK(a.normal(7, 123, noise_tag::kInitialPosition, 0) != z1[0]);
}

TEST_CASE("noise stream moments") {
  const NoiseStream s(2024);
  const int n = 200000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal(static_cast<std::uint32_t>(i % 1000), i / 1000, 0, 0);
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 4 / std::sqrt(n));
  CHECK(std::abs(m2 - 1) < 4 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3) < 4 * std::sqrt(96.0 / n));
}
