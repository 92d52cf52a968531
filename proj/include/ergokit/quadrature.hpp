#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace ergokit::quad {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre on [-1, 1] (weights sum to 2).
Rule1D gauss_legendre(int n);
/// Gauss-Hermite for the standard normal law (weights sum to 1).
Rule1D gauss_hermite(int n);
/// Gauss rule for the probability density proportional to (1 - t^2)^(lambda - 1/2) on [-1, 1].
Rule1D gauss_gegenbauer(int n, double lambda);
/// `panels` equal panels on [a, b], each with an `order`-point Gauss-Legendre rule.
Rule1D composite_gauss_legendre(double a, double b, int panels, int order);

/// A point set in R^dim with weights; nodes are stored row-major.
struct PointRule {
  int dim = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
  int degree = -1;             // polynomial exactness, -1 when not exact (Monte-Carlo)
  double standard_error = 0;   // per unit integrand variance, Monte-Carlo rules only

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t i) const {
    return {nodes.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

PointRule tensor_rule(std::span<const Rule1D> axes);

/// Product Gauss rule for the normalized surface measure on S^{d-1}, exact up to `degree`.
/// Point count grows like degree^(d-1); intended for d <= 4.
PointRule sphere_rule(int d, int degree);
/// Uniform Monte-Carlo points on S^{d-1} from a counter-based stream.
PointRule sphere_monte_carlo(int d, int points, std::uint64_t seed);
/// Tensor Gauss-Hermite rule for N(0, beta^{-1} I) in R^dim, exact up to 2 n - 1 per axis.
PointRule gaussian_rule(int dim, double beta, int points_per_axis);

struct BoxIntegral {
  double value = 0;
  double error_estimate = 0;
  int panels = 0;
};

/// Tensor composite Gauss-Legendre over [lo, hi] (dim <= 3). Panel count doubles until two
/// successive estimates agree to `rel_tol` or `max_panels` is reached.
BoxIntegral integrate_box(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> lo, std::span<const double> hi,
                          double rel_tol = 1e-8, int max_panels = 256);

}  // namespace ergokit::quad
