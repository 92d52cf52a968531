#include "ergokit/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "ergokit/error.hpp"
#include "ergokit/rng.hpp"

namespace ergokit::quad {

namespace {

// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix, weights the squared
// first eigenvector components times the total mass.
Rule1D golub_welsch(int n, const std::function<double(int)>& offdiag, double mass) {
  if (n < 1) throw config_error("quadrature rule needs at least one node");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = offdiag(k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mass * v0 * v0;
  }
  // Symmetric weight functions: enforce exact node symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double x = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

Rule1D gauss_legendre(int n) {
  return golub_welsch(
      n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); }, 2.0);
}

Rule1D gauss_hermite(int n) {
  return golub_welsch(n, [](int k) { return std::sqrt(static_cast<double>(k)); }, 1.0);
}

Rule1D gauss_gegenbauer(int n, double lambda) {
  if (lambda <= 0.0) throw config_error("Gegenbauer parameter must be positive");
  return golub_welsch(
      n,
      [lambda](int k) {
        return std::sqrt(k * (k + 2.0 * lambda - 1.0) /
                         (4.0 * (k + lambda) * (k + lambda - 1.0)));
      },
      1.0);
}

Rule1D composite_gauss_legendre(double a, double b, int panels, int order) {
  if (!(b > a) || panels < 1) throw config_error("composite rule needs b > a and panels >= 1");
  const Rule1D base = gauss_legendre(order);
  const double h = (b - a) / panels;
  Rule1D rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
  rule.weights.reserve(rule.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    for (int i = 0; i < order; ++i) {
      rule.nodes.push_back(mid + 0.5 * h * base.nodes[i]);
      rule.weights.push_back(0.5 * h * base.weights[i]);
    }
  }
  return rule;
}

PointRule tensor_rule(std::span<const Rule1D> axes) {
  PointRule rule;
  rule.dim = static_cast<int>(axes.size());
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.nodes.size();
  rule.nodes.resize(total * axes.size());
  rule.weights.resize(total);
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t p = 0; p < total; ++p) {
    double w = 1.0;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      rule.nodes[p * axes.size() + k] = axes[k].nodes[idx[k]];
      w *= axes[k].weights[idx[k]];
    }
    rule.weights[p] = w;
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (++idx[k] < axes[k].nodes.size()) break;
      idx[k] = 0;
    }
  }
  return rule;
}

PointRule sphere_rule(int d, int degree) {
  if (d < 2) throw config_error("sphere rule needs d >= 2");
  if (degree < 0) degree = 0;
  PointRule rule;
  rule.dim = d;
  rule.degree = degree;
  if (d == 2) {
    const int m = degree + 1;
    for (int j = 0; j < m; ++j) {
      const double theta = 2.0 * std::numbers::pi * (j + 0.5) / m;
      rule.nodes.push_back(std::cos(theta));
      rule.nodes.push_back(std::sin(theta));
      rule.weights.push_back(1.0 / m);
    }
    return rule;
  }
  // omega = (t, sqrt(1 - t^2) omega'), t has density ~ (1 - t^2)^((d-3)/2).
  const int n = degree / 2 + 1;
  const Rule1D polar = gauss_gegenbauer(n, 0.5 * (d - 2));
  const PointRule inner = sphere_rule(d - 1, degree);
  for (int i = 0; i < n; ++i) {
    const double t = polar.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (std::size_t q = 0; q < inner.size(); ++q) {
      rule.nodes.push_back(t);
      for (double c : inner.node(q)) rule.nodes.push_back(s * c);
      rule.weights.push_back(polar.weights[i] * inner.weights[q]);
    }
  }
  return rule;
}

PointRule sphere_monte_carlo(int d, int points, std::uint64_t seed) {
  if (d < 2 || points < 2) throw config_error("Monte-Carlo sphere rule needs d >= 2, points >= 2");
  const NoiseStream noise(seed);
  PointRule rule;
  rule.dim = d;
  rule.degree = -1;
  rule.standard_error = 1.0 / std::sqrt(static_cast<double>(points));
  std::vector<double> z(d);
  for (int p = 0; p < points; ++p) {
    double norm = 0;
    do {
      noise.normals(static_cast<std::uint32_t>(p), 0, noise_tag::kSphereQuadrature, z);
      norm = 0;
      for (double v : z) norm += v * v;
      norm = std::sqrt(norm);
    } while (norm == 0.0);
    for (double v : z) rule.nodes.push_back(v / norm);
    rule.weights.push_back(1.0 / points);
  }
  return rule;
}

PointRule gaussian_rule(int dim, double beta, int points_per_axis) {
  Rule1D axis = gauss_hermite(points_per_axis);
  const double scale = 1.0 / std::sqrt(beta);
  for (double& x : axis.nodes) x *= scale;
  std::vector<Rule1D> axes(dim, axis);
  PointRule rule = tensor_rule(axes);
  rule.degree = 2 * points_per_axis - 1;
  return rule;
}

BoxIntegral integrate_box(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> lo, std::span<const double> hi, double rel_tol,
                          int max_panels) {
  const int dim = static_cast<int>(lo.size());
  if (dim < 1 || dim > 3) throw config_error("box quadrature supports 1 <= dim <= 3");
  constexpr int kOrder = 8;
  auto estimate = [&](int panels) {
    std::vector<Rule1D> axes;
    for (int k = 0; k < dim; ++k)
      axes.push_back(composite_gauss_legendre(lo[k], hi[k], panels, kOrder));
    const PointRule rule = tensor_rule(axes);
    // Neumaier summation keeps the result independent of accumulated rounding drift.
    double sum = 0, comp = 0;
    for (std::size_t p = 0; p < rule.size(); ++p) {
      const double v = f(rule.node(p));
      if (!std::isfinite(v)) throw numerical_error("box quadrature: non-finite integrand");
      const double term = rule.weights[p] * v;
      const double t = sum + term;
      comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
      sum = t;
    }
    return sum + comp;
  };
  if (dim == 3) max_panels = std::min(max_panels, 32);
  int panels = dim == 3 ? 4 : 8;
  double prev = estimate(panels);
  for (;;) {
    const int next = panels * 2;
    const double cur = estimate(next);
    const double err = std::abs(cur - prev);
    if (err <= rel_tol * std::abs(cur) || next >= max_panels) return {cur, err, next};
    panels = next;
    prev = cur;
  }
}

}  // namespace ergokit::quad
