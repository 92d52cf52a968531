#include "ergokit/operators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <tuple>

namespace ergokit {

// ---------------------------------------------------------------------------------------------
// Univariate factors by truncated Taylor arithmetic.

namespace {

constexpr int kJet = Univariate::kMaxOrder + 1;
using Jet = std::array<double, kJet>;

Jet jet_mul(const Jet& a, const Jet& b) {
  Jet c{};
  for (int k = 0; k < kJet; ++k)
    for (int j = 0; j <= k; ++j) c[k] += a[j] * b[k - j];
  return c;
}

Jet jet_reciprocal(const Jet& q) {
  Jet y{};
  y[0] = 1.0 / q[0];
  for (int k = 1; k < kJet; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += q[j] * y[k - j];
    y[k] = -s / q[0];
  }
  return y;
}

Jet jet_exp(const Jet& g) {
  Jet e{};
  e[0] = std::exp(g[0]);
  for (int k = 1; k < kJet; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += j * g[j] * e[k - j];
    e[k] = s / k;
  }
  return e;
}

Jet poly_jet(const std::vector<double>& p, double x) {
  // Taylor coefficients p^(k)(x)/k! via repeated synthetic division.
  std::vector<double> c = p;
  Jet out{};
  for (int k = 0; k < kJet && !c.empty(); ++k) {
    double v = 0;
    std::vector<double> q(c.size() > 1 ? c.size() - 1 : 0);
    for (std::size_t n = c.size(); n-- > 0;) {
      v = v * x + c[n];
      if (n > 0) q[n - 1] = v;
    }
    out[k] = v;
    c = std::move(q);
  }
  return out;
}

constexpr std::array<double, kJet> kFactorial{1, 1, 2, 6, 24};

}  // namespace

double Univariate::derivative(int order, double x) const {
  if (order < 0 || order > kMaxOrder) throw config_error("missing derivative oracle order");
  const Jet p = poly_jet(poly, x);
  if (!compact()) return p[order] * kFactorial[order];
  const double s0 = (x - center) / radius;
  if (std::abs(s0) >= 1.0) return 0.0;
  Jet s{};
  s[0] = s0;
  s[1] = 1.0 / radius;
  Jet q = jet_mul(s, s);
  for (double& v : q) v = -v;
  q[0] += 1.0;
  Jet g = jet_reciprocal(q);
  for (double& v : g) v = -v;
  g[0] += 1.0;
  return jet_mul(p, jet_exp(g))[order] * kFactorial[order];
}

// ---------------------------------------------------------------------------------------------

std::shared_ptr<const XFunction> XFunction::product(std::vector<Univariate> factors) {
  if (factors.empty()) throw config_error("product function needs at least one factor");
  auto f = std::make_shared<XFunction>();
  f->dim_ = static_cast<int>(factors.size());
  f->max_order_ = Univariate::kMaxOrder;
  f->compact_ = true;
  for (const auto& u : factors) {
    f->compact_ = f->compact_ && u.compact();
    f->lo_.push_back(u.compact() ? u.center - u.radius : -kInf);
    f->hi_.push_back(u.compact() ? u.center + u.radius : kInf);
  }
  f->factors_ = std::move(factors);
  return f;
}

std::shared_ptr<const XFunction> XFunction::numerical(
    int dim, std::function<double(std::span<const double>)> fn, std::vector<double> lo,
    std::vector<double> hi, double step) {
  if (dim < 1 || static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
    throw config_error("numerical test function: support box dimension mismatch");
  auto f = std::make_shared<XFunction>();
  f->dim_ = dim;
  f->max_order_ = 2;
  f->compact_ = true;
  f->fn_ = std::move(fn);
  f->step_ = step;
  f->lo_ = std::move(lo);
  f->hi_ = std::move(hi);
  return f;
}

double XFunction::derivative(std::span<const int> alpha, std::span<const double> x) const {
  if (is_product()) {
    double v = 1.0;
    for (int k = 0; k < dim_ && v != 0.0; ++k) v *= factors_[k].derivative(alpha[k], x[k]);
    return v;
  }
  int order = 0;
  std::array<int, 2> axes{-1, -1};
  for (int k = 0; k < dim_; ++k)
    for (int m = 0; m < alpha[k]; ++m) {
      if (order < 2) axes[order] = k;
      ++order;
    }
  if (order > max_order_) throw config_error("missing derivative oracle order");
  std::vector<double> y(x.begin(), x.end());
  const double h = step_;
  auto at = [&](int i, double di, int j, double dj) {
    if (i >= 0) y[i] += di;
    if (j >= 0) y[j] += dj;
    const double v = fn_(y);
    if (i >= 0) y[i] -= di;
    if (j >= 0) y[j] -= dj;
    return v;
  };
  if (order == 0) return fn_(y);
  if (order == 1) return (at(axes[0], h, -1, 0) - at(axes[0], -h, -1, 0)) / (2 * h);
  if (axes[0] == axes[1])
    return (at(axes[0], h, -1, 0) - 2 * fn_(y) + at(axes[0], -h, -1, 0)) / (h * h);
  return (at(axes[0], h, axes[1], h) - at(axes[0], h, axes[1], -h) - at(axes[0], -h, axes[1], h) +
          at(axes[0], -h, axes[1], -h)) /
         (4 * h * h);
}

// ---------------------------------------------------------------------------------------------
// PhaseFunction algebra.

namespace {

bool term_less(const Term& a, const Term& b) {
  return std::tie(a.mono, a.x) < std::tie(b.mono, b.x);
}

void add_phi_factor(XTerm& t, std::vector<int> axes) {
  std::sort(axes.begin(), axes.end());
  t.phi.push_back(std::move(axes));
  std::sort(t.phi.begin(), t.phi.end());
}

/// d/dx_i of an x-term, as a list of x-terms with unit coefficient.
std::vector<XTerm> xterm_derivative(const XTerm& t, int i) {
  std::vector<XTerm> out;
  if (t.fn) {
    XTerm d = t;
    d.alpha[i] += 1;
    const int order = std::accumulate(d.alpha.begin(), d.alpha.end(), 0);
    if (order > t.fn->max_order()) throw config_error("missing derivative oracle order");
    out.push_back(std::move(d));
  }
  for (std::size_t m = 0; m < t.phi.size(); ++m) {
    XTerm d = t;
    std::vector<int> axes = d.phi[m];
    axes.push_back(i);
    if (axes.size() > 2)
      throw config_error("missing derivative oracle order: third derivatives of Phi");
    d.phi.erase(d.phi.begin() + static_cast<std::ptrdiff_t>(m));
    add_phi_factor(d, std::move(axes));
    out.push_back(std::move(d));
  }
  return out;
}

int degree(const std::vector<int>& mono) { return std::accumulate(mono.begin(), mono.end(), 0); }

}  // namespace

PhaseFunction PhaseFunction::constant(int xdim, int vdim, double c) {
  PhaseFunction f(xdim, vdim);
  f.add_term({c, std::vector<int>(vdim, 0), XTerm{}});
  f.id = "const";
  return f;
}

PhaseFunction PhaseFunction::product(
    int vdim, const std::vector<std::pair<double, std::vector<int>>>& velocity,
    std::shared_ptr<const XFunction> h) {
  const int xdim = h ? h->dim() : 0;
  PhaseFunction f(xdim, vdim);
  for (const auto& [c, e] : velocity) {
    if (static_cast<int>(e.size()) != vdim)
      throw config_error("velocity monomial has the wrong dimension");
    XTerm x;
    x.fn = h;
    if (h) x.alpha.assign(xdim, 0);
    f.add_term({c, e, x});
  }
  return f;
}

PhaseFunction PhaseFunction::position_coordinate(int xdim, int vdim, int i) {
  std::vector<Univariate> u(xdim);
  u[i].poly = {0.0, 1.0};
  PhaseFunction f = product(vdim, {{1.0, std::vector<int>(vdim, 0)}}, XFunction::product(u));
  f.xdim_ = xdim;
  f.id = "x" + std::to_string(i + 1);
  return f;
}

PhaseFunction PhaseFunction::velocity_coordinate(int xdim, int vdim, int i) {
  PhaseFunction f(xdim, vdim);
  std::vector<int> e(vdim, 0);
  e[i] = 1;
  f.add_term({1.0, e, XTerm{}});
  f.id = "omega" + std::to_string(i + 1);
  return f;
}

int PhaseFunction::velocity_degree() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, degree(t.mono));
  return d;
}

int PhaseFunction::derivative_order() const {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, std::accumulate(t.x.alpha.begin(), t.x.alpha.end(), 0));
  return d;
}

void PhaseFunction::add_term(Term t) {
  if (t.coef == 0.0) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), t, term_less);
  if (it != terms_.end() && !term_less(t, *it)) {
    it->coef += t.coef;
    if (it->coef == 0.0) terms_.erase(it);
    return;
  }
  terms_.insert(it, std::move(t));
}

PhaseFunction& PhaseFunction::operator+=(const PhaseFunction& o) {
  if (xdim_ == 0 && vdim_ == 0) {
    xdim_ = o.xdim_;
    vdim_ = o.vdim_;
  }
  for (const auto& t : o.terms_) add_term(t);
  return *this;
}

PhaseFunction& PhaseFunction::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& t : terms_) t.coef *= s;
  return *this;
}

double PhaseFunction::evaluate(const Potential& phi, std::span<const double> x,
                               std::span<const double> omega) const {
  std::vector<double> grad, hess;
  const int n = static_cast<int>(x.size());
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coef;
    for (std::size_t i = 0; i < t.mono.size(); ++i)
      for (int m = 0; m < t.mono[i]; ++m) v *= omega[i];
    if (v == 0.0) continue;
    if (t.x.fn) v *= t.x.fn->derivative(t.x.alpha, x);
    for (const auto& f : t.x.phi) {
      if (f.size() == 1) {
        if (grad.empty()) {
          grad.resize(n);
          phi.gradient(x, grad);
        }
        v *= grad[f[0]];
      } else {
        if (hess.empty()) {
          hess.resize(static_cast<std::size_t>(n) * n);
          phi.hessian(x, hess);
        }
        v *= hess[f[0] * n + f[1]];
      }
    }
    sum += v;
  }
  return sum;
}

// ---------------------------------------------------------------------------------------------
// Operators.

PhaseFunction derivative_x(const PhaseFunction& f, int i) {
  PhaseFunction out(f.xdim(), f.vdim());
  for (const auto& t : f.terms())
    for (auto& d : xterm_derivative(t.x, i)) out.add_term({t.coef, t.mono, std::move(d)});
  return out;
}

PhaseFunction apply_velocity_laplacian(const PhaseFunction& f, const ModelParams& p) {
  PhaseFunction out(f.xdim(), f.vdim());
  const bool sphere = p.model == ModelKind::Fiber;
  for (const auto& t : f.terms()) {
    for (std::size_t i = 0; i < t.mono.size(); ++i) {
      if (t.mono[i] < 2) continue;
      Term d = t;
      d.coef *= t.mono[i] * (t.mono[i] - 1);
      d.mono[i] -= 2;
      out.add_term(std::move(d));
    }
    if (sphere) {
      const int n = degree(t.mono);
      Term d = t;
      d.coef *= -static_cast<double>(n) * (n + p.d - 2);
      out.add_term(std::move(d));
    }
  }
  return out;
}

PhaseFunction apply_S(const PhaseFunction& f, const ModelParams& p) {
  if (p.model == ModelKind::Fiber)
    return (0.5 * p.sigma * p.sigma) * apply_velocity_laplacian(f, p);
  PhaseFunction out = (p.alpha / p.beta) * apply_velocity_laplacian(f, p);
  for (const auto& t : f.terms()) {
    Term d = t;
    d.coef *= -p.alpha * degree(t.mono);
    out.add_term(std::move(d));
  }
  return out;
}

PhaseFunction apply_A(const PhaseFunction& f, const ModelParams& p) {
  PhaseFunction out(f.xdim(), f.vdim());
  const int n = f.xdim();
  const bool sphere = p.model == ModelKind::Fiber;
  const double kick = sphere ? 1.0 / (p.d - 1) : 1.0 / p.beta;
  for (const auto& t : f.terms()) {
    const int deg = degree(t.mono);
    for (int i = 0; i < n; ++i) {
      // -omega_i d/dx_i
      for (auto& d : xterm_derivative(t.x, i)) {
        Term r{-t.coef, t.mono, std::move(d)};
        r.mono[i] += 1;
        out.add_term(std::move(r));
      }
      // d_i Phi times the velocity derivative (tangential on the sphere)
      XTerm xp = t.x;
      add_phi_factor(xp, {i});
      if (t.mono[i] > 0) {
        Term r{kick * t.coef * t.mono[i], t.mono, xp};
        r.mono[i] -= 1;
        out.add_term(std::move(r));
      }
      if (sphere && deg > 0) {
        Term r{-kick * t.coef * deg, t.mono, xp};
        r.mono[i] += 1;
        out.add_term(std::move(r));
      }
    }
  }
  return out;
}

PhaseFunction apply_L(const PhaseFunction& f, const ModelParams& p) {
  return apply_S(f, p) - apply_A(f, p);
}

PhaseFunction project_P(const PhaseFunction& f, const ModelParams& p) {
  PhaseFunction out(f.xdim(), f.vdim());
  for (const auto& t : f.terms()) {
    const double v = velocity_moment(p, t.mono);
    if (v == 0.0) continue;
    out.add_term({t.coef * v, std::vector<int>(t.mono.size(), 0), t.x});
  }
  out.id = f.id.empty() ? "" : "P(" + f.id + ")";
  return out;
}

PhaseFunction apply_G_phi(const PhaseFunction& f) {
  if (!f.velocity_independent())
    throw config_error("domain mismatch: G acts on velocity-independent functions");
  PhaseFunction out(f.xdim(), f.vdim());
  for (int i = 0; i < f.xdim(); ++i) {
    const PhaseFunction di = derivative_x(f, i);
    out += derivative_x(di, i);
    for (const auto& t : di.terms()) {
      Term r{-t.coef, t.mono, t.x};
      add_phi_factor(r.x, {i});
      out.add_term(std::move(r));
    }
  }
  return out;
}

PhaseFunction times_phi_derivative(const PhaseFunction& f, int i) {
  PhaseFunction out(f.xdim(), f.vdim());
  for (const auto& t : f.terms()) {
    Term r = t;
    add_phi_factor(r.x, {i});
    out.add_term(std::move(r));
  }
  return out;
}

PhaseFunction apply_G(const PhaseFunction& f, const ModelParams& p) {
  const double scale = p.model == ModelKind::Langevin ? 1.0 / p.beta : 1.0 / p.d;
  return scale * apply_G_phi(f);
}

// ---------------------------------------------------------------------------------------------
// Quadrature.

struct QuadratureScheme::Cache {
  std::map<std::pair<XTerm, int>, std::vector<double>> axis;
  std::map<std::pair<XTerm, XTerm>, double> pairs;
  std::map<XTerm, std::vector<double>> nodes;
  std::map<std::vector<int>, double> moments;
};

QuadratureScheme::QuadratureScheme(Potential phi, ModelParams params, QuadratureOptions opt)
    : phi_(std::move(phi)), params_(params), opt_(std::move(opt)) {
  const int n = phi_.dim();
  const int v = params_.velocity_dim();
  if (params_.model == ModelKind::Langevin) {
    vrule_ = quad::gaussian_rule(v, params_.beta, v > 4 ? 3 : opt_.gauss_points);
  } else if (params_.d <= 4) {
    vrule_ = quad::sphere_rule(params_.d, opt_.sphere_degree);
  } else {
    vrule_ = quad::sphere_monte_carlo(params_.d, opt_.monte_carlo_points, opt_.seed);
  }

  lo_.resize(n);
  hi_.resize(n);
  for (int k = 0; k < n; ++k) {
    if (phi_.periodic()) {
      lo_[k] = 0.0;
      hi_[k] = phi_.periods()[k];
    } else if (!phi_.support_radius().empty()) {
      lo_[k] = -phi_.support_radius()[k];
      hi_[k] = phi_.support_radius()[k];
    } else if (opt_.box_lo.empty()) {
      throw config_error("quadrature needs a support radius or an explicit box");
    }
  }
  separable_ = phi_.kind() == PotentialKind::Quadratic || phi_.kind() == PotentialKind::FlatPeriodic;
  if (!separable_ && !opt_.box_lo.empty()) {
    if (static_cast<int>(opt_.box_lo.size()) != n || static_cast<int>(opt_.box_hi.size()) != n)
      throw config_error("quadrature box has the wrong dimension");
    lo_ = opt_.box_lo;
    hi_ = opt_.box_hi;
  }

  if (separable_) {
    global_weight_ = std::exp(-phi_.log_normalizer());
    mass_ = global_weight_;
    for (int k = 0; k < n; ++k) {
      quad::Rule1D r = quad::composite_gauss_legendre(lo_[k], hi_[k], opt_.axis_panels, opt_.order);
      if (phi_.kind() == PotentialKind::Quadratic) {
        const double a = phi_.quadratic_coefficients()[k];
        for (std::size_t j = 0; j < r.nodes.size(); ++j)
          r.weights[j] *= std::exp(-a * r.nodes[j] * r.nodes[j]);
      }
      mass_ *= std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
      axes_.push_back(std::move(r));
    }
    return;
  }

  if (n > 3) throw config_error("tensor x-rule needs dim <= 3");
  const int panels = opt_.tensor_panels > 0 ? opt_.tensor_panels : (n == 1 ? 256 : n == 2 ? 48 : 12);
  std::vector<quad::Rule1D> axes;
  for (int k = 0; k < n; ++k)
    axes.push_back(quad::composite_gauss_legendre(lo_[k], hi_[k], panels, opt_.order));
  xrule_ = quad::tensor_rule(axes);
  axes_ = axes;
  grad_.assign(xrule_.size() * n, 0.0);
  if (phi_.has_hessian()) hess_.assign(xrule_.size() * n * n, 0.0);
  for (std::size_t j = 0; j < xrule_.size(); ++j) {
    const auto x = xrule_.node(j);
    const double val = phi_.value(x);
    const double w = val == kInf ? 0.0 : std::exp(-val);
    xrule_.weights[j] *= w;
    if (w == 0.0) continue;
    phi_.gradient(x, std::span<double>(grad_.data() + j * n, n));
    if (!hess_.empty()) phi_.hessian(x, std::span<double>(hess_.data() + j * n * n, n * n));
  }
  mass_ = std::accumulate(xrule_.weights.begin(), xrule_.weights.end(), 0.0);
}

void QuadratureScheme::check_support(const PhaseFunction& f) const {
  for (const auto& t : f.terms()) {
    if (!t.x.fn) continue;
    if (t.x.fn->dim() != phi_.dim()) throw config_error("test function dimension mismatch");
    if (!t.x.fn->compact()) continue;
    for (int k = 0; k < phi_.dim(); ++k) {
      const double slack = 1e-12 * (1.0 + std::abs(hi_[k] - lo_[k]));
      if (t.x.fn->support_lo()[k] < lo_[k] - slack || t.x.fn->support_hi()[k] > hi_[k] + slack)
        throw config_error("support exceeds quadrature box");
    }
    if (separable_ && !t.x.fn->is_product())
      throw config_error("numerical test functions need a tensor x-rule (non-separable scheme)");
  }
}

const std::vector<double>& QuadratureScheme::axis_values(const XTerm& t, int axis,
                                                         Cache& cache) const {
  auto key = std::make_pair(t, axis);
  auto it = cache.axis.find(key);
  if (it != cache.axis.end()) return it->second;
  const quad::Rule1D& r = axes_[axis];
  std::vector<double> vals(r.nodes.size(), 1.0);
  if (t.fn) {
    const Univariate& u = t.fn->factors()[axis];
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] = u.derivative(t.alpha[axis], r.nodes[j]);
  }
  for (const auto& f : t.phi) {
    if (f[0] != axis) continue;
    const double a = phi_.quadratic_coefficients()[axis];
    if (f.size() == 1)
      for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= 2.0 * a * r.nodes[j];
    else
      for (double& v : vals) v *= 2.0 * a;
  }
  return cache.axis.emplace(std::move(key), std::move(vals)).first->second;
}

const std::vector<double>& QuadratureScheme::node_values(const XTerm& t, Cache& cache) const {
  auto it = cache.nodes.find(t);
  if (it != cache.nodes.end()) return it->second;
  const int n = phi_.dim();
  for (const auto& f : t.phi)
    if (f.size() == 2 && hess_.empty())
      throw config_error("missing derivative oracle order: potential has no Hessian");
  // Product functions are tabulated per axis and multiplied out over the tensor grid.
  std::vector<std::vector<double>> table;
  if (t.fn && t.fn->is_product()) {
    for (int k = 0; k < n; ++k) {
      std::vector<double> col(axes_[k].nodes.size());
      for (std::size_t j = 0; j < col.size(); ++j)
        col[j] = t.fn->factors()[k].derivative(t.alpha[k], axes_[k].nodes[j]);
      table.push_back(std::move(col));
    }
  }
  std::vector<double> vals(xrule_.size(), 0.0);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t j = 0; j < xrule_.size(); ++j) {
    if (j > 0)
      for (int k = n; k-- > 0;) {
        if (++idx[k] < axes_[k].nodes.size()) break;
        idx[k] = 0;
      }
    if (xrule_.weights[j] == 0.0) continue;
    double v = 1.0;
    if (!table.empty()) {
      for (int k = 0; k < n && v != 0.0; ++k) v *= table[k][idx[k]];
      if (v == 0.0) continue;
    } else if (t.fn) {
      v = t.fn->derivative(t.alpha, xrule_.node(j));
    }
    for (const auto& f : t.phi)
      v *= f.size() == 1 ? grad_[j * n + f[0]] : hess_[j * n * n + f[0] * n + f[1]];
    vals[j] = v;
  }
  return cache.nodes.emplace(t, std::move(vals)).first->second;
}

double QuadratureScheme::pair_integral(const XTerm& a, const XTerm& b, Cache& cache) const {
  auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  if (auto it = cache.pairs.find(key); it != cache.pairs.end()) return it->second;
  const double v = pair_integral_uncached(a, b, cache);
  cache.pairs.emplace(std::move(key), v);
  return v;
}

double QuadratureScheme::pair_integral_uncached(const XTerm& a, const XTerm& b,
                                                Cache& cache) const {
  if (!separable_) {
    const auto& va = node_values(a, cache);
    const auto& vb = node_values(b, cache);
    double s = 0.0;
    for (std::size_t j = 0; j < va.size(); ++j) s += xrule_.weights[j] * va[j] * vb[j];
    return s;
  }
  for (const XTerm* t : {&a, &b})
    for (const auto& f : t->phi)
      if (phi_.kind() == PotentialKind::FlatPeriodic || (f.size() == 2 && f[0] != f[1]))
        return 0.0;
  double prod = global_weight_;
  for (int k = 0; k < phi_.dim() && prod != 0.0; ++k) {
    const auto& ua = axis_values(a, k, cache);
    const auto& ub = axis_values(b, k, cache);
    const auto& w = axes_[k].weights;
    double s = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * ua[j] * ub[j];
    prod *= s;
  }
  return prod;
}

namespace {

double moment_cached(const ModelParams& p, const std::vector<int>& a, const std::vector<int>& b,
                     std::map<std::vector<int>, double>& cache) {
  std::vector<int> e(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) e[i] = a[i] + b[i];
  auto it = cache.find(e);
  if (it != cache.end()) return it->second;
  const double v = velocity_moment(p, e);
  cache.emplace(std::move(e), v);
  return v;
}

}  // namespace

std::vector<std::vector<double>> QuadratureScheme::gram(std::span<const PhaseFunction> lhs,
                                                        std::span<const PhaseFunction> rhs) const {
  for (const auto& f : lhs) check_support(f);
  for (const auto& g : rhs) check_support(g);
  Cache cache;
  std::vector<std::vector<double>> out(lhs.size(), std::vector<double>(rhs.size(), 0.0));
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    for (std::size_t j = 0; j < rhs.size(); ++j) {
      long double s = 0.0L;
      for (const auto& a : lhs[i].terms()) {
        for (const auto& b : rhs[j].terms()) {
          const double v = moment_cached(params_, a.mono, b.mono, cache.moments);
          if (v == 0.0) continue;
          s += static_cast<long double>(a.coef * b.coef * v) * pair_integral(a.x, b.x, cache);
        }
      }
      out[i][j] = static_cast<double>(s);
    }
  }
  return out;
}

double QuadratureScheme::inner_product(const PhaseFunction& f, const PhaseFunction& g) const {
  return gram(std::span(&f, 1), std::span(&g, 1))[0][0];
}

double QuadratureScheme::norm(const PhaseFunction& f) const {
  return std::sqrt(std::max(0.0, inner_product(f, f)));
}

double QuadratureScheme::mean(const PhaseFunction& f) const {
  return inner_product(f, PhaseFunction::constant(f.xdim(), f.vdim()));
}

double QuadratureScheme::velocity_average(
    const std::function<double(std::span<const double>)>& g) const {
  double s = 0.0;
  for (std::size_t q = 0; q < vrule_.size(); ++q) s += vrule_.weights[q] * g(vrule_.node(q));
  return s;
}

// ---------------------------------------------------------------------------------------------
// Identity checks.

std::string to_string(IdentityTag tag) {
  switch (tag) {
    case IdentityTag::Antisymmetry: return "antisymmetry";
    case IdentityTag::SSymmetry: return "s_symmetry";
    case IdentityTag::SNonpositive: return "s_nonpositive";
    case IdentityTag::Invariance: return "invariance";
    case IdentityTag::E1Margin: return "e1_margin";
    case IdentityTag::E4: return "e4";
    case IdentityTag::PLAP: return "plap";
    case IdentityTag::SphereGaussian: return "sphere_gaussian";
    case IdentityTag::SphereLaplacian: return "sphere_laplacian";
  }
  return "unknown";
}

IdentityTag identity_from_string(const std::string& name) {
  for (auto t : {IdentityTag::Antisymmetry, IdentityTag::SSymmetry, IdentityTag::SNonpositive,
                 IdentityTag::Invariance, IdentityTag::E1Margin, IdentityTag::E4,
                 IdentityTag::PLAP, IdentityTag::SphereGaussian, IdentityTag::SphereLaplacian})
    if (to_string(t) == name) return t;
  throw config_error("identity tag unknown: " + name);
}

double default_tolerance(IdentityTag tag) {
  switch (tag) {
    case IdentityTag::PLAP:
    case IdentityTag::Invariance: return 1e-6;
    case IdentityTag::SphereGaussian: return 1e-10;
    default: return 1e-8;
  }
}

namespace {

double microscopic_constant(const ModelParams& p) {
  return p.model == ModelKind::Langevin ? p.alpha : 0.5 * p.sigma * p.sigma * (p.d - 1);
}

ResidualReport make_report(IdentityTag tag, const QuadratureScheme& q, const std::string& id,
                           double residual, double scale, std::optional<double> tol) {
  ResidualReport r;
  r.identity = tag;
  r.model = to_string(q.params().model);
  r.function_id = id;
  r.residual = residual;
  r.scale = scale;
  r.tolerance = tol.value_or(default_tolerance(tag));
  r.pass = std::isfinite(residual) && residual <= r.tolerance * scale;
  return r;
}

PhaseFunction transport(const PhaseFunction& f) {
  PhaseFunction out(f.xdim(), f.vdim());
  for (int i = 0; i < f.xdim(); ++i) {
    const PhaseFunction di = derivative_x(f, i);
    for (const auto& t : di.terms()) {
      Term r = t;
      r.mono[i] += 1;
      out.add_term(std::move(r));
    }
  }
  return out;
}

}  // namespace

ResidualReport check_pair(IdentityTag tag, const PhaseFunction& f, const PhaseFunction& g,
                          const QuadratureScheme& q, std::optional<double> tol) {
  const ModelParams& p = q.params();
  const std::string id = f.id + "|" + g.id;
  if (tag == IdentityTag::Antisymmetry) {
    const PhaseFunction af = apply_A(f, p), ag = apply_A(g, p);
    const double r = q.inner_product(af, g) + q.inner_product(f, ag);
    const double scale = q.norm(af) * q.norm(g) + q.norm(f) * q.norm(ag) + 1e-30;
    return make_report(tag, q, id, std::abs(r), scale, tol);
  }
  if (tag == IdentityTag::SSymmetry) {
    const PhaseFunction sf = apply_S(f, p), sg = apply_S(g, p);
    const double r = q.inner_product(sf, g) - q.inner_product(f, sg);
    const double scale = q.norm(sf) * q.norm(g) + q.norm(f) * q.norm(sg) + 1e-30;
    return make_report(tag, q, id, std::abs(r), scale, tol);
  }
  throw config_error("identity tag unknown for a pair check: " + to_string(tag));
}

ResidualReport check_identity(IdentityTag tag, const PhaseFunction& f, const QuadratureScheme& q,
                              std::optional<double> tol) {
  const ModelParams& p = q.params();
  switch (tag) {
    case IdentityTag::Antisymmetry:
    case IdentityTag::SSymmetry:
      return check_pair(tag, f, f, q, tol);
    case IdentityTag::SNonpositive: {
      const PhaseFunction sf = apply_S(f, p);
      const double v = q.inner_product(sf, f);
      return make_report(tag, q, f.id, std::max(0.0, v), q.norm(sf) * q.norm(f) + 1e-30, tol);
    }
    case IdentityTag::Invariance: {
      const PhaseFunction lf = apply_L(f, p);
      return make_report(tag, q, f.id, std::abs(q.mean(lf)), q.norm(lf) + 1e-30, tol);
    }
    case IdentityTag::E1Margin: {
      const double s = q.inner_product(apply_S(f, p), f);
      const double fluct = std::pow(q.norm(f - project_P(f, p)), 2);
      const double margin = -s - microscopic_constant(p) * fluct;
      const double nf = q.norm(f);
      return make_report(tag, q, f.id, std::max(0.0, -margin), nf * nf + 1e-30, tol);
    }
    case IdentityTag::E4: {
      const PhaseFunction apf = apply_A(project_P(f, p), p);
      const PhaseFunction r = apply_S(apf, p) + microscopic_constant(p) * apf;
      return make_report(tag, q, f.id, q.norm(r), q.norm(apf) + 1e-30, tol);
    }
    case IdentityTag::PLAP: {
      if (!f.velocity_independent())
        throw config_error("domain mismatch: PLAP identity needs f = Pf");
      const PhaseFunction gf = apply_G(f, p);
      const PhaseFunction r = project_P(apply_L(apply_A(f, p), p), p) + gf;
      return make_report(tag, q, f.id, q.norm(r), q.norm(gf) + 1e-30, tol);
    }
    case IdentityTag::SphereGaussian: {
      if (!f.velocity_independent())
        throw config_error("domain mismatch: the Gaussian formula needs f = f(x)");
      std::vector<int> e(p.velocity_dim(), 0);
      e[0] = 2;
      const double m2 = velocity_moment(p, e);
      double grad2 = 0.0;
      for (int i = 0; i < f.xdim(); ++i) grad2 += std::pow(q.norm(derivative_x(f, i)), 2);
      const double lhs = std::pow(q.norm(transport(f)), 2);
      return make_report(tag, q, f.id, std::abs(lhs - m2 * grad2), m2 * grad2 + 1e-30, tol);
    }
    case IdentityTag::SphereLaplacian:
      throw config_error("use check_sphere_laplacian for the Laplace-Beltrami identity");
  }
  throw config_error("identity tag unknown");
}

ResidualReport check_sphere_laplacian(int d, int k, std::optional<double> tol) {
  if (d < 2 || k < 0 || k >= d) throw config_error("sphere Laplacian check needs d >= 2, 0 <= k < d");
  const quad::PointRule rule = d <= 4 ? quad::sphere_rule(d, 7) : quad::sphere_monte_carlo(d, 200, 7);
  ModelParams p;
  p.model = ModelKind::Fiber;
  p.d = d;
  const PhaseFunction f = PhaseFunction::velocity_coordinate(0, d, k);
  const PhaseFunction lap = apply_velocity_laplacian(f, p);
  const Potential dummy = Potential::flat_periodic({1.0});
  const double h = 1e-3;
  auto extension = [k](std::vector<double> y) {
    double r = 0;
    for (double v : y) r += v * v;
    return y[k] / std::sqrt(r);
  };
  double worst = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto w = rule.node(q);
    std::vector<double> y(w.begin(), w.end());
    double fd = 0.0;
    for (int i = 0; i < d; ++i) {
      auto shifted = [&](double s) {
        std::vector<double> z = y;
        z[i] += s;
        return extension(z);
      };
      fd += (-shifted(2 * h) + 16 * shifted(h) - 30 * extension(y) + 16 * shifted(-h) -
             shifted(-2 * h)) /
            (12 * h * h);
    }
    const double exact = -(d - 1) * w[k];
    const double symbolic = lap.evaluate(dummy, {}, w);
    worst = std::max({worst, std::abs(fd - exact), std::abs(symbolic - exact)});
  }
  ResidualReport r;
  r.identity = IdentityTag::SphereLaplacian;
  r.model = "fiber";
  r.function_id = "omega" + std::to_string(k + 1) + "_d" + std::to_string(d);
  r.residual = worst;
  r.scale = 1.0;
  r.tolerance = tol.value_or(default_tolerance(IdentityTag::SphereLaplacian));
  r.pass = worst <= r.tolerance;
  return r;
}

// ---------------------------------------------------------------------------------------------
// Test family.

namespace {

std::vector<std::vector<int>> multi_indices(int dim, int max_total) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(dim, 0);
  std::function<void(int, int)> rec = [&](int k, int left) {
    if (k == dim) {
      out.push_back(a);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[k] = v;
      rec(k + 1, left - v);
    }
    a[k] = 0;
  };
  rec(0, max_total);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& x, const auto& y) { return degree(x) < degree(y); });
  return out;
}

/// Probabilists' Hermite polynomial He_n(s (x - c)) in powers of x, n <= 2.
std::vector<double> hermite_in_x(int n, double s, double c) {
  if (n == 0) return {1.0};
  if (n == 1) return {-s * c, s};
  return {s * s * c * c - 1.0, -2.0 * s * s * c, s * s};
}

struct BumpLayout {
  std::vector<double> center, radius;
};

std::vector<BumpLayout> bump_layouts(const Potential& phi, int variants) {
  const int n = phi.dim();
  std::vector<BumpLayout> out;
  for (int v = 0; v < variants; ++v) {
    BumpLayout b{std::vector<double>(n), std::vector<double>(n)};
    for (int k = 0; k < n; ++k) {
      const double sign = (k + v) % 2 == 0 ? 1.0 : -1.0;
      switch (phi.kind()) {
        case PotentialKind::Quadratic: {
          const double s = 1.0 / std::sqrt(2.0 * phi.quadratic_coefficients()[k]);
          const std::array<double, 3> rad{3.0, 2.0, 1.5}, off{0.0, 0.5, 1.0};
          b.center[k] = sign * off[v % 3] * s;
          b.radius[k] = rad[v % 3] * s;
          break;
        }
        case PotentialKind::FlatPeriodic: {
          const double r = phi.periods()[k];
          const std::array<double, 3> rad{0.4, 0.3, 0.2}, mid{0.5, 0.45, 0.6};
          b.center[k] = mid[v % 3] * r;
          b.radius[k] = rad[v % 3] * r;
          break;
        }
        default: {
          double scale = phi.support_radius().empty() ? 1.0 : 0.25 * phi.support_radius()[k];
          if (phi.pair_params()) scale = std::pow(2.0, 1.0 / 6.0) * phi.pair_params()->length;
          const std::array<double, 3> rad{0.3, 0.25, 0.2}, off{0.0, 0.1, 0.15};
          b.center[k] = phi.reference_point()[k] + sign * off[v % 3] * scale;
          b.radius[k] = rad[v % 3] * scale;
          break;
        }
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::shared_ptr<const XFunction> hermite_bump(const std::vector<int>& a, const BumpLayout& b) {
  std::vector<Univariate> u(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    u[k].poly = hermite_in_x(a[k], 3.0 / b.radius[k], b.center[k]);
    u[k].center = b.center[k];
    u[k].radius = b.radius[k];
  }
  return XFunction::product(std::move(u));
}

using VelocityPoly = std::vector<std::pair<double, std::vector<int>>>;

/// prod_k He_{b_k}(sqrt(beta) omega_k) expanded into monomials.
VelocityPoly hermite_velocity(const std::vector<int>& b, double beta) {
  VelocityPoly poly{{1.0, std::vector<int>(b.size(), 0)}};
  for (std::size_t k = 0; k < b.size(); ++k) {
    VelocityPoly next;
    for (const auto& [c, e] : poly) {
      if (b[k] == 0) {
        next.emplace_back(c, e);
      } else if (b[k] == 1) {
        auto e1 = e;
        e1[k] = 1;
        next.emplace_back(c * std::sqrt(beta), e1);
      } else {
        auto e2 = e;
        e2[k] = 2;
        next.emplace_back(c * beta, e2);
        next.emplace_back(-c, e);
      }
    }
    poly = std::move(next);
  }
  return poly;
}

/// Real spherical harmonics of degree <= max_degree (degree 2 only for d <= 3).
std::vector<std::pair<std::string, VelocityPoly>> sphere_harmonics(int d, int max_degree) {
  std::vector<std::pair<std::string, VelocityPoly>> out;
  const std::vector<int> zero(d, 0);
  out.push_back({"1", {{1.0, zero}}});
  if (max_degree < 1) return out;
  for (int i = 0; i < d; ++i) {
    auto e = zero;
    e[i] = 1;
    out.push_back({"w" + std::to_string(i + 1), {{1.0, e}}});
  }
  if (max_degree < 2) return out;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      auto e = zero;
      e[i] = e[j] = 1;
      out.push_back({"w" + std::to_string(i + 1) + "w" + std::to_string(j + 1), {{1.0, e}}});
    }
  for (int i = 0; i + 1 < d; ++i) {
    auto ei = zero, ej = zero;
    ei[i] = 2;
    ej[i + 1] = 2;
    out.push_back({"w" + std::to_string(i + 1) + "^2-w" + std::to_string(i + 2) + "^2",
                   {{1.0, ei}, {-1.0, ej}}});
  }
  return out;
}

std::string index_label(const std::vector<int>& a) {
  std::string s;
  for (int v : a) s += std::to_string(v);
  return s;
}

}  // namespace

std::vector<PhaseFunction> test_family(const Potential& phi, const ModelParams& p) {
  const int n = phi.dim();
  const int v = p.velocity_dim();
  std::vector<PhaseFunction> out;
  constexpr std::size_t kMaxMembers = 50;
  if (p.model == ModelKind::Langevin) {
    const int amax = n == 1 ? 2 : 1;
    const int bmax = n <= 2 ? 2 : 1;
    const int variants = n == 1 ? 3 : n <= 3 ? 2 : 1;
    const auto layouts = bump_layouts(phi, variants);
    for (int var = 0; var < variants; ++var)
      for (const auto& a : multi_indices(n, amax))
        for (const auto& b : multi_indices(v, bmax)) {
          if (out.size() >= kMaxMembers) break;
          PhaseFunction f =
              PhaseFunction::product(v, hermite_velocity(b, p.beta), hermite_bump(a, layouts[var]));
          f.id = "h" + index_label(a) + "-v" + index_label(b) + "-c" + std::to_string(var);
          out.push_back(std::move(f));
        }
  } else {
    const int hdeg = p.d <= 3 ? 2 : 1;
    const int variants = p.d == 2 ? 2 : 1;
    const auto layouts = bump_layouts(phi, variants);
    const auto harmonics = sphere_harmonics(p.d, hdeg);
    for (int var = 0; var < variants; ++var)
      for (const auto& a : multi_indices(n, 1))
        for (const auto& [label, poly] : harmonics) {
          if (out.size() >= kMaxMembers) break;
          PhaseFunction f = PhaseFunction::product(v, poly, hermite_bump(a, layouts[var]));
          f.id = "h" + index_label(a) + "-Y" + label + "-c" + std::to_string(var);
          out.push_back(std::move(f));
        }
  }
  return out;
}

std::vector<PhaseFunction> macroscopic_family(const Potential& phi, const ModelParams& p) {
  std::vector<PhaseFunction> out;
  for (auto& f : test_family(phi, p))
    if (f.velocity_independent()) out.push_back(std::move(f));
  return out;
}

std::vector<PhaseFunction> kato_family(const Potential& phi, const ModelParams& p) {
  const int n = phi.dim();
  const int v = p.velocity_dim();
  const int amax = n <= 2 ? 2 : 1;
  const auto layouts = bump_layouts(phi, 3);
  std::vector<PhaseFunction> out;
  for (int var = 0; var < 3; ++var)
    for (const auto& a : multi_indices(n, amax)) {
      PhaseFunction f = PhaseFunction::product(v, {{1.0, std::vector<int>(v, 0)}},
                                               hermite_bump(a, layouts[var]));
      f.id = "h" + index_label(a) + "-c" + std::to_string(var);
      out.push_back(std::move(f));
    }
  if (phi.kind() == PotentialKind::Quadratic) {
    // Bare Hermite polynomials in the natural scaling of each axis.
    for (const auto& a : multi_indices(n, 2)) {
      if (degree(a) == 0) continue;
      std::vector<Univariate> u(n);
      for (int k = 0; k < n; ++k)
        u[k].poly = hermite_in_x(a[k], std::sqrt(2.0 * phi.quadratic_coefficients()[k]), 0.0);
      PhaseFunction f = PhaseFunction::product(v, {{1.0, std::vector<int>(v, 0)}},
                                               XFunction::product(std::move(u)));
      f.id = "He" + index_label(a);
      out.push_back(std::move(f));
    }
  }
  return out;
}

void family_box(const std::vector<PhaseFunction>& family, std::vector<double>& lo,
                std::vector<double>& hi) {
  lo.clear();
  hi.clear();
  for (const auto& f : family) {
    for (const auto& t : f.terms()) {
      if (!t.x.fn) continue;
      const auto& flo = t.x.fn->support_lo();
      const auto& fhi = t.x.fn->support_hi();
      if (lo.empty()) {
        lo = flo;
        hi = fhi;
      }
      for (std::size_t k = 0; k < flo.size(); ++k) {
        lo[k] = std::min(lo[k], flo[k]);
        hi[k] = std::max(hi[k], fhi[k]);
      }
    }
  }
}

std::vector<ResidualReport> run_identity_suite(const Potential& phi, const ModelParams& p) {
  auto family = test_family(phi, p);
  const auto macro = macroscopic_family(phi, p);
  QuadratureOptions opt;
  if (phi.kind() != PotentialKind::Quadratic && phi.kind() != PotentialKind::FlatPeriodic)
    family_box(family, opt.box_lo, opt.box_hi);
  const QuadratureScheme q(phi, p, opt);

  std::vector<ResidualReport> out;
  // Pairwise identities: keep the worst partner per member.
  std::vector<PhaseFunction> af, sf;
  std::vector<double> nf, naf, nsf;
  for (const auto& f : family) {
    af.push_back(apply_A(f, p));
    sf.push_back(apply_S(f, p));
  }
  const auto gff = q.gram(family, family);
  const auto gaf = q.gram(af, family);
  const auto gsf = q.gram(sf, family);
  for (std::size_t i = 0; i < family.size(); ++i) {
    nf.push_back(std::sqrt(std::max(0.0, gff[i][i])));
    naf.push_back(q.norm(af[i]));
    nsf.push_back(q.norm(sf[i]));
  }
  for (std::size_t i = 0; i < family.size(); ++i) {
    ResidualReport worst_a, worst_s;
    double ra = -1, rs = -1;
    for (std::size_t j = 0; j < family.size(); ++j) {
      const double sa = naf[i] * nf[j] + nf[i] * naf[j] + 1e-30;
      const double va = std::abs(gaf[i][j] + gaf[j][i]);
      if (va / sa > ra) {
        ra = va / sa;
        worst_a = make_report(IdentityTag::Antisymmetry, q, family[i].id + "|" + family[j].id, va,
                              sa, std::nullopt);
      }
      const double ss = nsf[i] * nf[j] + nf[i] * nsf[j] + 1e-30;
      const double vs = std::abs(gsf[i][j] - gsf[j][i]);
      if (vs / ss > rs) {
        rs = vs / ss;
        worst_s = make_report(IdentityTag::SSymmetry, q, family[i].id + "|" + family[j].id, vs, ss,
                              std::nullopt);
      }
    }
    out.push_back(worst_a);
    out.push_back(worst_s);
  }
  family.push_back(PhaseFunction::constant(phi.dim(), p.velocity_dim()));
  for (const auto& f : family)
    for (auto tag : {IdentityTag::SNonpositive, IdentityTag::Invariance, IdentityTag::E1Margin})
      out.push_back(check_identity(tag, f, q));
  auto dp = macro;
  dp.push_back(PhaseFunction::constant(phi.dim(), p.velocity_dim()));
  for (const auto& f : dp)
    for (auto tag : {IdentityTag::E4, IdentityTag::PLAP, IdentityTag::SphereGaussian})
      out.push_back(check_identity(tag, f, q));
  if (p.model == ModelKind::Fiber)
    for (int k = 0; k < p.d; ++k) out.push_back(check_sphere_laplacian(p.d, k));
  return out;
}

}  // namespace ergokit
