#include "ergokit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ergokit/quadrature.hpp"

namespace ergokit {

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Quadratic: return "quadratic";
    case PotentialKind::FlatPeriodic: return "flat-periodic";
    case PotentialKind::PairInteraction: return "pair-interaction";
    case PotentialKind::UserSupplied: return "user-supplied";
  }
  return "unknown";
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Langevin ? "langevin" : "fiber";
}

void Potential::hessian(std::span<const double> x, std::span<double> out) const {
  if (!hessian_) throw config_error("potential has no Hessian");
  hessian_(x, out);
}

bool Potential::unit_quadratic() const {
  if (kind_ != PotentialKind::Quadratic) return false;
  return std::all_of(coefficients_.begin(), coefficients_.end(),
                     [](double a) { return a == 0.5; });
}

Potential Potential::shifted(double c) const {
  Potential p = *this;
  auto inner = value_;
  p.value_ = [inner, c](std::span<const double> x) { return inner(x) + c; };
  p.offset_ += c;
  p.lower_bound_ += c;
  return p;
}

Potential Potential::quadratic(std::vector<double> coefficients, bool normalize) {
  if (coefficients.empty()) throw config_error("quadratic potential needs coefficients");
  for (double a : coefficients)
    if (!(a > 0.0)) throw config_error("quadratic coefficients must be positive");
  double offset = 0.0;
  if (normalize)
    for (double a : coefficients) offset += 0.5 * std::log(std::numbers::pi / a);

  Potential p;
  p.dim_ = static_cast<int>(coefficients.size());
  p.kind_ = PotentialKind::Quadratic;
  p.coefficients_ = coefficients;
  p.offset_ = offset;
  p.lower_bound_ = offset;
  p.value_ = [a = coefficients, offset](std::span<const double> x) {
    double v = offset;
    for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * x[i] * x[i];
    return v;
  };
  p.gradient_ = [a = coefficients](std::span<const double> x, std::span<double> g) {
    for (std::size_t i = 0; i < a.size(); ++i) g[i] = 2.0 * a[i] * x[i];
  };
  p.hessian_ = [a = coefficients](std::span<const double>, std::span<double> h) {
    const std::size_t n = a.size();
    std::fill(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(n * n), 0.0);
    for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 2.0 * a[i];
  };
  for (double a : coefficients) p.support_radius_.push_back(6.5 / std::sqrt(2.0 * a));
  p.reference_point_.assign(coefficients.size(), 0.0);
  p.normalization_attested_ = normalize;
  p.gradient_attested_ = true;
  return p;
}

Potential Potential::flat_periodic(std::vector<double> periods) {
  if (periods.empty()) throw config_error("periodic potential needs box lengths");
  double offset = 0.0;
  for (double r : periods) {
    if (!(r > 0.0)) throw config_error("periodic box lengths must be positive");
    offset += std::log(r);
  }
  Potential p;
  p.dim_ = static_cast<int>(periods.size());
  p.kind_ = PotentialKind::FlatPeriodic;
  p.periods_ = periods;
  p.offset_ = offset;
  p.lower_bound_ = offset;
  p.value_ = [offset](std::span<const double>) { return offset; };
  p.gradient_ = [](std::span<const double> x, std::span<double> g) {
    std::fill(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);
  };
  p.hessian_ = [](std::span<const double> x, std::span<double> h) {
    std::fill(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(x.size() * x.size()), 0.0);
  };
  p.support_radius_ = periods;
  for (double r : periods) p.reference_point_.push_back(0.5 * r);
  p.normalization_attested_ = true;
  p.gradient_attested_ = true;
  return p;
}

namespace {

struct PairTerms {
  double u, du, ddu;  // u(r), u'(r), u''(r)
};

PairTerms lennard_jones(double r, double eps, double s) {
  const double sr2 = (s / r) * (s / r);
  const double sr6 = sr2 * sr2 * sr2;
  const double sr12 = sr6 * sr6;
  return {4.0 * eps * (sr12 - sr6), 4.0 * eps * (-12.0 * sr12 + 6.0 * sr6) / r,
          4.0 * eps * (156.0 * sr12 - 42.0 * sr6) / (r * r)};
}

}  // namespace

Potential Potential::pair_interaction(const PairPotentialParams& q) {
  if (q.particles < 1 || q.d < 1) throw config_error("pair potential needs N >= 1 and d >= 1");
  if (!(q.epsilon >= 0.0) || !(q.length > 0.0) || !(q.confinement > 0.0) || !(q.beta > 0.0))
    throw config_error("pair potential parameters must be positive");
  if (q.ordered && q.d != 1) throw config_error("particle ordering applies to d = 1 only");
  const int n = q.particles * q.d;

  Potential p;
  p.dim_ = n;
  p.kind_ = PotentialKind::PairInteraction;
  p.pair_params_ = q;
  p.lower_bound_ = -q.beta * q.epsilon * q.particles * (q.particles - 1) / 2.0;
  p.value_ = [q](std::span<const double> x) {
    const int N = q.particles, d = q.d;
    double v = 0.0;
    for (double xi : x) v += 0.5 * q.confinement * xi * xi;
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          const double dx = x[j * d + a] - x[i * d + a];
          r2 += dx * dx;
        }
        if (q.ordered && x[j] <= x[i]) return kInf;
        if (r2 == 0.0) return kInf;
        v += lennard_jones(std::sqrt(r2), q.epsilon, q.length).u;
      }
    }
    return q.beta * v;
  };
  p.gradient_ = [q](std::span<const double> x, std::span<double> g) {
    const int N = q.particles, d = q.d;
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = q.beta * q.confinement * x[k];
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          const double dx = x[j * d + a] - x[i * d + a];
          r2 += dx * dx;
        }
        const double r = std::sqrt(r2);
        const double du = lennard_jones(r, q.epsilon, q.length).du;
        for (int a = 0; a < d; ++a) {
          const double n_a = (x[j * d + a] - x[i * d + a]) / r;
          g[j * d + a] += q.beta * du * n_a;
          g[i * d + a] -= q.beta * du * n_a;
        }
      }
    }
  };
  p.hessian_ = [q, n](std::span<const double> x, std::span<double> h) {
    const int N = q.particles, d = q.d;
    std::fill(h.begin(), h.begin() + n * n, 0.0);
    for (int k = 0; k < n; ++k) h[k * n + k] = q.beta * q.confinement;
    std::vector<double> nv(d);
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
          nv[a] = x[j * d + a] - x[i * d + a];
          r2 += nv[a] * nv[a];
        }
        const double r = std::sqrt(r2);
        for (int a = 0; a < d; ++a) nv[a] /= r;
        const PairTerms t = lennard_jones(r, q.epsilon, q.length);
        for (int a = 0; a < d; ++a) {
          for (int b = 0; b < d; ++b) {
            const double proj = nv[a] * nv[b];
            const double k = q.beta * (t.ddu * proj + (t.du / r) * ((a == b ? 1.0 : 0.0) - proj));
            h[(i * d + a) * n + (i * d + b)] += k;
            h[(j * d + a) * n + (j * d + b)] += k;
            h[(i * d + a) * n + (j * d + b)] -= k;
            h[(j * d + a) * n + (i * d + b)] -= k;
          }
        }
      }
    }
  };
  const double spacing = std::pow(2.0, 1.0 / 6.0) * q.length;
  const double radius = 0.6 * (q.particles - 1) * spacing + 6.5 / std::sqrt(q.beta * q.confinement);
  p.support_radius_.assign(n, radius);
  p.reference_point_.assign(n, 0.0);
  for (int i = 0; i < q.particles; ++i)
    p.reference_point_[i * q.d] = (i - 0.5 * (q.particles - 1)) * spacing;
  p.gradient_attested_ = true;

  if (q.normalize) {
    if (n > 3) throw config_error("pair potential normalization by quadrature needs dim <= 3");
    const double ref = p.value_(p.reference_point_);
    std::vector<double> lo(n), hi(n);
    for (int k = 0; k < n; ++k) {
      lo[k] = -radius;
      hi[k] = radius;
    }
    auto integrand = [&](std::span<const double> x) {
      const double v = p.value_(x);
      return v == kInf ? 0.0 : std::exp(-(v - ref));
    };
    const auto z = quad::integrate_box(integrand, lo, hi, 1e-9, n == 1 ? 1024 : 256);
    const double log_z = std::log(z.value) - ref;
    p = p.shifted(log_z);
    p.normalization_attested_ = true;
  }
  return p;
}

Potential Potential::user_supplied(UserPotentialSpec spec) {
  if (spec.dim < 1 || !spec.value) throw config_error("user potential needs dim and value");
  Potential p;
  p.dim_ = spec.dim;
  p.kind_ = PotentialKind::UserSupplied;
  p.value_ = spec.value;
  if (spec.gradient) {
    p.gradient_ = spec.gradient;
  } else {
    p.numerical_gradient_ = true;
    p.gradient_ = [f = spec.value](std::span<const double> x, std::span<double> g) {
      std::vector<double> y(x.begin(), x.end());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(x[i]));
        y[i] = x[i] + h;
        const double fp = f(y);
        y[i] = x[i] - h;
        const double fm = f(y);
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
      }
    };
  }
  p.hessian_ = spec.hessian;
  p.lower_bound_ = spec.lower_bound;
  p.periods_ = spec.periods;
  p.support_radius_ = spec.support_radius;
  p.reference_point_ = spec.reference_point;
  if (p.reference_point_.empty()) p.reference_point_.assign(spec.dim, 0.0);
  if (static_cast<int>(p.reference_point_.size()) != spec.dim ||
      (!p.support_radius_.empty() && static_cast<int>(p.support_radius_.size()) != spec.dim))
    throw config_error("user potential: reference point / support radius dimension mismatch");
  p.normalization_attested_ = spec.normalization_attested;
  p.gradient_attested_ = spec.gradient_integrability_attested;
  return p;
}

GibbsMeasure::GibbsMeasure(Potential phi, ModelParams params)
    : GibbsMeasure(std::move(phi), params,
                   params.model == ModelKind::Langevin ? VelocityMarginal::Gaussian
                                                       : VelocityMarginal::UniformSphere) {}

GibbsMeasure::GibbsMeasure(Potential phi, ModelParams params, VelocityMarginal marginal)
    : phi_(std::move(phi)), params_(params), marginal_(marginal) {
  const bool gaussian = marginal == VelocityMarginal::Gaussian;
  if (gaussian != (params.model == ModelKind::Langevin))
    throw config_error("velocity marginal does not match the model (gaussian <-> langevin)");
}

void validate_params(const ModelParams& p) {
  if (p.d < 1) throw config_error("d must be at least 1");
  if (p.model == ModelKind::Langevin) {
    if (!(p.alpha > 0.0)) throw config_error("alpha must be positive");
    if (!(p.beta > 0.0)) throw config_error("beta must be positive");
    if (p.N < 1) throw config_error("N must be at least 1");
  } else {
    if (p.d < 2) throw config_error("fiber requires d >= 2");
    if (!(p.sigma > 0.0)) throw config_error("sigma must be positive");
    if (p.N != 1) throw config_error("fiber model has a single particle (N = 1)");
  }
}

namespace {

void box_of(const Potential& phi, std::vector<double>& lo, std::vector<double>& hi) {
  const int n = phi.dim();
  lo.resize(n);
  hi.resize(n);
  for (int k = 0; k < n; ++k) {
    if (phi.periodic()) {
      lo[k] = 0.0;
      hi[k] = phi.periods()[k];
    } else {
      lo[k] = -phi.support_radius()[k];
      hi[k] = phi.support_radius()[k];
    }
  }
}

}  // namespace

ValidatedModel validate_model(const ModelParams& params, const Potential& phi) {
  validate_params(params);
  if (phi.dim() != params.position_dim())
    throw config_error("potential dimension " + std::to_string(phi.dim()) +
                       " does not match model position dimension " +
                       std::to_string(params.position_dim()));
  if (!phi.in_domain(phi.reference_point()))
    throw config_error("potential reference point lies outside {Phi < inf}");

  ValidatedModel out{params, phi, std::nullopt, std::nullopt};
  const int n = phi.dim();
  const bool quadrature = n <= 3 && (!phi.support_radius().empty() || phi.periodic());
  if (quadrature) {
    std::vector<double> lo, hi;
    box_of(phi, lo, hi);
    const auto mass = quad::integrate_box(
        [&](std::span<const double> x) {
          const double v = phi.value(x);
          return v == kInf ? 0.0 : std::exp(-v);
        },
        lo, hi, 1e-9);
    out.normalization_mass = mass.value;
    if (std::abs(mass.value - 1.0) > 1e-4)
      throw config_error("normalization failure: int e^{-Phi} dx = " + std::to_string(mass.value));
    if (params.model == ModelKind::Langevin) {
      std::vector<double> g(n);
      const auto gm = quad::integrate_box(
          [&](std::span<const double> x) {
            const double v = phi.value(x);
            if (v == kInf) return 0.0;
            phi.gradient(x, g);
            double s = 0;
            for (double c : g) s += c * c;
            return s * std::exp(-v);
          },
          lo, hi, 1e-7);
      if (!std::isfinite(gm.value))
        throw config_error("gradient integrability failure: grad Phi not in L2(e^{-Phi} dx)");
      out.gradient_second_moment = gm.value;
    }
  } else {
    if (!phi.normalization_attested())
      throw config_error("normalization failure: dim > 3 requires an attested normalization");
    if (params.model == ModelKind::Langevin && !phi.gradient_integrability_attested())
      throw config_error("gradient integrability failure: dim > 3 requires attestation");
  }
  return out;
}

namespace {

double double_factorial_odd(int k) {  // (k - 1)!! for even k
  double r = 1.0;
  for (int j = k - 1; j > 1; j -= 2) r *= j;
  return r;
}

}  // namespace

double velocity_moment(const ModelParams& params, std::span<const int> exponents) {
  if (static_cast<int>(exponents.size()) != params.velocity_dim())
    throw config_error("velocity moment: exponent vector has the wrong dimension");
  int total = 0;
  double num = 1.0;
  for (int e : exponents) {
    if (e < 0) throw config_error("velocity moment: negative exponent");
    if (e % 2 == 1) return 0.0;
    num *= double_factorial_odd(e);
    total += e;
  }
  if (params.model == ModelKind::Langevin) return num * std::pow(params.beta, -0.5 * total);
  double den = 1.0;
  for (int k = 0; k < total / 2; ++k) den *= params.d + 2.0 * k;
  return num / den;
}

double gibbs_moments(const GibbsMeasure& measure, const MomentSpec& spec) {
  const ModelParams& p = measure.params();
  const int n = p.velocity_dim();
  if (spec.i < 0 || spec.i >= n || spec.j < 0 || spec.j >= n)
    throw config_error("moment spec index out of range");
  std::vector<int> e(n, 0);
  switch (spec.kind) {
    case MomentKind::SecondMoment:
      e[spec.i] = 2;
      break;
    case MomentKind::FourthDiagonal:
      e[spec.i] = 4;
      break;
    case MomentKind::MixedSquare:
      if (spec.i == spec.j) throw config_error("unsupported moment spec: mixed square needs i != j");
      e[spec.i] = 2;
      e[spec.j] = 2;
      break;
    case MomentKind::Covariance:
      e[spec.i] += 1;
      e[spec.j] += 1;
      break;
    default:
      throw config_error("unsupported moment spec");
  }
  return velocity_moment(p, e);
}

}  // namespace ergokit
