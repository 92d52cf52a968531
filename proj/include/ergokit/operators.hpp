#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "ergokit/core.hpp"
#include "ergokit/quadrature.hpp"

namespace ergokit {

/// p(x) * b((x - c) / r) with b(s) = exp(1 - 1/(1 - s^2)) on |s| < 1, or the bare polynomial
/// when r is infinite. Derivatives up to order 4 are exact (truncated Taylor arithmetic).
struct Univariate {
  std::vector<double> poly{1.0};  // coefficients of 1, x, x^2, ...
  double center = 0.0;
  double radius = kInf;

  static constexpr int kMaxOrder = 4;

  bool compact() const { return radius < kInf; }
  double derivative(int order, double x) const;
};

/// A function of the position variable with a derivative oracle.
class XFunction {
 public:
  /// prod_k u_k(x_k), analytic derivatives up to order 4.
  static std::shared_ptr<const XFunction> product(std::vector<Univariate> factors);
  /// Arbitrary callable; central differences up to order 2. `lo`/`hi` bound the support.
  static std::shared_ptr<const XFunction> numerical(
      int dim, std::function<double(std::span<const double>)> f, std::vector<double> lo,
      std::vector<double> hi, double step = 1e-4);

  int dim() const { return dim_; }
  int max_order() const { return max_order_; }
  bool is_product() const { return !factors_.empty(); }
  const std::vector<Univariate>& factors() const { return factors_; }
  bool compact() const { return compact_; }
  const std::vector<double>& support_lo() const { return lo_; }
  const std::vector<double>& support_hi() const { return hi_; }

  /// d^alpha f(x); alpha holds one order per axis.
  double derivative(std::span<const int> alpha, std::span<const double> x) const;

 private:
  int dim_ = 0;
  int max_order_ = 0;
  bool compact_ = false;
  std::vector<Univariate> factors_;
  std::function<double(std::span<const double>)> fn_;
  double step_ = 1e-4;
  std::vector<double> lo_, hi_;
};

/// x-dependent factor of a term: d^alpha h(x) times a product of potential derivatives.
/// Each potential factor lists the differentiation axes (length 1 or 2, sorted).
struct XTerm {
  std::shared_ptr<const XFunction> fn;  // null: h = 1
  std::vector<int> alpha;
  std::vector<std::vector<int>> phi;

  auto key() const { return std::tie(fn, alpha, phi); }
  bool operator<(const XTerm& o) const { return key() < o.key(); }
  bool operator==(const XTerm& o) const { return key() == o.key(); }
};

struct Term {
  double coef = 0.0;
  std::vector<int> mono;  // exponents of omega
  XTerm x;
};

/// Finite sum of coef * omega^mono * XTerm. On the sphere each monomial stands for its
/// degree-0 homogeneous extension. This closure under S, A, P and G is what lets
/// compositions like SAP be formed exactly.
class PhaseFunction {
 public:
  PhaseFunction() = default;
  PhaseFunction(int xdim, int vdim) : xdim_(xdim), vdim_(vdim) {}

  static PhaseFunction constant(int xdim, int vdim, double c = 1.0);
  /// sum_k c_k omega^{e_k} times h(x).
  static PhaseFunction product(int vdim,
                               const std::vector<std::pair<double, std::vector<int>>>& velocity,
                               std::shared_ptr<const XFunction> h);
  /// Coordinate observables: x_i and omega_i.
  static PhaseFunction position_coordinate(int xdim, int vdim, int i);
  static PhaseFunction velocity_coordinate(int xdim, int vdim, int i);

  int xdim() const { return xdim_; }
  int vdim() const { return vdim_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int velocity_degree() const;
  bool velocity_independent() const { return velocity_degree() == 0; }
  /// Largest derivative order requested from any XFunction.
  int derivative_order() const;

  void add_term(Term t);
  PhaseFunction& operator+=(const PhaseFunction& o);
  PhaseFunction& operator*=(double s);
  friend PhaseFunction operator+(PhaseFunction a, const PhaseFunction& b) { return a += b; }
  friend PhaseFunction operator-(PhaseFunction a, const PhaseFunction& b) {
    PhaseFunction nb = b;
    nb *= -1.0;
    return a += nb;
  }
  friend PhaseFunction operator*(double s, PhaseFunction a) { return a *= s; }

  double evaluate(const Potential& phi, std::span<const double> x,
                  std::span<const double> omega) const;

  std::string id;

 private:
  int xdim_ = 0, vdim_ = 0;
  std::vector<Term> terms_;  // sorted by (mono, x), no duplicate keys, no zero coefficients
};

PhaseFunction derivative_x(const PhaseFunction& f, int i);
PhaseFunction apply_S(const PhaseFunction& f, const ModelParams& p);
PhaseFunction apply_A(const PhaseFunction& f, const ModelParams& p);
PhaseFunction apply_L(const PhaseFunction& f, const ModelParams& p);
PhaseFunction project_P(const PhaseFunction& f, const ModelParams& p);
/// G = (1/beta) G_Phi (Langevin) or (1/d) G_Phi (fiber); f must be velocity independent.
PhaseFunction apply_G(const PhaseFunction& f, const ModelParams& p);
/// G_Phi f = Delta f - grad Phi . grad f, for velocity-independent f.
PhaseFunction apply_G_phi(const PhaseFunction& f);
/// f * d_i Phi.
PhaseFunction times_phi_derivative(const PhaseFunction& f, int i);
/// Delta_S on the sphere, or Delta_omega for the flat velocity space.
PhaseFunction apply_velocity_laplacian(const PhaseFunction& f, const ModelParams& p);

struct QuadratureOptions {
  int axis_panels = 128;    // separable potentials: composite panels per axis
  int tensor_panels = 0;    // generic potentials: 0 picks 256 / 48 / 12 by dimension
  int order = 8;            // Gauss-Legendre points per panel
  int sphere_degree = 9;    // polynomial exactness of the sphere rule (d <= 4)
  int gauss_points = 6;     // Gauss-Hermite points per velocity axis
  int monte_carlo_points = 20000;
  std::uint64_t seed = 20240611;
  /// Bounding box for generic potentials; empty uses the potential's support box.
  std::vector<double> box_lo, box_hi;
};

/// x-rule with weight e^{-Phi} on a truncated box plus a velocity rule. Quadratic and flat
/// periodic potentials are integrated axis by axis; other potentials use a tensor rule.
class QuadratureScheme {
 public:
  QuadratureScheme(Potential phi, ModelParams params, QuadratureOptions opt = {});

  const Potential& potential() const { return phi_; }
  const ModelParams& params() const { return params_; }
  const quad::PointRule& velocity_rule() const { return vrule_; }
  bool separable() const { return separable_; }
  /// int e^{-Phi} dx over the truncated box.
  double x_mass() const { return mass_; }
  const std::vector<double>& box_lo() const { return lo_; }
  const std::vector<double>& box_hi() const { return hi_; }

  double inner_product(const PhaseFunction& f, const PhaseFunction& g) const;
  double norm(const PhaseFunction& f) const;
  double mean(const PhaseFunction& f) const;
  /// All pairwise products; the x-evaluation cache is shared across the batch.
  std::vector<std::vector<double>> gram(std::span<const PhaseFunction> lhs,
                                        std::span<const PhaseFunction> rhs) const;
  /// Velocity average of an arbitrary callable at fixed x, by the velocity rule.
  double velocity_average(const std::function<double(std::span<const double>)>& g) const;

 private:
  struct Cache;
  double pair_integral(const XTerm& a, const XTerm& b, Cache& cache) const;
  double pair_integral_uncached(const XTerm& a, const XTerm& b, Cache& cache) const;
  const std::vector<double>& axis_values(const XTerm& t, int axis, Cache& cache) const;
  const std::vector<double>& node_values(const XTerm& t, Cache& cache) const;
  void check_support(const PhaseFunction& f) const;

  Potential phi_;
  ModelParams params_;
  QuadratureOptions opt_;
  quad::PointRule vrule_;
  bool separable_ = false;
  double mass_ = 0.0;
  std::vector<double> lo_, hi_;
  double global_weight_ = 1.0;
  std::vector<quad::Rule1D> axes_;  // separable: weights include the axis factor of e^{-Phi};
                                    // generic: the factors of the tensor rule
  quad::PointRule xrule_;           // generic: weights include e^{-Phi}
  std::vector<double> grad_, hess_;
};

enum class IdentityTag {
  Antisymmetry,
  SSymmetry,
  SNonpositive,
  Invariance,
  E1Margin,
  E4,
  PLAP,
  SphereGaussian,
  SphereLaplacian,
};

std::string to_string(IdentityTag tag);
IdentityTag identity_from_string(const std::string& name);

struct ResidualReport {
  IdentityTag identity{};
  std::string model;
  std::string function_id;
  double residual = 0.0;  // absolute value of the measured quantity
  double scale = 0.0;     // normalization for the relative test
  double tolerance = 0.0;
  bool pass = false;
};

/// Default relative tolerance for each identity.
double default_tolerance(IdentityTag tag);

/// Single-function identities. Pairwise identities (antisymmetry, S-symmetry) use f as both
/// arguments; use check_pair for distinct pairs.
ResidualReport check_identity(IdentityTag tag, const PhaseFunction& f, const QuadratureScheme& q,
                              std::optional<double> tolerance = std::nullopt);
ResidualReport check_pair(IdentityTag tag, const PhaseFunction& f, const PhaseFunction& g,
                          const QuadratureScheme& q,
                          std::optional<double> tolerance = std::nullopt);

/// Laplace-Beltrami of omega_k by a fourth-order finite-difference Laplacian of the degree-0
/// extension, compared with -(d - 1) omega_k at the sphere rule nodes.
ResidualReport check_sphere_laplacian(int d, int k, std::optional<double> tolerance = std::nullopt);

/// The bundled family: Hermite polynomials in sqrt(beta) omega (Langevin) or low-degree
/// spherical harmonics (fiber) times Hermite-times-bump functions of x. 20 to 50 members.
std::vector<PhaseFunction> test_family(const Potential& phi, const ModelParams& p);
/// Members with f = Pf.
std::vector<PhaseFunction> macroscopic_family(const Potential& phi, const ModelParams& p);
/// Velocity-independent functions for the Kato estimates: Hermite-times-bump functions of x,
/// plus bare Hermite polynomials for quadratic potentials.
std::vector<PhaseFunction> kato_family(const Potential& phi, const ModelParams& p);
/// Bounding box of the family's supports, padded.
void family_box(const std::vector<PhaseFunction>& family, std::vector<double>& lo,
                std::vector<double>& hi);

/// All family checks, as run by the identities command.
std::vector<ResidualReport> run_identity_suite(const Potential& phi, const ModelParams& p);

}  // namespace ergokit
