#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ergokit/error.hpp"

namespace ergokit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class PotentialKind { Quadratic, FlatPeriodic, PairInteraction, UserSupplied };

std::string to_string(PotentialKind kind);

/// Parameters of the pair-interaction-plus-external potential
///   Phi(x) = beta * ( sum_i k/2 |x_i|^2 + sum_{i<j} 4 eps ((s/r_ij)^12 - (s/r_ij)^6) ) + log Z
/// for N particles in R^d. With `ordered` (d = 1 only) the state space is the
/// sector x_1 < x_2 < ... < x_N; particles cannot pass through each other in one
/// dimension, so this is the connected component the dynamics lives on.
struct PairPotentialParams {
  int particles = 2;
  int d = 1;
  double epsilon = 1.0;
  double length = 1.0;       // Lennard-Jones sigma
  double confinement = 1.0;  // harmonic stiffness k of the external field
  double beta = 1.0;
  bool ordered = true;
  bool normalize = true;
};

/// A user-supplied potential. Missing gradients fall back to central differences
/// with step 1e-6 (1 + |x_i|).
struct UserPotentialSpec {
  int dim = 1;
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  std::function<void(std::span<const double>, std::span<double>)> hessian;
  double lower_bound = -kInf;
  std::vector<double> support_radius;   // per axis: e^{-Phi} mass outside below 1e-8
  std::vector<double> reference_point;  // any point with Phi < inf
  std::vector<double> periods;          // empty: not periodic
  bool normalization_attested = false;
  bool gradient_integrability_attested = false;
};

/// The confining / interaction potential Phi. Values may be +inf; the domain is
/// {Phi < inf}. Immutable once built and cheap to copy.
class Potential {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using VectorFn = std::function<void(std::span<const double>, std::span<double>)>;

  /// Phi(x) = sum_i a_i x_i^2 (+ log normalizer when `normalize`).
  static Potential quadratic(std::vector<double> coefficients, bool normalize = true);
  /// Phi = sum_i log r_i on the torus prod [0, r_i): the uniform law.
  static Potential flat_periodic(std::vector<double> periods);
  static Potential pair_interaction(const PairPotentialParams& params);
  static Potential user_supplied(UserPotentialSpec spec);

  int dim() const { return dim_; }
  PotentialKind kind() const { return kind_; }

  double value(std::span<const double> x) const { return value_(x); }
  void gradient(std::span<const double> x, std::span<double> out) const { gradient_(x, out); }
  bool has_hessian() const { return static_cast<bool>(hessian_); }
  /// Row-major dim x dim. Throws when no Hessian is available.
  void hessian(std::span<const double> x, std::span<double> out) const;
  bool in_domain(std::span<const double> x) const { return value(x) < kInf; }

  double lower_bound() const { return lower_bound_; }
  const std::vector<double>& quadratic_coefficients() const { return coefficients_; }
  /// True for the standard Gaussian Phi = |x|^2 / 2 (+ const).
  bool unit_quadratic() const;
  bool periodic() const { return !periods_.empty(); }
  const std::vector<double>& periods() const { return periods_; }
  const std::vector<double>& support_radius() const { return support_radius_; }
  const std::vector<double>& reference_point() const { return reference_point_; }
  bool normalization_attested() const { return normalization_attested_; }
  bool gradient_integrability_attested() const { return gradient_attested_; }
  bool gradient_is_numerical() const { return numerical_gradient_; }
  const std::optional<PairPotentialParams>& pair_params() const { return pair_params_; }
  /// Additive constant folded in by normalization.
  double log_normalizer() const { return offset_; }

  /// Phi + c; used to fold a computed log-normalizer into the potential.
  Potential shifted(double c) const;

 private:
  Potential() = default;

  int dim_ = 0;
  PotentialKind kind_ = PotentialKind::UserSupplied;
  ValueFn value_;
  VectorFn gradient_;
  VectorFn hessian_;
  double lower_bound_ = -kInf;
  double offset_ = 0.0;
  std::vector<double> coefficients_;
  std::vector<double> periods_;
  std::vector<double> support_radius_;
  std::vector<double> reference_point_;
  bool normalization_attested_ = false;
  bool gradient_attested_ = false;
  bool numerical_gradient_ = false;
  std::optional<PairPotentialParams> pair_params_;
};

enum class ModelKind { Langevin, Fiber };

std::string to_string(ModelKind kind);

struct ModelParams {
  ModelKind model = ModelKind::Langevin;
  double alpha = 1.0;  // friction (Langevin)
  double beta = 1.0;   // inverse temperature (Langevin)
  double sigma = 1.0;  // noise amplitude (fiber)
  int d = 1;
  int N = 1;  // particle count (Langevin); fixed to 1 for the fiber model

  int position_dim() const { return model == ModelKind::Langevin ? d * N : d; }
  int velocity_dim() const { return position_dim(); }
};

struct PhasePoint {
  std::vector<double> x;
  std::vector<double> omega;
};

enum class VelocityMarginal { Gaussian, UniformSphere };

/// mu = e^{-Phi} dx (x) nu, nu = N(0, beta^{-1} I) or the normalized surface measure.
class GibbsMeasure {
 public:
  GibbsMeasure(Potential phi, ModelParams params);
  GibbsMeasure(Potential phi, ModelParams params, VelocityMarginal marginal);

  const Potential& potential() const { return phi_; }
  const ModelParams& params() const { return params_; }
  VelocityMarginal velocity_marginal() const { return marginal_; }

 private:
  Potential phi_;
  ModelParams params_;
  VelocityMarginal marginal_;
};

/// Output of validate_model: the checked pair plus what was measured on the way.
struct ValidatedModel {
  ModelParams params;
  Potential potential;
  std::optional<double> normalization_mass;  // int e^{-Phi} dx, dim <= 3
  std::optional<double> gradient_second_moment;  // int |grad Phi|^2 e^{-Phi} dx
};

/// Parameter positivity, dimension consistency, normalization of e^{-Phi} and (Langevin)
/// square integrability of grad Phi. Quadrature for dim <= 3, declared flags otherwise.
ValidatedModel validate_model(const ModelParams& params, const Potential& phi);

/// Checks only the parameter block; throws config errors.
void validate_params(const ModelParams& params);

enum class MomentKind {
  SecondMoment,      // ||omega_i||^2
  FourthDiagonal,    // ||omega_i^2||^2
  MixedSquare,       // ||omega_i omega_j||^2, i != j
  Covariance,        // int omega_i omega_j dnu
};

struct MomentSpec {
  MomentKind kind = MomentKind::SecondMoment;
  int i = 0;
  int j = 0;
};

double gibbs_moments(const GibbsMeasure& measure, const MomentSpec& spec);

/// E_nu[omega^alpha] in closed form for the velocity law of `params`.
double velocity_moment(const ModelParams& params, std::span<const int> exponents);

}  // namespace ergokit
