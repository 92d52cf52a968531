#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ergokit/core.hpp"
#include "ergokit/integrators.hpp"
#include "ergokit/operators.hpp"
#include "json.hpp"

namespace ergokit {

enum class SamplerKind { ExactGaussian, Metropolis };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::ExactGaussian;
  int burn_in = 2000;
  double proposal_scale = 0.5;
  int thinning = 10;  // steps between successive draws of one chain
  int draws_per_chain = 1;
  /// Multiplies every sampled velocity (Langevin only). 1 is the exact law; anything else is a
  /// deliberately perturbed fixture for the invariance check.
  double velocity_scale = 1.0;
};

struct SampleDiagnostics {
  double acceptance = 1.0;
  double proposal_scale = 0.0;
  bool moments_checked = false;
  double max_moment_z = 0.0;  // largest |sample - exact| / SE over position moments
};

/// First and second moments of each position coordinate under e^{-Phi} dx, when computable
/// (closed form for quadratic and flat periodic potentials, box quadrature for dim <= 3).
struct PositionMoments {
  std::vector<double> mean;
  std::vector<double> second;
};
std::optional<PositionMoments> position_moments(const Potential& phi);

std::vector<PhasePoint> sample_initial(const GibbsMeasure& measure, std::size_t n,
                                       const SamplerSpec& spec, std::uint64_t seed,
                                       SampleDiagnostics* diagnostics = nullptr);

/// An observable f with its generator image Lf. Coordinate observables have closed forms
/// for everything; general ones carry a PhaseFunction and use quadrature.
struct Observable {
  enum class Kind { Constant, Position, Velocity, General };
  Kind kind = Kind::Constant;
  int index = 0;
  double value = 1.0;  // Constant
  std::optional<PhaseFunction> symbolic;
  std::string name;

  static Observable constant(double c);
  static Observable position(int i);
  static Observable velocity(int i);
  static Observable general(PhaseFunction f, std::string name);
  static Observable parse(const std::string& name);  // "1", "x1", "omega1", ...
};

/// Observable bound to a model: fast evaluation of f and Lf plus the scalars the checks need.
class BoundObservable {
 public:
  BoundObservable(Observable obs, const Potential& phi, const ModelParams& p,
                  std::optional<double> known_mean = std::nullopt);

  const Observable& observable() const { return obs_; }
  double f(const PhasePoint& s) const;
  double Lf(const PhasePoint& s) const;
  bool has_generator() const { return has_L_; }

  std::optional<double> mean() const { return mean_; }
  std::string mean_source() const { return mean_source_; }
  void set_mean(double m, std::string source);
  /// ||f - E f||_{L2(mu)}.
  std::optional<double> fluctuation() const { return fluctuation_; }
  /// (Sf, f)_H.
  std::optional<double> dissipation() const { return dissipation_; }
  /// Pf = 0: velocity odd, so the microscopic bound applies.
  bool microscopic() const { return microscopic_; }
  double norm_squared() const { return norm2_; }

 private:
  Observable obs_;
  Potential phi_;
  ModelParams p_;
  bool has_L_ = false;
  bool microscopic_ = false;
  std::optional<double> mean_, fluctuation_, dissipation_;
  std::string mean_source_;
  double norm2_ = 0.0;
  std::optional<PhaseFunction> Lsym_;
};

struct EnsembleConfig {
  std::size_t paths = 1000;
  double horizon = 10.0;
  std::vector<double> checkpoints;  // strictly increasing, <= horizon
  SamplerSpec sampler;
  IntegratorConfig integrator;
  double invalid_budget = 1e-3;  // fraction of paths
};

/// Per-observable statistics at each checkpoint.
struct ObservableSeries {
  std::string name;
  std::vector<double> rms_error, rms_error_se;        // e_k and its SE
  std::vector<double> mean_square, mean_square_se;    // E[(A_k)^2] (uncentred)
  std::vector<double> qv_simulated, qv_se;             // E[M_t^2]
  std::vector<double> final_mean;                      // ensemble mean of f(X_t)
};

struct MomentCheck {
  double t = 0.0;
  std::string quantity;
  double simulated = 0.0;
  double expected = 0.0;
  double se = 0.0;
  double z = 0.0;
  bool pass = true;
};

struct EnsembleRun {
  std::vector<double> times;
  std::size_t paths = 0;
  std::size_t invalid_paths = 0;
  std::uint64_t refined_steps = 0;
  SampleDiagnostics sampler;
  std::vector<ObservableSeries> series;
  /// Per checkpoint (t = 0 first, then each checkpoint): sums for the moment checks.
  std::vector<MomentCheck> invariance;
};

EnsembleRun run_ensemble(const EnsembleConfig& cfg, const GibbsMeasure& measure,
                         std::vector<BoundObservable>& observables);

struct QVReport {
  std::vector<double> times, simulated, se, target, deviation;
  std::vector<bool> pass;
  bool all_pass = true;
};

/// E[M_t^2] against -2 t (Sf, f)_H; relative deviation <= max(5%, 3 SE) at t >= 1.
QVReport qv_check(const EnsembleRun& run, std::size_t series, const BoundObservable& f);

struct BoundReport {
  std::vector<double> times, value, se, bound;
  std::vector<bool> pass;
  bool all_pass = true;
};

/// Microscopic bound E[(A_t)^2] <= 2 ||f||^2 / (t Lambda_m) for Pf = 0 observables.
BoundReport microscopic_check(const EnsembleRun& run, std::size_t series, const BoundObservable& f,
                              const ModelParams& p);

/// e_k <= (C1 / t + C2 / sqrt t) + 3 SE.
BoundReport bound_check(const EnsembleRun& run, std::size_t series, double C1, double C2);

struct InvarianceReport {
  std::vector<MomentCheck> checks;
  bool all_pass = true;
  std::vector<double> flagged_times;
};
InvarianceReport invariance_check(const EnsembleRun& run);

/// E_mu f by a single long path of length `horizon` (tagged "long-path").
double long_path_mean(const GibbsMeasure& measure, const BoundObservable& f,
                      const IntegratorConfig& icfg, double horizon, std::uint64_t seed);

nlohmann::ordered_json to_json(const InvarianceReport& r);

}  // namespace ergokit
