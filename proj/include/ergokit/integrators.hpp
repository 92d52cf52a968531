#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ergokit/core.hpp"
#include "ergokit/rng.hpp"

namespace ergokit {

enum class Scheme {
  EulerMaruyama,  // Langevin cross-check
  BAOAB,          // Langevin default
  TangentHeun,    // fiber default (Stratonovich)
  ItoProjected,   // fiber: explicit Ito drift -(1/2) sigma^2 (d - 1) omega, then renormalize
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

struct IntegratorConfig {
  Scheme scheme = Scheme::BAOAB;
  double dt = 1e-3;
  int max_refinements = 20;
  std::optional<double> force_cap;  // on |grad Phi|
  std::uint64_t seed = 1;
};

struct StepOutcome {
  bool valid = true;
  int refinement = 0;          // deepest substep level used
  std::uint64_t substeps = 1;  // number of accepted substeps
};

/// Pure state transitions for both models. A step that leaves {Phi < inf} or meets a force
/// above the cap is redone as 2^k substeps with fresh keyed noise, k <= max_refinements.
class Integrator {
 public:
  Integrator(Potential phi, ModelParams params, IntegratorConfig cfg);

  const IntegratorConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }
  const Potential& potential() const { return phi_; }

  /// Advances s by one step of size dt; noise keyed by (seed, path, step).
  StepOutcome step(PhasePoint& s, std::uint32_t path, std::uint64_t step) const;

  /// One attempt at step size h without refinement; false if the safeguard trips.
  /// `z` holds the standard normals for the attempt (velocity dimension entries).
  bool attempt(PhasePoint& s, double h, const std::vector<double>& z) const;

 private:
  bool advance(PhasePoint& s, double h, std::uint32_t path, std::uint64_t step, int level,
               std::uint64_t node, StepOutcome& out) const;
  bool force_ok(std::span<const double> x, std::span<double> grad) const;
  bool langevin_baoab(PhasePoint& s, double h, const std::vector<double>& z) const;
  bool langevin_em(PhasePoint& s, double h, const std::vector<double>& z) const;
  bool fiber_heun(PhasePoint& s, double h, const std::vector<double>& z) const;
  bool fiber_ito(PhasePoint& s, double h, const std::vector<double>& z) const;

  Potential phi_;
  ModelParams params_;
  IntegratorConfig cfg_;
  NoiseStream noise_;
  int n_ = 0;
};

StepOutcome langevin_step(PhasePoint& s, const Integrator& integrator, std::uint32_t path,
                          std::uint64_t step);
StepOutcome fiber_step(PhasePoint& s, const Integrator& integrator, std::uint32_t path,
                       std::uint64_t step);

/// Little-endian record: path id, t, x..., omega... as 64-bit floats.
void write_trajectory_record(std::ostream& os, std::uint32_t path, double t, const PhasePoint& s);

}  // namespace ergokit
