#pragma once

#include <array>
#include <optional>
#include <string>

#include "json.hpp"

namespace ergokit {

enum class Provenance { Analytic, Estimated };

std::string to_string(Provenance p);
inline Provenance combine(Provenance a, Provenance b) {
  return a == Provenance::Estimated || b == Provenance::Estimated ? Provenance::Estimated
                                                                  : Provenance::Analytic;
}

struct TaggedValue {
  double value = 0.0;
  Provenance provenance = Provenance::Analytic;
};

/// Constants of the four abstract conditions.
struct AbstractConstants {
  TaggedValue lambda_m;  // microscopic coercivity
  TaggedValue lambda_M;  // macroscopic coercivity
  TaggedValue c1, c2;    // relative bound of LAP by G
  std::optional<TaggedValue> c3;  // algebraic relation

  Provenance provenance() const;
};

enum class RateVariant { GenericE3, GenericE4, Langevin, Fiber };

std::string to_string(RateVariant v);

struct RateConstants {
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  RateVariant variant = RateVariant::GenericE4;
  /// True when the sqrt(2) prefactor of the generic theorem is already inside the kappas.
  bool sqrt2_absorbed = false;
  Provenance provenance = Provenance::Analytic;
};

/// t -> c1 / t + c2 / sqrt(t), fully resolved (no convention flag downstream).
struct BoundCurve {
  double c1 = 0.0;
  double c2 = 0.0;
  double operator()(double t) const;
};

/// Bound on the L2 ergodic error for an observable with ||f - E f|| = fluctuation.
BoundCurve bound_curve(const RateConstants& r, double fluctuation = 1.0);

RateConstants generic_rates(const AbstractConstants& a, bool use_e4);

struct ApplicationRates {
  AbstractConstants abstract;
  RateConstants specialized;   // application theorem, sqrt(2) absorbed
  RateConstants generic;       // generic theorem with the application's constants
  double A = 0.0, B = 0.0;     // the A(Phi), B(Phi) combinations of the Kato constants
  double cross_check = 0.0;    // max relative gap between specialized and sqrt(2) x generic
};

ApplicationRates langevin_rates(double alpha, double beta, double gap, std::array<double, 4> kato,
                                Provenance gap_provenance = Provenance::Analytic,
                                Provenance kato_provenance = Provenance::Analytic);

ApplicationRates fiber_rates(double sigma, int d, double gap, std::array<double, 2> kato,
                             Provenance gap_provenance = Provenance::Analytic,
                             Provenance kato_provenance = Provenance::Analytic);

/// {model, inputs, Lambda_m, Lambda_M, c1, c2, c3, kappa1, kappa2, C1, C2, provenance}.
nlohmann::ordered_json to_json(const ApplicationRates& r, const std::string& model,
                               const nlohmann::ordered_json& inputs);

}  // namespace ergokit
