#include "ergokit/rates.hpp"

#include <algorithm>
#include <cmath>

#include "ergokit/error.hpp"

namespace ergokit {

std::string to_string(Provenance p) { return p == Provenance::Analytic ? "analytic" : "estimated"; }

std::string to_string(RateVariant v) {
  switch (v) {
    case RateVariant::GenericE3: return "generic-E3";
    case RateVariant::GenericE4: return "generic-E4";
    case RateVariant::Langevin: return "langevin";
    case RateVariant::Fiber: return "fiber";
  }
  return "unknown";
}

Provenance AbstractConstants::provenance() const {
  Provenance p = combine(combine(lambda_m.provenance, lambda_M.provenance),
                         combine(c1.provenance, c2.provenance));
  return c3 ? combine(p, c3->provenance) : p;
}

double BoundCurve::operator()(double t) const { return c1 / t + c2 / std::sqrt(t); }

BoundCurve bound_curve(const RateConstants& r, double fluctuation) {
  const double pre = r.sqrt2_absorbed ? 1.0 : std::sqrt(2.0);
  return {pre * r.kappa1 * fluctuation, pre * r.kappa2 * fluctuation};
}

RateConstants generic_rates(const AbstractConstants& a, bool use_e4) {
  const double lm = a.lambda_m.value, lM = a.lambda_M.value;
  const double c1 = a.c1.value, c2 = a.c2.value;
  if (!(lm > 0.0) || !(lM > 0.0)) throw config_error("Lambda_m and Lambda_M must be positive");
  if (c1 < 0.0 || c2 < 0.0) throw config_error("c1 and c2 must be nonnegative");
  if (use_e4 && !a.c3) throw config_error("missing c3 for the algebraic-relation variant");
  if (use_e4 && a.c3->value < 0.0) throw config_error("c3 must be nonnegative");

  RateConstants r;
  r.kappa1 = std::sqrt(2.0) / std::sqrt(lM);
  r.kappa2 = (c1 + 1.0) / std::sqrt(lm) + c2 / (std::sqrt(lm) * lM);
  if (use_e4) {
    r.kappa2 += std::sqrt(a.c3->value) / std::sqrt(lM);
    r.variant = RateVariant::GenericE4;
  } else {
    r.kappa2 += std::sqrt(c1 / std::sqrt(lM) + c2 / (lM * std::sqrt(lM)));
    r.variant = RateVariant::GenericE3;
  }
  r.sqrt2_absorbed = false;
  AbstractConstants tmp = a;
  if (!use_e4) tmp.c3.reset();
  r.provenance = tmp.provenance();
  return r;
}

namespace {

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

void finish(ApplicationRates& out) {
  out.generic = generic_rates(out.abstract, true);
  out.specialized.provenance = out.abstract.provenance();
  out.specialized.sqrt2_absorbed = true;
  const double s2 = std::sqrt(2.0);
  out.cross_check = std::max(relative_gap(out.specialized.kappa1, s2 * out.generic.kappa1),
                             relative_gap(out.specialized.kappa2, s2 * out.generic.kappa2));
}

}  // namespace

ApplicationRates langevin_rates(double alpha, double beta, double gap, std::array<double, 4> k,
                                Provenance gap_prov, Provenance kato_prov) {
  if (!(alpha > 0.0)) throw config_error("alpha must be positive");
  if (!(beta > 0.0)) throw config_error("beta must be positive");
  if (!(gap > 0.0)) throw config_error("gap must be positive");
  for (double v : k)
    if (!(v >= 0.0)) throw config_error("Kato constants must be nonnegative");
  const Provenance both = combine(gap_prov, kato_prov);

  ApplicationRates out;
  out.abstract.lambda_m = {alpha, Provenance::Analytic};
  out.abstract.lambda_M = {gap / beta, gap_prov};
  out.abstract.c1 = {alpha * std::sqrt(beta) / std::sqrt(gap) + std::sqrt(3.0) * k[0] + k[1], both};
  out.abstract.c2 = {(std::sqrt(3.0) / beta) * k[2] + k[3] / beta, kato_prov};
  out.abstract.c3 = TaggedValue{alpha, Provenance::Analytic};

  out.A = std::sqrt(6.0) * k[0] + std::sqrt(2.0) * (k[1] + 1.0);
  out.B = std::sqrt(6.0) * k[2] + std::sqrt(2.0) * k[3];
  out.specialized.variant = RateVariant::Langevin;
  out.specialized.kappa1 = std::sqrt(beta) * 2.0 / std::sqrt(gap);
  out.specialized.kappa2 = std::sqrt(alpha) * std::sqrt(beta) * 2.0 * std::sqrt(2.0) / std::sqrt(gap) +
                           (out.A + out.B / gap) / std::sqrt(alpha);
  finish(out);
  return out;
}

ApplicationRates fiber_rates(double sigma, int d, double gap, std::array<double, 2> k,
                             Provenance gap_prov, Provenance kato_prov) {
  if (d < 2) throw config_error("fiber requires d >= 2");
  if (!(sigma > 0.0)) throw config_error("sigma must be positive");
  if (!(gap > 0.0)) throw config_error("gap must be positive");
  for (double v : k)
    if (!(v >= 0.0)) throw config_error("Kato constants must be nonnegative");
  const Provenance both = combine(gap_prov, kato_prov);
  const double dd = d;
  const double lm = 0.5 * sigma * sigma * (dd - 1.0);

  ApplicationRates out;
  out.abstract.lambda_m = {lm, Provenance::Analytic};
  out.abstract.lambda_M = {gap / dd, gap_prov};
  out.abstract.c1 = {std::sqrt(dd) * (dd - 1.0) * sigma * sigma / (2.0 * std::sqrt(gap)) + dd * k[0],
                     both};
  out.abstract.c2 = {k[1], kato_prov};
  out.abstract.c3 = TaggedValue{lm, Provenance::Analytic};

  out.A = 2.0 / std::sqrt(dd - 1.0) * (dd * k[0] + 1.0);
  out.B = 2.0 * dd * k[1] / std::sqrt(dd - 1.0);
  out.specialized.variant = RateVariant::Fiber;
  out.specialized.kappa1 = 2.0 * std::sqrt(dd) / std::sqrt(gap);
  out.specialized.kappa2 = sigma * 2.0 * std::sqrt(dd * (dd - 1.0)) / std::sqrt(gap) +
                           (out.A + out.B / gap) / sigma;
  finish(out);
  return out;
}

nlohmann::ordered_json to_json(const ApplicationRates& r, const std::string& model,
                               const nlohmann::ordered_json& inputs) {
  auto tagged = [](const TaggedValue& v) {
    return nlohmann::ordered_json{{"value", v.value}, {"provenance", to_string(v.provenance)}};
  };
  const BoundCurve curve = bound_curve(r.specialized);
  nlohmann::ordered_json j;
  j["model"] = model;
  j["inputs"] = inputs;
  j["Lambda_m"] = tagged(r.abstract.lambda_m);
  j["Lambda_M"] = tagged(r.abstract.lambda_M);
  j["c1"] = tagged(r.abstract.c1);
  j["c2"] = tagged(r.abstract.c2);
  j["c3"] = r.abstract.c3 ? tagged(*r.abstract.c3) : nlohmann::ordered_json();
  j["A"] = r.A;
  j["B"] = r.B;
  j["kappa1"] = r.specialized.kappa1;
  j["kappa2"] = r.specialized.kappa2;
  j["C1"] = curve.c1;
  j["C2"] = curve.c2;
  j["variant"] = to_string(r.specialized.variant);
  j["sqrt2_absorbed"] = r.specialized.sqrt2_absorbed;
  j["generic"] = {{"variant", to_string(r.generic.variant)},
                  {"kappa1", r.generic.kappa1},
                  {"kappa2", r.generic.kappa2},
                  {"sqrt2_absorbed", r.generic.sqrt2_absorbed}};
  j["cross_check_relative"] = r.cross_check;
  j["provenance"] = to_string(r.specialized.provenance);
  return j;
}

}  // namespace ergokit
