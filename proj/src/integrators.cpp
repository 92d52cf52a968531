#include "ergokit/integrators.hpp"

#include <cmath>
#include <cstring>
#include <ostream>

#include "ergokit/error.hpp"

namespace ergokit {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::EulerMaruyama: return "euler-maruyama";
    case Scheme::BAOAB: return "baoab";
    case Scheme::TangentHeun: return "tangent-heun";
    case Scheme::ItoProjected: return "ito-projected";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "euler-maruyama") return Scheme::EulerMaruyama;
  if (name == "baoab") return Scheme::BAOAB;
  if (name == "tangent-heun") return Scheme::TangentHeun;
  if (name == "ito-projected") return Scheme::ItoProjected;
  throw config_error("unknown integrator scheme: " + name);
}

Integrator::Integrator(Potential phi, ModelParams params, IntegratorConfig cfg)
    : phi_(std::move(phi)), params_(params), cfg_(cfg), noise_(cfg.seed), n_(params.position_dim()) {
  validate_params(params_);
  if (!(cfg_.dt > 0.0)) throw config_error("dt must be positive");
  if (cfg_.max_refinements < 0 || cfg_.max_refinements > 20)
    throw config_error("max refinements must lie in [0, 20]");
  if (phi_.dim() != n_) throw config_error("potential dimension does not match the model");
  const bool langevin = params_.model == ModelKind::Langevin;
  const bool langevin_scheme = cfg_.scheme == Scheme::BAOAB || cfg_.scheme == Scheme::EulerMaruyama;
  if (langevin != langevin_scheme)
    throw config_error("scheme " + to_string(cfg_.scheme) + " does not apply to the " +
                       to_string(params_.model) + " model");
}

bool Integrator::force_ok(std::span<const double> x, std::span<double> grad) const {
  phi_.gradient(x, grad);
  double g2 = 0.0;
  for (double g : grad) g2 += g * g;
  if (!std::isfinite(g2)) return false;
  return !cfg_.force_cap || std::sqrt(g2) <= *cfg_.force_cap;
}

bool Integrator::attempt(PhasePoint& s, double h, const std::vector<double>& z) const {
  switch (cfg_.scheme) {
    case Scheme::BAOAB: return langevin_baoab(s, h, z);
    case Scheme::EulerMaruyama: return langevin_em(s, h, z);
    case Scheme::TangentHeun: return fiber_heun(s, h, z);
    case Scheme::ItoProjected: return fiber_ito(s, h, z);
  }
  return false;
}

bool Integrator::langevin_baoab(PhasePoint& s, double h, const std::vector<double>& z) const {
  thread_local std::vector<double> grad;
  grad.resize(n_);
  const double inv_beta = 1.0 / params_.beta;
  const double c = std::exp(-params_.alpha * h);
  const double noise = std::sqrt(inv_beta * (1.0 - c * c));
  if (!force_ok(s.x, grad)) return false;
  for (int i = 0; i < n_; ++i) {
    s.omega[i] -= 0.5 * h * inv_beta * grad[i];
    s.x[i] += 0.5 * h * s.omega[i];
  }
  for (int i = 0; i < n_; ++i) {
    s.omega[i] = c * s.omega[i] + noise * z[i];
    s.x[i] += 0.5 * h * s.omega[i];
  }
  if (!(phi_.value(s.x) < kInf) || !force_ok(s.x, grad)) return false;
  for (int i = 0; i < n_; ++i) s.omega[i] -= 0.5 * h * inv_beta * grad[i];
  return true;
}

bool Integrator::langevin_em(PhasePoint& s, double h, const std::vector<double>& z) const {
  thread_local std::vector<double> grad;
  grad.resize(n_);
  if (!force_ok(s.x, grad)) return false;
  const double inv_beta = 1.0 / params_.beta;
  const double amp = std::sqrt(2.0 * params_.alpha * inv_beta * h);
  for (int i = 0; i < n_; ++i) {
    const double w = s.omega[i];
    s.x[i] += w * h;
    s.omega[i] = w + (-params_.alpha * w - inv_beta * grad[i]) * h + amp * z[i];
  }
  return phi_.value(s.x) < kInf;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void renormalize(std::vector<double>& w) {
  const double n = std::sqrt(dot(w, w));
  if (!(n > 0.0) || !std::isfinite(n)) throw numerical_error("zero-vector renormalization on the sphere");
  for (double& v : w) v /= n;
}

}  // namespace

bool Integrator::fiber_heun(PhasePoint& s, double h, const std::vector<double>& z) const {
  thread_local std::vector<double> g0, g1, w1, inc0, inc1, xp;
  const int d = n_;
  for (auto* v : {&g0, &g1, &w1, &inc0, &inc1, &xp}) v->resize(d);
  const double kick = 1.0 / (d - 1.0);
  const double sq = params_.sigma * std::sqrt(h);
  if (!force_ok(s.x, g0)) return false;

  // Tangential increment P(w) (-kick grad h + sigma dW) at a unit vector w.
  auto increment = [&](const std::vector<double>& w, const std::vector<double>& g, std::vector<double>& out) {
    for (int i = 0; i < d; ++i) out[i] = -kick * g[i] * h + sq * z[i];
    const double proj = dot(w, out);
    for (int i = 0; i < d; ++i) out[i] -= proj * w[i];
  };
  increment(s.omega, g0, inc0);
  for (int i = 0; i < d; ++i) {
    w1[i] = s.omega[i] + inc0[i];
    xp[i] = s.x[i] + s.omega[i] * h;
  }
  renormalize(w1);
  if (!(phi_.value(xp) < kInf) || !force_ok(xp, g1)) return false;
  increment(w1, g1, inc1);
  for (int i = 0; i < d; ++i) w1[i] = s.omega[i];
  for (int i = 0; i < d; ++i) s.omega[i] += 0.5 * (inc0[i] + inc1[i]);
  renormalize(s.omega);
  for (int i = 0; i < d; ++i) s.x[i] += 0.5 * (w1[i] + s.omega[i]) * h;
  return phi_.value(s.x) < kInf;
}

bool Integrator::fiber_ito(PhasePoint& s, double h, const std::vector<double>& z) const {
  thread_local std::vector<double> g, inc;
  const int d = n_;
  g.resize(d);
  inc.resize(d);
  if (!force_ok(s.x, g)) return false;
  const double kick = 1.0 / (d - 1.0);
  const double sq = params_.sigma * std::sqrt(h);
  for (int i = 0; i < d; ++i) inc[i] = -kick * g[i] * h + sq * z[i];
  const double proj = dot(s.omega, inc);
  const double curvature = 0.5 * params_.sigma * params_.sigma * (d - 1.0) * h;
  for (int i = 0; i < d; ++i) {
    const double w = s.omega[i];
    s.x[i] += w * h;
    s.omega[i] = w + inc[i] - proj * w - curvature * w;
  }
  renormalize(s.omega);
  return phi_.value(s.x) < kInf;
}

bool Integrator::advance(PhasePoint& s, double h, std::uint32_t path, std::uint64_t step,
                         int level, std::uint64_t node, StepOutcome& out) const {
  // One backup per refinement level; assign() reuses capacity, so the hot path never allocates.
  thread_local std::vector<PhasePoint> backup;
  thread_local std::vector<std::vector<double>> normals;
  if (backup.size() <= static_cast<std::size_t>(level)) {
    backup.resize(level + 1);
    normals.resize(level + 1);
  }
  auto& z = normals[level];
  z.resize(params_.velocity_dim());
  const std::uint32_t tag =
      level == 0 ? noise_tag::kDynamics
                 : noise_tag::kBridgeBase + static_cast<std::uint32_t>((1ull << level) + node);
  noise_.normals(path, step, tag, z);
  auto& saved = backup[level];
  saved.x.assign(s.x.begin(), s.x.end());
  saved.omega.assign(s.omega.begin(), s.omega.end());
  if (attempt(s, h, z)) {
    out.refinement = std::max(out.refinement, level);
    return true;
  }
  s.x.assign(saved.x.begin(), saved.x.end());
  s.omega.assign(saved.omega.begin(), saved.omega.end());
  if (level >= cfg_.max_refinements) return false;
  if (!advance(s, 0.5 * h, path, step, level + 1, 2 * node, out)) return false;
  ++out.substeps;
  return advance(s, 0.5 * h, path, step, level + 1, 2 * node + 1, out);
}

StepOutcome Integrator::step(PhasePoint& s, std::uint32_t path, std::uint64_t step) const {
  StepOutcome out;
  out.valid = advance(s, cfg_.dt, path, step, 0, 0, out);
  return out;
}

StepOutcome langevin_step(PhasePoint& s, const Integrator& integrator, std::uint32_t path,
                          std::uint64_t step) {
  if (integrator.params().model != ModelKind::Langevin)
    throw config_error("langevin_step needs a Langevin integrator");
  return integrator.step(s, path, step);
}

StepOutcome fiber_step(PhasePoint& s, const Integrator& integrator, std::uint32_t path,
                       std::uint64_t step) {
  if (integrator.params().model != ModelKind::Fiber)
    throw config_error("fiber_step needs a fiber integrator");
  if (std::abs(std::sqrt(dot(s.omega, s.omega)) - 1.0) > 1e-12)
    throw config_error("fiber state velocity is not a unit vector");
  return integrator.step(s, path, step);
}

void write_trajectory_record(std::ostream& os, std::uint32_t path, double t, const PhasePoint& s) {
  auto put = [&os](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    char buf[8];
    for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    os.write(buf, 8);
  };
  put(static_cast<double>(path));
  put(t);
  for (double v : s.x) put(v);
  for (double v : s.omega) put(v);
}

}  // namespace ergokit
