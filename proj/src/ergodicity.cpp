#include "ergokit/ergodicity.hpp"

#include <algorithm>
#include <cmath>

#include "ergokit/error.hpp"
#include "ergokit/parallel.hpp"
#include "ergokit/quadrature.hpp"
#include "ergokit/rng.hpp"

namespace ergokit {

namespace {

/// Neumaier compensated sum.
struct Compensated {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

struct MeanVar {
  double mean = 0.0, var = 0.0;
};

MeanVar mean_var(const std::vector<double>& v) {
  Compensated s;
  for (double x : v) s.add(x);
  const double n = static_cast<double>(v.size());
  MeanVar out;
  out.mean = s.value() / n;
  Compensated q;
  for (double x : v) q.add((x - out.mean) * (x - out.mean));
  out.var = v.size() > 1 ? q.value() / (n - 1.0) : 0.0;
  return out;
}

constexpr std::uint32_t kPilotChain = 0xFFFFFFFFu;
constexpr std::uint32_t kLongPath = 0xFFFFFFFEu;

}  // namespace

std::optional<PositionMoments> position_moments(const Potential& phi) {
  const int n = phi.dim();
  PositionMoments m;
  if (phi.kind() == PotentialKind::Quadratic) {
    for (double a : phi.quadratic_coefficients()) {
      m.mean.push_back(0.0);
      m.second.push_back(1.0 / (2.0 * a));
    }
    return m;
  }
  if (phi.kind() == PotentialKind::FlatPeriodic) {
    for (double r : phi.periods()) {
      m.mean.push_back(0.5 * r);
      m.second.push_back(r * r / 3.0);
    }
    return m;
  }
  if (n > 3 || phi.support_radius().empty()) return std::nullopt;
  std::vector<double> lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    lo[k] = -phi.support_radius()[k];
    hi[k] = phi.support_radius()[k];
  }
  auto weight = [&](std::span<const double> x) {
    const double v = phi.value(x);
    return v < kInf ? std::exp(-v) : 0.0;
  };
  const double mass = quad::integrate_box(weight, lo, hi, 1e-10).value;
  for (int k = 0; k < n; ++k) {
    m.mean.push_back(
        quad::integrate_box([&](std::span<const double> x) { return x[k] * weight(x); }, lo, hi, 1e-10)
            .value / mass);
    m.second.push_back(
        quad::integrate_box([&](std::span<const double> x) { return x[k] * x[k] * weight(x); }, lo, hi,
                            1e-10)
            .value / mass);
  }
  return m;
}

std::vector<PhasePoint> sample_initial(const GibbsMeasure& measure, std::size_t n,
                                       const SamplerSpec& spec, std::uint64_t seed,
                                       SampleDiagnostics* diagnostics) {
  const Potential& phi = measure.potential();
  const ModelParams& p = measure.params();
  const int xd = p.position_dim();
  const int vd = p.velocity_dim();
  const NoiseStream noise(seed);
  std::vector<PhasePoint> out(n, PhasePoint{std::vector<double>(xd), std::vector<double>(vd)});
  SampleDiagnostics diag;

  // Velocities: exact in both models.
  for (std::size_t i = 0; i < n; ++i) {
    auto& w = out[i].omega;
    noise.normals(static_cast<std::uint32_t>(i), 0, noise_tag::kInitialVelocity, w);
    if (measure.velocity_marginal() == VelocityMarginal::UniformSphere) {
      double nn = 0;
      for (double v : w) nn += v * v;
      nn = std::sqrt(nn);
      if (nn == 0.0) throw numerical_error("zero Gaussian vector while sampling the sphere");
      for (double& v : w) v /= nn;
    } else {
      const double s = spec.velocity_scale / std::sqrt(p.beta);
      for (double& v : w) v *= s;
    }
  }

  const bool exact_possible =
      phi.kind() == PotentialKind::Quadratic || phi.kind() == PotentialKind::FlatPeriodic;
  if (spec.kind == SamplerKind::ExactGaussian) {
    if (!exact_possible)
      throw config_error("exact position sampling needs a quadratic or flat periodic potential");
    for (std::size_t i = 0; i < n; ++i) {
      auto& x = out[i].x;
      if (phi.kind() == PotentialKind::Quadratic) {
        noise.normals(static_cast<std::uint32_t>(i), 0, noise_tag::kInitialPosition, x);
        for (int k = 0; k < xd; ++k) x[k] /= std::sqrt(2.0 * phi.quadratic_coefficients()[k]);
      } else {
        for (int k = 0; k < xd; ++k)
          x[k] = phi.periods()[k] *
                 noise.uniform(static_cast<std::uint32_t>(i), 0, noise_tag::kInitialPosition, k);
      }
    }
    diag.acceptance = 1.0;
  } else {
    if (spec.burn_in < 0 || spec.thinning < 1 || spec.draws_per_chain < 1)
      throw config_error("metropolis needs burn_in >= 0, thinning >= 1, draws_per_chain >= 1");
    if (!(spec.proposal_scale > 0.0)) throw config_error("proposal scale must be positive");
    if (phi.reference_point().empty()) throw config_error("metropolis needs a reference point");
    const std::vector<double> start = phi.reference_point();

    // One random-walk chain; returns the acceptance count.
    auto chain = [&](std::uint32_t id, std::uint64_t first_step, int steps, double scale,
                     std::vector<double>& x, double& fx) {
      std::vector<double> y(xd);
      std::uint64_t accepted = 0;
      for (int s = 0; s < steps; ++s) {
        const std::uint64_t step = first_step + static_cast<std::uint64_t>(s);
        noise.normals(id, step, noise_tag::kMetropolis, y);
        for (int k = 0; k < xd; ++k) y[k] = x[k] + scale * y[k];
        const double fy = phi.value(y);
        if (fy < kInf) {
          const double u = noise.uniform(id, step, noise_tag::kMetropolisAccept, 0);
          if (std::log(u) < fx - fy) {
            x = y;
            fx = fy;
            ++accepted;
          }
        }
      }
      return accepted;
    };

    // Pilot: rescale until acceptance sits inside [0.15, 0.5].
    double scale = spec.proposal_scale;
    {
      std::vector<double> x = start;
      double fx = phi.value(x);
      std::uint64_t step = 0;
      for (int round = 0; round < 60; ++round) {
        const double a = static_cast<double>(chain(kPilotChain, step, 500, scale, x, fx)) / 500.0;
        step += 500;
        if (a >= 0.15 && a <= 0.5) break;
        scale *= std::clamp(a / 0.3, 0.25, 2.0);
        if (a == 0.0) scale *= 0.25;
      }
    }
    diag.proposal_scale = scale;

    const std::size_t per = static_cast<std::size_t>(spec.draws_per_chain);
    const std::size_t chains = (n + per - 1) / per;
    std::vector<std::uint64_t> acc(chains, 0), tried(chains, 0);
    parallel_for(chains, 16, [&](std::size_t b, std::size_t e) {
      for (std::size_t c = b; c < e; ++c) {
        std::vector<double> x = start;
        double fx = phi.value(x);
        const auto id = static_cast<std::uint32_t>(c);
        acc[c] += chain(id, 0, spec.burn_in, scale, x, fx);
        tried[c] += spec.burn_in;
        std::uint64_t step = spec.burn_in;
        for (std::size_t k = 0; k < per && c * per + k < n; ++k) {
          if (k > 0) {
            acc[c] += chain(id, step, spec.thinning, scale, x, fx);
            tried[c] += spec.thinning;
            step += spec.thinning;
          }
          out[c * per + k].x = x;
        }
      }
    });
    std::uint64_t a = 0, t = 0;
    for (std::size_t c = 0; c < chains; ++c) {
      a += acc[c];
      t += tried[c];
    }
    diag.acceptance = t > 0 ? static_cast<double>(a) / t : 1.0;
    if (t > 0 && (diag.acceptance < 0.1 || diag.acceptance > 0.7))
      throw numerical_error("acceptance rate unfixable: " + std::to_string(diag.acceptance));
  }

  if (xd <= 3 && n >= 20) {
    if (const auto m = position_moments(phi)) {
      diag.moments_checked = true;
      for (int k = 0; k < xd; ++k) {
        std::vector<double> v1(n), v2(n);
        for (std::size_t i = 0; i < n; ++i) {
          v1[i] = out[i].x[k];
          v2[i] = v1[i] * v1[i];
        }
        const MeanVar a = mean_var(v1), b = mean_var(v2);
        const double z1 = std::abs(a.mean - m->mean[k]) / std::sqrt(a.var / n + 1e-300);
        const double z2 = std::abs(b.mean - m->second[k]) / std::sqrt(b.var / n + 1e-300);
        diag.max_moment_z = std::max({diag.max_moment_z, z1, z2});
      }
      if (diag.max_moment_z > 5.0)
        throw numerical_error("initial sample moment mismatch: " + std::to_string(diag.max_moment_z) +
                              " standard errors");
    }
  }
  if (diagnostics) *diagnostics = diag;
  return out;
}

Observable Observable::constant(double c) {
  Observable o;
  o.kind = Kind::Constant;
  o.value = c;
  o.name = "const";
  return o;
}

Observable Observable::position(int i) {
  Observable o;
  o.kind = Kind::Position;
  o.index = i;
  o.name = "x" + std::to_string(i + 1);
  return o;
}

Observable Observable::velocity(int i) {
  Observable o;
  o.kind = Kind::Velocity;
  o.index = i;
  o.name = "omega" + std::to_string(i + 1);
  return o;
}

Observable Observable::general(PhaseFunction f, std::string name) {
  Observable o;
  o.kind = Kind::General;
  o.symbolic = std::move(f);
  o.name = std::move(name);
  return o;
}

Observable Observable::parse(const std::string& name) {
  auto index = [&](std::size_t prefix) {
    const std::string rest = name.substr(prefix);
    if (rest.empty() || rest.find_first_not_of("0123456789") != std::string::npos)
      throw config_error("unknown observable: " + name);
    const int i = std::stoi(rest);
    if (i < 1) throw config_error("observable indices start at 1: " + name);
    return i - 1;
  };
  if (name == "1" || name == "const") return constant(1.0);
  if (name.rfind("omega", 0) == 0) return velocity(index(5));
  if (name.rfind("x", 0) == 0) return position(index(1));
  throw config_error("unknown observable: " + name);
}

BoundObservable::BoundObservable(Observable obs, const Potential& phi, const ModelParams& p,
                                 std::optional<double> known_mean)
    : obs_(std::move(obs)), phi_(phi), p_(p) {
  const int n = p.position_dim();
  const bool langevin = p.model == ModelKind::Langevin;
  const double w2 = langevin ? 1.0 / p.beta : 1.0 / p.d;  // E omega_i^2
  if ((obs_.kind == Observable::Kind::Position || obs_.kind == Observable::Kind::Velocity) &&
      (obs_.index < 0 || obs_.index >= n))
    throw config_error("observable " + obs_.name + " exceeds the dimension " + std::to_string(n));
  switch (obs_.kind) {
    case Observable::Kind::Constant:
      has_L_ = true;
      mean_ = obs_.value;
      mean_source_ = "exact";
      fluctuation_ = 0.0;
      dissipation_ = 0.0;
      norm2_ = obs_.value * obs_.value;
      break;
    case Observable::Kind::Position: {
      has_L_ = true;
      dissipation_ = 0.0;
      if (const auto m = position_moments(phi)) {
        mean_ = m->mean[obs_.index];
        mean_source_ = phi.kind() == PotentialKind::Quadratic || phi.periodic() ? "exact" : "quadrature";
        fluctuation_ = std::sqrt(std::max(0.0, m->second[obs_.index] - *mean_ * *mean_));
        norm2_ = m->second[obs_.index];
      }
      break;
    }
    case Observable::Kind::Velocity:
      has_L_ = true;
      microscopic_ = true;
      mean_ = 0.0;
      mean_source_ = "exact";
      fluctuation_ = std::sqrt(w2);
      norm2_ = w2;
      dissipation_ = langevin ? -p.alpha / p.beta : -0.5 * p.sigma * p.sigma * (p.d - 1.0) * w2;
      break;
    case Observable::Kind::General: {
      const PhaseFunction& f = *obs_.symbolic;
      Lsym_ = apply_L(f, p);
      has_L_ = true;
      microscopic_ = project_P(f, p).is_zero();
      try {
        const QuadratureScheme q(phi, p);
        mean_ = q.mean(f);
        mean_source_ = "quadrature";
        norm2_ = q.inner_product(f, f);
        fluctuation_ = std::sqrt(std::max(0.0, norm2_ - *mean_ * *mean_));
        dissipation_ = q.inner_product(apply_S(f, p), f);
      } catch (const Error&) {
        // Left unset; the caller supplies the mean or falls back to a long path.
      }
      break;
    }
  }
  if (known_mean) {
    mean_ = *known_mean;
    mean_source_ = "known";
  }
}

void BoundObservable::set_mean(double m, std::string source) {
  mean_ = m;
  mean_source_ = std::move(source);
}

double BoundObservable::f(const PhasePoint& s) const {
  switch (obs_.kind) {
    case Observable::Kind::Constant: return obs_.value;
    case Observable::Kind::Position: return s.x[obs_.index];
    case Observable::Kind::Velocity: return s.omega[obs_.index];
    case Observable::Kind::General: return obs_.symbolic->evaluate(phi_, s.x, s.omega);
  }
  return 0.0;
}

double BoundObservable::Lf(const PhasePoint& s) const {
  switch (obs_.kind) {
    case Observable::Kind::Constant: return 0.0;
    case Observable::Kind::Position: return s.omega[obs_.index];
    case Observable::Kind::Velocity: {
      thread_local std::vector<double> g;
      g.resize(s.x.size());
      phi_.gradient(s.x, g);
      const int i = obs_.index;
      if (p_.model == ModelKind::Langevin) return -p_.alpha * s.omega[i] - g[i] / p_.beta;
      double wg = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) wg += s.omega[k] * g[k];
      return -0.5 * p_.sigma * p_.sigma * (p_.d - 1.0) * s.omega[i] -
             (g[i] - s.omega[i] * wg) / (p_.d - 1.0);
    }
    case Observable::Kind::General: return Lsym_->evaluate(phi_, s.x, s.omega);
  }
  return 0.0;
}

namespace {

std::uint64_t to_steps(double t, double dt, const char* what) {
  const double r = t / dt;
  const double k = std::round(r);
  if (std::abs(r - k) > 1e-6 * std::max(1.0, r))
    throw config_error(std::string(what) + " is not a multiple of dt");
  return static_cast<std::uint64_t>(k);
}

struct PathRecord {
  bool valid = true;
  std::uint64_t refined = 0;
  std::vector<double> average;   // [k * nobs + j]
  std::vector<double> martingale;
  std::vector<double> value;
  std::vector<double> snapshot;  // [(k) * (xd + vd) + c], k = 0 is t = 0
};

}  // namespace

EnsembleRun run_ensemble(const EnsembleConfig& cfg, const GibbsMeasure& measure,
                         std::vector<BoundObservable>& observables) {
  if (cfg.paths < 2) throw config_error("ensemble needs at least 2 paths");
  if (cfg.checkpoints.empty()) throw config_error("ensemble needs at least one checkpoint");
  for (std::size_t k = 0; k < cfg.checkpoints.size(); ++k) {
    if (!(cfg.checkpoints[k] > 0.0)) throw config_error("checkpoints must be positive");
    if (k > 0 && !(cfg.checkpoints[k] > cfg.checkpoints[k - 1]))
      throw config_error("checkpoints must be strictly increasing");
  }
  if (cfg.checkpoints.back() > cfg.horizon * (1 + 1e-12))
    throw config_error("checkpoints exceed the horizon");
  for (const auto& o : observables)
    if (!o.mean()) throw config_error("observable " + o.observable().name + " has no reference mean");

  const ModelParams& p = measure.params();
  const Integrator integ(measure.potential(), p, cfg.integrator);
  const double dt = cfg.integrator.dt;
  const std::size_t m = cfg.checkpoints.size();
  std::vector<std::uint64_t> ck(m);
  for (std::size_t k = 0; k < m; ++k) ck[k] = to_steps(cfg.checkpoints[k], dt, "checkpoint");
  const std::uint64_t total = ck.back();
  const std::size_t nobs = observables.size();
  const int xd = p.position_dim(), vd = p.velocity_dim();
  const std::size_t width = static_cast<std::size_t>(xd + vd);

  EnsembleRun run;
  run.times = cfg.checkpoints;
  run.paths = cfg.paths;
  const auto initial = sample_initial(measure, cfg.paths, cfg.sampler, cfg.integrator.seed, &run.sampler);

  std::vector<PathRecord> rec(cfg.paths);
  parallel_for(cfg.paths, 32, [&](std::size_t b, std::size_t e) {
    std::vector<Compensated> intf(nobs), intl(nobs);
    std::vector<double> fprev(nobs), lprev(nobs), f0(nobs);
    for (std::size_t path = b; path < e; ++path) {
      PathRecord& r = rec[path];
      r.average.assign(m * nobs, 0.0);
      r.martingale.assign(m * nobs, 0.0);
      r.value.assign(m * nobs, 0.0);
      r.snapshot.assign((m + 1) * width, 0.0);
      PhasePoint s = initial[path];
      auto snap = [&](std::size_t k) {
        std::copy(s.x.begin(), s.x.end(), r.snapshot.begin() + k * width);
        std::copy(s.omega.begin(), s.omega.end(), r.snapshot.begin() + k * width + xd);
      };
      snap(0);
      for (std::size_t j = 0; j < nobs; ++j) {
        intf[j] = {};
        intl[j] = {};
        f0[j] = fprev[j] = observables[j].f(s);
        lprev[j] = observables[j].Lf(s);
      }
      std::size_t next = 0;
      for (std::uint64_t step = 0; step < total; ++step) {
        const StepOutcome out = integ.step(s, static_cast<std::uint32_t>(path), step);
        if (!out.valid) {
          r.valid = false;
          break;
        }
        if (out.refinement > 0) ++r.refined;
        for (std::size_t j = 0; j < nobs; ++j) {
          const double fc = observables[j].f(s);
          const double lc = observables[j].Lf(s);
          intf[j].add(0.5 * dt * (fprev[j] + fc));
          intl[j].add(0.5 * dt * (lprev[j] + lc));
          fprev[j] = fc;
          lprev[j] = lc;
        }
        if (step + 1 == ck[next]) {
          const double t = static_cast<double>(ck[next]) * dt;
          for (std::size_t j = 0; j < nobs; ++j) {
            r.average[next * nobs + j] = intf[j].value() / t;
            r.martingale[next * nobs + j] = fprev[j] - f0[j] - intl[j].value();
            r.value[next * nobs + j] = fprev[j];
          }
          snap(next + 1);
          ++next;
        }
      }
    }
  });

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < cfg.paths; ++i) {
    if (rec[i].valid)
      valid.push_back(i);
    else
      ++run.invalid_paths;
    run.refined_steps += rec[i].refined;
  }
  if (static_cast<double>(run.invalid_paths) > cfg.invalid_budget * static_cast<double>(cfg.paths))
    throw numerical_error("invalid-path budget exceeded: " + std::to_string(run.invalid_paths) +
                          " of " + std::to_string(cfg.paths) + " paths");
  const double P = static_cast<double>(valid.size());

  for (std::size_t j = 0; j < nobs; ++j) {
    ObservableSeries s;
    s.name = observables[j].observable().name;
    const double mu = *observables[j].mean();
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<double> dev(valid.size()), sq(valid.size()), mm(valid.size()), val(valid.size());
      for (std::size_t i = 0; i < valid.size(); ++i) {
        const PathRecord& r = rec[valid[i]];
        const double a = r.average[k * nobs + j];
        dev[i] = (a - mu) * (a - mu);
        sq[i] = a * a;
        mm[i] = r.martingale[k * nobs + j] * r.martingale[k * nobs + j];
        val[i] = r.value[k * nobs + j];
      }
      const MeanVar d = mean_var(dev), q = mean_var(sq), qv = mean_var(mm), v = mean_var(val);
      const double e = std::sqrt(d.mean);
      s.rms_error.push_back(e);
      // Delta method: SE(sqrt(m)) = SE(m) / (2 sqrt(m)).
      s.rms_error_se.push_back(e > 0 ? std::sqrt(d.var / P) / (2.0 * e) : 0.0);
      s.mean_square.push_back(q.mean);
      s.mean_square_se.push_back(std::sqrt(q.var / P));
      s.qv_simulated.push_back(qv.mean);
      s.qv_se.push_back(std::sqrt(qv.var / P));
      s.final_mean.push_back(v.mean);
    }
    run.series.push_back(std::move(s));
  }

  // Moment comparisons at t = 0 and at every checkpoint.
  const auto pm = position_moments(measure.potential());
  const bool sphere = measure.velocity_marginal() == VelocityMarginal::UniformSphere;
  const double w2 = sphere ? 1.0 / p.d : 1.0 / p.beta;
  auto compare = [&](double t, std::string name, double expected, auto&& value) {
    std::vector<double> v(valid.size());
    for (std::size_t i = 0; i < valid.size(); ++i) v[i] = value(rec[valid[i]]);
    const MeanVar mv = mean_var(v);
    MomentCheck c;
    c.t = t;
    c.quantity = std::move(name);
    c.simulated = mv.mean;
    c.expected = expected;
    c.se = std::sqrt(mv.var / P);
    const double diff = std::abs(mv.mean - expected);
    c.z = c.se > 0 ? diff / c.se : (diff <= 1e-12 ? 0.0 : kInf);
    c.pass = c.z <= 4.0;
    run.invariance.push_back(std::move(c));
  };
  for (std::size_t k = 0; k <= m; ++k) {
    const double t = k == 0 ? 0.0 : cfg.checkpoints[k - 1];
    const std::size_t base = k * width;
    for (int i = 0; i < xd; ++i) {
      if (!pm) break;
      const std::string xi = "x" + std::to_string(i + 1);
      compare(t, "E[" + xi + "]", pm->mean[i], [&](const PathRecord& r) { return r.snapshot[base + i]; });
      compare(t, "E[" + xi + "^2]", pm->second[i],
              [&](const PathRecord& r) { return r.snapshot[base + i] * r.snapshot[base + i]; });
    }
    for (int i = 0; i < vd; ++i) {
      const std::string wi = "omega" + std::to_string(i + 1);
      const std::size_t c = base + xd + i;
      compare(t, "E[" + wi + "]", 0.0, [&](const PathRecord& r) { return r.snapshot[c]; });
      compare(t, "E[" + wi + "^2]", w2, [&](const PathRecord& r) { return r.snapshot[c] * r.snapshot[c]; });
      if (pm)
        compare(t, "E[x" + std::to_string(i + 1) + " " + wi + "]", pm->mean[i] * 0.0,
                [&](const PathRecord& r) { return (r.snapshot[base + i] - pm->mean[i]) * r.snapshot[c]; });
    }
  }
  return run;
}

QVReport qv_check(const EnsembleRun& run, std::size_t series, const BoundObservable& f) {
  if (!f.has_generator() || !f.dissipation())
    throw config_error("missing L-oracle for observable " + f.observable().name);
  const ObservableSeries& s = run.series.at(series);
  QVReport r;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const double t = run.times[k];
    const double target = -2.0 * t * *f.dissipation();
    const double sim = s.qv_simulated[k];
    const double dev = target != 0.0 ? std::abs(sim - target) / std::abs(target) : std::abs(sim);
    const double rel_se = target != 0.0 ? s.qv_se[k] / std::abs(target) : s.qv_se[k];
    bool pass = true;
    if (t >= 1.0 - 1e-12) pass = target != 0.0 ? dev <= std::max(0.05, 3.0 * rel_se) : sim <= 1e-12 + 3.0 * s.qv_se[k];
    r.times.push_back(t);
    r.simulated.push_back(sim);
    r.se.push_back(s.qv_se[k]);
    r.target.push_back(target);
    r.deviation.push_back(dev);
    r.pass.push_back(pass);
    r.all_pass = r.all_pass && pass;
  }
  return r;
}

BoundReport microscopic_check(const EnsembleRun& run, std::size_t series, const BoundObservable& f,
                              const ModelParams& p) {
  if (!f.microscopic()) throw config_error("microscopic bound needs Pf = 0");
  const double lambda_m = p.model == ModelKind::Langevin ? p.alpha : 0.5 * p.sigma * p.sigma * (p.d - 1.0);
  const ObservableSeries& s = run.series.at(series);
  BoundReport r;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const double t = run.times[k];
    const double bound = 2.0 * f.norm_squared() / (t * lambda_m);
    const bool pass = s.mean_square[k] <= bound + 3.0 * s.mean_square_se[k];
    r.times.push_back(t);
    r.value.push_back(s.mean_square[k]);
    r.se.push_back(s.mean_square_se[k]);
    r.bound.push_back(bound);
    r.pass.push_back(pass);
    r.all_pass = r.all_pass && pass;
  }
  return r;
}

BoundReport bound_check(const EnsembleRun& run, std::size_t series, double C1, double C2) {
  const ObservableSeries& s = run.series.at(series);
  BoundReport r;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const double t = run.times[k];
    const double bound = C1 / t + C2 / std::sqrt(t);
    const bool pass = s.rms_error[k] <= bound + 3.0 * s.rms_error_se[k];
    r.times.push_back(t);
    r.value.push_back(s.rms_error[k]);
    r.se.push_back(s.rms_error_se[k]);
    r.bound.push_back(bound);
    r.pass.push_back(pass);
    r.all_pass = r.all_pass && pass;
  }
  return r;
}

InvarianceReport invariance_check(const EnsembleRun& run) {
  InvarianceReport r;
  r.checks = run.invariance;
  for (const auto& c : r.checks) {
    if (c.pass) continue;
    r.all_pass = false;
    if (r.flagged_times.empty() || r.flagged_times.back() != c.t) r.flagged_times.push_back(c.t);
  }
  return r;
}

double long_path_mean(const GibbsMeasure& measure, const BoundObservable& f,
                      const IntegratorConfig& icfg, double horizon, std::uint64_t seed) {
  SamplerSpec spec;
  const auto kind = measure.potential().kind();
  spec.kind = kind == PotentialKind::Quadratic || kind == PotentialKind::FlatPeriodic
                  ? SamplerKind::ExactGaussian
                  : SamplerKind::Metropolis;
  PhasePoint s = sample_initial(measure, 1, spec, seed)[0];
  IntegratorConfig cfg = icfg;
  cfg.seed = seed;
  const Integrator integ(measure.potential(), measure.params(), cfg);
  const std::uint64_t steps = to_steps(horizon, cfg.dt, "long-path horizon");
  Compensated acc;
  double prev = f.f(s);
  for (std::uint64_t k = 0; k < steps; ++k) {
    if (!integ.step(s, kLongPath, k).valid)
      throw numerical_error("long reference path hit the refinement cap");
    const double cur = f.f(s);
    acc.add(0.5 * cfg.dt * (prev + cur));
    prev = cur;
  }
  return acc.value() / (static_cast<double>(steps) * cfg.dt);
}

nlohmann::ordered_json to_json(const InvarianceReport& r) {
  nlohmann::ordered_json j;
  j["pass"] = r.all_pass;
  j["flagged_times"] = r.flagged_times;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : r.checks)
    arr.push_back({{"t", c.t},
                   {"quantity", c.quantity},
                   {"simulated", c.simulated},
                   {"expected", c.expected},
                   {"se", c.se},
                   {"z", std::isfinite(c.z) ? nlohmann::ordered_json(c.z) : nlohmann::ordered_json("inf")},
                   {"pass", c.pass}});
  j["checks"] = arr;
  return j;
}

}  // namespace ergokit
