#include "ergokit/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "ergokit/error.hpp"
#include "ergokit/operators.hpp"
#include "ergokit/parallel.hpp"
#include "third_party/toml.hpp"

namespace ergokit {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void schema(const std::string& what) { throw config_error("schema error: " + what); }

/// Typed access to one TOML table; rejects keys outside `allowed`.
class Block {
 public:
  Block(const toml::table* t, std::string name, std::set<std::string> allowed)
      : t_(t), name_(std::move(name)) {
    if (!t_) return;
    for (auto&& [k, v] : *t_)
      if (!allowed.count(std::string(k.str()))) schema("unknown key '" + std::string(k.str()) + "' in " + where());
  }

  bool present() const { return t_ != nullptr; }

  const toml::node* get(const std::string& key) const { return t_ ? t_->get(key) : nullptr; }

  std::optional<double> number(const std::string& key) const {
    const auto* n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_number()) schema(key + " in " + where() + " must be a number");
    return n->value<double>();
  }
  std::optional<std::int64_t> integer(const std::string& key) const {
    const auto* n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_integer()) schema(key + " in " + where() + " must be an integer");
    return n->value<std::int64_t>();
  }
  std::optional<std::string> string(const std::string& key) const {
    const auto* n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_string()) schema(key + " in " + where() + " must be a string");
    return n->value<std::string>();
  }
  std::optional<bool> boolean(const std::string& key) const {
    const auto* n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_boolean()) schema(key + " in " + where() + " must be a boolean");
    return n->value<bool>();
  }
  std::optional<std::vector<double>> numbers(const std::string& key) const {
    const auto* n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_array()) schema(key + " in " + where() + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *n->as_array()) {
      if (!e.is_number()) schema(key + " in " + where() + " must be an array of numbers");
      out.push_back(*e.value<double>());
    }
    return out;
  }
  std::optional<std::vector<std::string>> strings(const std::string& key) const {
    const auto* n = get(key);
    if (!n) return std::nullopt;
    if (!n->is_array()) schema(key + " in " + where() + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *n->as_array()) {
      if (!e.is_string()) schema(key + " in " + where() + " must be an array of strings");
      out.push_back(*e.value<std::string>());
    }
    return out;
  }
  const toml::table* table(const std::string& key) const {
    const auto* n = get(key);
    if (!n) return nullptr;
    if (!n->is_table()) schema(key + " in " + where() + " must be a table");
    return n->as_table();
  }
  std::string where() const { return name_.empty() ? "the top level" : "[" + name_ + "]"; }

 private:
  const toml::table* t_;
  std::string name_;
};

const toml::table* sub(const toml::table& root, const char* key) {
  const auto* n = root.get(key);
  if (!n) return nullptr;
  if (!n->is_table()) schema(std::string("[") + key + "] must be a table");
  return n->as_table();
}

int to_int(std::int64_t v, const std::string& what) {
  if (v < -(1ll << 30) || v > (1ll << 30)) schema(what + " is out of range");
  return static_cast<int>(v);
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw config_error("cannot write " + path.string());
  os << text;
}

json model_json(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  json j;
  j["model"] = to_string(p.model);
  if (p.model == ModelKind::Langevin) {
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["N"] = p.N;
  } else {
    j["sigma"] = p.sigma;
  }
  j["d"] = p.d;
  j["potential"] = to_string(cfg.potential.kind);
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw config_error(os.str());
  }
  RunConfig cfg;
  const Block top(&root, "",
                  {"seed", "out", "threads", "model", "potential", "grid", "constants", "ensemble", "verify"});
  if (auto v = top.integer("seed")) {
    if (*v < 0) schema("seed must be nonnegative");
    cfg.seed = static_cast<std::uint64_t>(*v);
  }
  if (auto v = top.string("out")) cfg.out = *v;
  if (auto v = top.integer("threads")) cfg.threads = to_int(*v, "threads");

  const Block model(sub(root, "model"), "model", {"kind", "alpha", "beta", "sigma", "d", "N"});
  if (!model.present()) schema("missing [model] block");
  const std::string kind = model.string("kind").value_or("");
  if (kind == "langevin")
    cfg.model.model = ModelKind::Langevin;
  else if (kind == "fiber")
    cfg.model.model = ModelKind::Fiber;
  else
    schema("[model] kind must be \"langevin\" or \"fiber\"");
  if (auto v = model.number("alpha")) cfg.model.alpha = *v;
  if (auto v = model.number("beta")) cfg.model.beta = *v;
  if (auto v = model.number("sigma")) cfg.model.sigma = *v;
  if (auto v = model.integer("d")) cfg.model.d = to_int(*v, "d");
  if (auto v = model.integer("N")) cfg.model.N = to_int(*v, "N");
  if (cfg.model.model == ModelKind::Fiber && cfg.model.N != 1) schema("the fiber model has N = 1");
  validate_params(cfg.model);

  const Block pot(sub(root, "potential"), "potential",
                  {"kind", "coefficients", "periods", "epsilon", "length", "confinement", "ordered"});
  if (!pot.present()) schema("missing [potential] block");
  const std::string pk = pot.string("kind").value_or("");
  const int n = cfg.model.position_dim();
  if (pk == "quadratic") {
    cfg.potential.kind = PotentialKind::Quadratic;
    cfg.potential.coefficients = pot.numbers("coefficients").value_or(std::vector<double>(n, 0.5));
    if (static_cast<int>(cfg.potential.coefficients.size()) != n)
      schema("[potential] coefficients needs " + std::to_string(n) + " entries");
  } else if (pk == "flat-periodic") {
    cfg.potential.kind = PotentialKind::FlatPeriodic;
    auto periods = pot.numbers("periods");
    if (!periods) schema("[potential] periods is required for flat-periodic");
    cfg.potential.periods = *periods;
    if (static_cast<int>(cfg.potential.periods.size()) != n)
      schema("[potential] periods needs " + std::to_string(n) + " entries");
  } else if (pk == "pair") {
    if (cfg.model.model != ModelKind::Langevin) schema("pair potentials need the langevin model");
    cfg.potential.kind = PotentialKind::PairInteraction;
    PairPotentialParams& pp = cfg.potential.pair;
    pp.particles = cfg.model.N;
    pp.d = cfg.model.d;
    pp.beta = cfg.model.beta;
    if (auto v = pot.number("epsilon")) pp.epsilon = *v;
    if (auto v = pot.number("length")) pp.length = *v;
    if (auto v = pot.number("confinement")) pp.confinement = *v;
    if (auto v = pot.boolean("ordered")) pp.ordered = *v;
  } else {
    schema("[potential] kind must be \"quadratic\", \"flat-periodic\" or \"pair\"");
  }

  const Block grid(sub(root, "grid"), "grid", {"levels", "base_nodes", "cutoff", "tolerance"});
  if (auto v = grid.integer("levels")) cfg.grid.levels = to_int(*v, "levels");
  if (auto v = grid.integer("base_nodes")) cfg.grid.base_nodes = to_int(*v, "base_nodes");
  if (auto v = grid.number("cutoff")) cfg.grid.cutoff = *v;
  if (auto v = grid.number("tolerance")) cfg.grid.eigen.tolerance = *v;
  if (cfg.grid.levels < 1 || cfg.grid.levels > 6) schema("[grid] levels must lie in [1, 6]");

  const Block cst(sub(root, "constants"), "constants", {"gap", "kato", "lambda", "use_e4"});
  if (const auto* g = cst.get("gap")) {
    if (g->is_number()) {
      cfg.constants.gap_source = GapSource::Supplied;
      cfg.constants.gap = *g->value<double>();
    } else {
      const std::string s = cst.string("gap").value_or("");
      if (s == "auto") cfg.constants.gap_source = GapSource::Auto;
      else if (s == "analytic") cfg.constants.gap_source = GapSource::Analytic;
      else if (s == "computed") cfg.constants.gap_source = GapSource::Computed;
      else schema("[constants] gap must be a number or \"auto\", \"analytic\", \"computed\"");
    }
  }
  if (const auto* k = cst.get("kato")) {
    if (k->is_array()) {
      cfg.constants.kato_source = KatoSource::Supplied;
      cfg.constants.kato = *cst.numbers("kato");
    } else {
      const std::string s = cst.string("kato").value_or("");
      if (s == "auto") cfg.constants.kato_source = KatoSource::Auto;
      else if (s == "analytic") cfg.constants.kato_source = KatoSource::Analytic;
      else if (s == "estimated") cfg.constants.kato_source = KatoSource::Estimated;
      else schema("[constants] kato must be an array or \"auto\", \"analytic\", \"estimated\"");
    }
  }
  if (auto v = cst.number("lambda")) cfg.constants.lambda = *v;
  if (auto v = cst.boolean("use_e4")) cfg.constants.use_e4 = *v;

  const Block ens(sub(root, "ensemble"), "ensemble",
                  {"paths", "horizon", "checkpoints", "dt", "scheme", "max_refinements", "force_cap",
                   "invalid_budget", "observables", "known_means", "sampler"});
  cfg.has_ensemble = ens.present();
  EnsembleConfig& e = cfg.ensemble;
  e.integrator.scheme = cfg.model.model == ModelKind::Langevin ? Scheme::BAOAB : Scheme::TangentHeun;
  if (auto v = ens.integer("paths")) {
    if (*v < 2) schema("[ensemble] paths must be at least 2");
    e.paths = static_cast<std::size_t>(*v);
  }
  if (auto v = ens.number("horizon")) e.horizon = *v;
  if (!(e.horizon > 0.0)) schema("[ensemble] horizon must be positive");
  e.checkpoints = ens.numbers("checkpoints").value_or(std::vector<double>{e.horizon});
  if (auto v = ens.number("dt")) e.integrator.dt = *v;
  if (auto v = ens.string("scheme")) e.integrator.scheme = scheme_from_string(*v);
  if (auto v = ens.integer("max_refinements")) e.integrator.max_refinements = to_int(*v, "max_refinements");
  if (auto v = ens.number("force_cap")) e.integrator.force_cap = *v;
  if (auto v = ens.number("invalid_budget")) e.invalid_budget = *v;
  if (auto v = ens.strings("observables")) cfg.observables = *v;
  if (const auto* km = ens.table("known_means")) {
    for (auto&& [k, v] : *km) {
      if (!v.is_number()) schema("[ensemble.known_means] values must be numbers");
      cfg.known_means[std::string(k.str())] = *v.value<double>();
    }
  }
  const Block smp(ens.table("sampler"), "ensemble.sampler",
                  {"kind", "burn_in", "proposal_scale", "thinning", "draws_per_chain", "velocity_scale"});
  SamplerSpec& s = e.sampler;
  const bool exact = cfg.potential.kind == PotentialKind::Quadratic ||
                     cfg.potential.kind == PotentialKind::FlatPeriodic;
  s.kind = exact ? SamplerKind::ExactGaussian : SamplerKind::Metropolis;
  if (auto v = smp.string("kind")) {
    if (*v == "exact-gaussian") s.kind = SamplerKind::ExactGaussian;
    else if (*v == "metropolis") s.kind = SamplerKind::Metropolis;
    else schema("[ensemble.sampler] kind must be \"exact-gaussian\" or \"metropolis\"");
  }
  if (auto v = smp.integer("burn_in")) s.burn_in = to_int(*v, "burn_in");
  if (auto v = smp.number("proposal_scale")) s.proposal_scale = *v;
  if (auto v = smp.integer("thinning")) s.thinning = to_int(*v, "thinning");
  if (auto v = smp.integer("draws_per_chain")) s.draws_per_chain = to_int(*v, "draws_per_chain");
  if (auto v = smp.number("velocity_scale")) s.velocity_scale = *v;

  const Block ver(sub(root, "verify"), "verify", {"kappa2_scale", "sufficient_criteria", "c_threshold"});
  if (auto v = ver.number("kappa2_scale")) cfg.verify.kappa2_scale = *v;
  if (!(cfg.verify.kappa2_scale > 0.0)) schema("[verify] kappa2_scale must be positive");
  if (auto v = ver.boolean("sufficient_criteria")) cfg.verify.sufficient_criteria = *v;
  if (auto v = ver.number("c_threshold")) cfg.verify.c_threshold = *v;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw config_error("cannot read config file " + file.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), file.string());
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  if (o.paths) {
    if (*o.paths < 2) throw config_error("--paths must be at least 2");
    cfg.ensemble.paths = *o.paths;
  }
  if (o.dt) cfg.ensemble.integrator.dt = *o.dt;
  if (o.threads) cfg.threads = *o.threads;
}

Potential build_potential(const RunConfig& cfg) {
  switch (cfg.potential.kind) {
    case PotentialKind::Quadratic: return Potential::quadratic(cfg.potential.coefficients);
    case PotentialKind::FlatPeriodic: return Potential::flat_periodic(cfg.potential.periods);
    case PotentialKind::PairInteraction: return Potential::pair_interaction(cfg.potential.pair);
    case PotentialKind::UserSupplied: break;
  }
  throw config_error("user-supplied potentials are only available through the library API");
}

GapReport cmd_gap(const RunConfig& cfg, bool write) {
  set_thread_count(cfg.threads);
  const Potential phi = build_potential(cfg);
  GapOptions opt = cfg.grid;
  opt.eigen.seed = cfg.seed;
  GapReport r;
  r.spectral = compute_gap(phi, opt);
  r.json = model_json(cfg);
  r.json["spectral"] = to_json(r.spectral);
  std::ostringstream csv;
  csv << "level,nodes,gap,residual,iterations\n";
  for (std::size_t k = 0; k < r.spectral.history.size(); ++k) {
    const GridGap& g = r.spectral.history[k];
    std::string nodes;
    for (std::size_t a = 0; a < g.nodes.size(); ++a) nodes += (a ? "x" : "") + std::to_string(g.nodes[a]);
    csv << k << ',' << nodes << ',' << fmt(g.gap) << ',' << fmt(g.residual) << ',' << g.iterations << '\n';
  }
  r.refinement_csv = csv.str();
  if (write) {
    write_file(cfg.out / "gap.json", r.json.dump(2) + "\n");
    write_file(cfg.out / "gap_refinement.csv", r.refinement_csv);
  }
  return r;
}

namespace {

std::optional<double> analytic_gap(const Potential& phi) {
  double g = kInf;
  if (phi.kind() == PotentialKind::Quadratic) {
    for (double a : phi.quadratic_coefficients()) g = std::min(g, 2.0 * a);
    return g;
  }
  if (phi.kind() == PotentialKind::FlatPeriodic) {
    for (double r : phi.periods()) g = std::min(g, std::pow(2.0 * M_PI / r, 2));
    return g;
  }
  return std::nullopt;
}

}  // namespace

ConstantsReport cmd_constants(const RunConfig& cfg, bool write) {
  set_thread_count(cfg.threads);
  const Potential phi = build_potential(cfg);
  const ModelParams& p = cfg.model;
  const ConstantsConfig& c = cfg.constants;
  ConstantsReport r;
  json extra;

  switch (c.gap_source) {
    case GapSource::Supplied:
      if (!(c.gap > 0.0)) throw config_error("gap must be positive");
      r.gap = c.gap;
      r.gap_source = "supplied";
      r.gap_provenance = Provenance::Estimated;
      break;
    case GapSource::Analytic:
    case GapSource::Auto:
      if (const auto g = analytic_gap(phi)) {
        r.gap = *g;
        r.gap_source = "analytic";
        r.gap_provenance = Provenance::Analytic;
        break;
      }
      if (c.gap_source == GapSource::Analytic)
        throw config_error("no closed-form gap for the " + to_string(phi.kind()) + " potential");
      [[fallthrough]];
    case GapSource::Computed: {
      GapOptions opt = cfg.grid;
      opt.eigen.seed = cfg.seed;
      const SpectralResult s = compute_gap(phi, opt);
      r.gap = s.gap;
      r.gap_source = "computed";
      r.gap_provenance = Provenance::Estimated;
      extra["spectral"] = to_json(s);
      break;
    }
  }

  const std::size_t nk = p.model == ModelKind::Langevin ? 4 : 2;
  auto analytic = [&] {
    if (!phi.unit_quadratic()) throw config_error("analytic Kato constants need the unit quadratic potential");
    if (p.model == ModelKind::Langevin) {
      const auto k = analytic_langevin_kato(p.position_dim());
      r.kato.assign(k.begin(), k.end());
    } else {
      const auto k = analytic_fiber_kato(p.d);
      r.kato.assign(k.begin(), k.end());
    }
    r.kato_source = "analytic";
    r.kato_provenance = Provenance::Analytic;
  };
  switch (c.kato_source) {
    case KatoSource::Supplied:
      if (c.kato.size() != nk)
        throw config_error("[constants] kato needs " + std::to_string(nk) + " entries for this model");
      r.kato = c.kato;
      r.kato_source = "supplied";
      r.kato_provenance = Provenance::Estimated;
      break;
    case KatoSource::Analytic: analytic(); break;
    case KatoSource::Auto:
      if (phi.unit_quadratic()) {
        analytic();
        break;
      }
      [[fallthrough]];
    case KatoSource::Estimated: {
      const KatoEstimate k = estimate_kato_constants(phi, p, kato_family(phi, p), c.lambda);
      r.kato = k.constants;
      r.kato_source = k.status;
      r.kato_provenance = k.provenance();
      extra["kato_estimate"] = to_json(k);
      break;
    }
  }

  if (p.model == ModelKind::Langevin) {
    r.rates = langevin_rates(p.alpha, p.beta, r.gap, {r.kato[0], r.kato[1], r.kato[2], r.kato[3]},
                             r.gap_provenance, r.kato_provenance);
  } else {
    r.rates = fiber_rates(p.sigma, p.d, r.gap, {r.kato[0], r.kato[1]}, r.gap_provenance, r.kato_provenance);
  }
  r.used = c.use_e4 ? r.rates.specialized : generic_rates(r.rates.abstract, false);

  json inputs = model_json(cfg);
  inputs["gap"] = r.gap;
  inputs["gap_source"] = r.gap_source;
  inputs["kato"] = r.kato;
  inputs["kato_source"] = r.kato_source;
  r.json = to_json(r.rates, to_string(p.model), inputs);
  r.json["bound_variant"] = to_string(r.used.variant);
  for (auto& [k, v] : extra.items()) r.json[k] = v;
  if (write) write_file(cfg.out / "constants.json", r.json.dump(2) + "\n");
  return r;
}

VerifyReport cmd_verify(const RunConfig& cfg, bool write) {
  if (!cfg.has_ensemble) throw config_error("schema error: verify needs an [ensemble] block");
  set_thread_count(cfg.threads);
  const ModelParams& p = cfg.model;
  const ValidatedModel vm = validate_model(p, build_potential(cfg));
  const Potential& phi = vm.potential;
  const GibbsMeasure measure(phi, p);
  const ConstantsReport constants = cmd_constants(cfg, false);
  RateConstants used = constants.used;
  used.kappa2 *= cfg.verify.kappa2_scale;

  EnsembleConfig ecfg = cfg.ensemble;
  ecfg.integrator.seed = cfg.seed;

  std::vector<BoundObservable> obs;
  for (const auto& name : cfg.observables) {
    const Observable o = Observable::parse(name);
    std::optional<double> known;
    if (auto it = cfg.known_means.find(o.name); it != cfg.known_means.end()) known = it->second;
    obs.emplace_back(o, phi, p, known);
  }
  for (auto& o : obs) {
    if (o.mean()) continue;
    const double m = long_path_mean(measure, o, ecfg.integrator, 10.0 * ecfg.horizon, cfg.seed ^ 0x5bd1e995u);
    o.set_mean(m, "long-path");
  }
  for (const auto& o : obs)
    if (!o.fluctuation())
      throw numerical_error("no reference value for ||f - E f|| of observable " + o.observable().name);

  VerifyReport r;
  r.run = run_ensemble(ecfg, measure, obs);
  const EnsembleRun& run = r.run;
  const InvarianceReport inv = invariance_check(run);
  bool pass = inv.all_pass;

  std::ostringstream csv;
  csv << "observable,t,rms_error,rms_error_se,bound,microscopic_bound,qv_simulated,qv_target,invalid_paths\n";
  json jobs = json::array();
  for (std::size_t j = 0; j < obs.size(); ++j) {
    const BoundObservable& o = obs[j];
    const BoundCurve curve = bound_curve(used, *o.fluctuation());
    const BoundReport b = bound_check(run, j, curve.c1, curve.c2);
    r.bounds.push_back(b);
    std::optional<QVReport> qv;
    if (o.dissipation() && *o.dissipation() != 0.0) qv = qv_check(run, j, o);
    std::optional<BoundReport> micro;
    if (o.microscopic()) micro = microscopic_check(run, j, o, p);
    pass = pass && b.all_pass && (!qv || qv->all_pass) && (!micro || micro->all_pass);

    const ObservableSeries& s = run.series[j];
    json rows = json::array();
    for (std::size_t k = 0; k < run.times.size(); ++k) {
      const double mb = micro ? micro->bound[k] : NAN;
      const double qs = qv ? qv->simulated[k] : s.qv_simulated[k];
      const double qt = qv ? qv->target[k] : NAN;
      csv << o.observable().name << ',' << fmt(run.times[k]) << ',' << fmt(s.rms_error[k]) << ','
          << fmt(s.rms_error_se[k]) << ',' << fmt(b.bound[k]) << ',' << fmt(mb) << ',' << fmt(qs) << ','
          << fmt(qt) << ',' << run.invalid_paths << '\n';
      json row{{"t", run.times[k]},
               {"rms_error", s.rms_error[k]},
               {"rms_error_se", s.rms_error_se[k]},
               {"bound", b.bound[k]},
               {"bound_pass", static_cast<bool>(b.pass[k])}};
      if (micro) {
        row["mean_square"] = s.mean_square[k];
        row["microscopic_bound"] = micro->bound[k];
        row["microscopic_pass"] = static_cast<bool>(micro->pass[k]);
      }
      if (qv) {
        row["qv_simulated"] = qv->simulated[k];
        row["qv_se"] = qv->se[k];
        row["qv_target"] = qv->target[k];
        row["qv_pass"] = static_cast<bool>(qv->pass[k]);
      }
      rows.push_back(row);
    }
    json jo;
    jo["name"] = o.observable().name;
    jo["mean"] = *o.mean();
    jo["mean_source"] = o.mean_source();
    jo["fluctuation"] = *o.fluctuation();
    jo["C1"] = curve.c1;
    jo["C2"] = curve.c2;
    jo["bound_pass"] = b.all_pass;
    if (qv) jo["qv_pass"] = qv->all_pass;
    if (micro) jo["microscopic_pass"] = micro->all_pass;
    jo["checkpoints"] = rows;
    jobs.push_back(jo);
  }
  r.csv_body = csv.str();
  r.pass = pass;

  json& j = r.json;
  j["verdict"] = pass ? "pass" : "fail";
  j["config"] = model_json(cfg);
  j["config"]["paths"] = ecfg.paths;
  j["config"]["horizon"] = ecfg.horizon;
  j["config"]["dt"] = ecfg.integrator.dt;
  j["config"]["scheme"] = to_string(ecfg.integrator.scheme);
  j["config"]["seed"] = cfg.seed;
  j["config"]["kappa2_scale"] = cfg.verify.kappa2_scale;
  j["constants"] = constants.json;
  j["kappa1"] = used.kappa1;
  j["kappa2"] = used.kappa2;
  j["paths"] = run.paths;
  j["invalid_paths"] = run.invalid_paths;
  j["invalid_fraction"] = static_cast<double>(run.invalid_paths) / static_cast<double>(run.paths);
  j["refined_steps"] = run.refined_steps;
  j["sampler"] = {{"acceptance", run.sampler.acceptance},
                  {"proposal_scale", run.sampler.proposal_scale},
                  {"moments_checked", run.sampler.moments_checked},
                  {"max_moment_z", run.sampler.max_moment_z}};
  j["observables"] = jobs;
  j["invariance"] = to_json(inv);
  if (cfg.verify.sufficient_criteria) {
    const auto samples = default_samples(phi);
    j["sufficient_criteria"] =
        to_json(check_sufficient_criteria(phi, samples, cfg.verify.c_threshold, constants.gap));
  }

  if (write) {
    write_file(cfg.out / "verify.csv", "# ergokit verify " + timestamp() + "\n" + r.csv_body);
    write_file(cfg.out / "verify.json", j.dump(2) + "\n");
  }
  return r;
}

IdentitiesReport cmd_identities(const RunConfig& cfg, bool write) {
  set_thread_count(cfg.threads);
  const Potential phi = build_potential(cfg);
  IdentitiesReport r;
  r.residuals = run_identity_suite(phi, cfg.model);
  r.pass = true;
  json rows = json::array();
  for (const auto& x : r.residuals) {
    r.pass = r.pass && x.pass;
    rows.push_back({{"identity", to_string(x.identity)},
                    {"function", x.function_id},
                    {"residual", x.residual},
                    {"scale", x.scale},
                    {"relative", x.scale > 0 ? x.residual / x.scale : x.residual},
                    {"tolerance", x.tolerance},
                    {"pass", x.pass}});
  }
  r.json = model_json(cfg);
  r.json["verdict"] = r.pass ? "pass" : "fail";
  r.json["checks"] = rows.size();
  r.json["residuals"] = rows;
  if (write) write_file(cfg.out / "identities.json", r.json.dump(2) + "\n");
  return r;
}

}  // namespace ergokit
