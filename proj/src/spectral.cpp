#include "ergokit/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "ergokit/error.hpp"
#include "ergokit/parallel.hpp"
#include "ergokit/rng.hpp"

namespace ergokit {

std::string to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "zero-flux"; }

double GridAxis::spacing() const {
  return boundary == Boundary::Periodic ? (hi - lo) / nodes : (hi - lo) / (nodes - 1);
}

std::size_t GridSpec::total_nodes() const {
  std::size_t n = 1;
  for (const auto& a : axes) n *= static_cast<std::size_t>(a.nodes);
  return n;
}

GridSpec default_grid(const Potential& phi, int nodes) {
  GridSpec g;
  for (int k = 0; k < phi.dim(); ++k) {
    GridAxis a;
    if (phi.periodic()) {
      a.lo = 0.0;
      a.hi = phi.periods()[k];
      a.boundary = Boundary::Periodic;
      a.nodes = nodes - 1;
    } else {
      if (phi.support_radius().empty())
        throw config_error("grid needs a support radius for the potential");
      a.lo = -phi.support_radius()[k];
      a.hi = phi.support_radius()[k];
      a.nodes = nodes;
    }
    g.axes.push_back(a);
  }
  return g;
}

GridSpec refine(const GridSpec& g) {
  GridSpec out = g;
  for (auto& a : out.axes) a.nodes = a.boundary == Boundary::Periodic ? 2 * a.nodes : 2 * a.nodes - 1;
  return out;
}

std::vector<double> DiscreteGenerator::coordinates(std::size_t i) const {
  std::vector<double> x(grid.axes.size());
  std::size_t flat = nodes[i];
  for (std::size_t k = grid.axes.size(); k-- > 0;) {
    const auto n = static_cast<std::size_t>(grid.axes[k].nodes);
    x[k] = grid.axes[k].node(static_cast<int>(flat % n));
    flat /= n;
  }
  return x;
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

void multiply(const SparseRow& A, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
  const auto n = static_cast<std::size_t>(A.rows());
  y.resize(A.rows());
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  const double* val = A.valuePtr();
  auto rows = [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      double s = 0;
      for (int p = outer[r]; p < outer[r + 1]; ++p) s += val[p] * x[inner[p]];
      y[static_cast<Eigen::Index>(r)] = s;
    }
  };
  if (n < 40000)
    rows(0, n);
  else
    parallel_for(n, 8192, rows);
}

}  // namespace

DiscreteGenerator assemble_generator(const Potential& phi, const GridSpec& grid) {
  const std::size_t dim = grid.axes.size();
  if (static_cast<int>(dim) != phi.dim())
    throw config_error("grid dimension does not match the potential");
  for (const auto& a : grid.axes) {
    if (a.nodes < 8) throw config_error("grid needs at least 8 nodes per axis");
    if (!(a.hi > a.lo)) throw config_error("grid axis needs hi > lo");
  }
  if (grid.total_nodes() > GridSpec::kMaxNodes)
    throw config_error("grid exceeds 10^7 nodes");

  const std::size_t total = grid.total_nodes();
  std::vector<std::size_t> stride(dim, 1);
  for (std::size_t k = dim; k-- > 1;) stride[k - 1] = stride[k] * grid.axes[k].nodes;
  auto index_on_axis = [&](std::size_t flat, std::size_t k) {
    return static_cast<int>((flat / stride[k]) % grid.axes[k].nodes);
  };

  std::vector<double> values(total);
  parallel_for(total, 4096, [&](std::size_t b, std::size_t e) {
    std::vector<double> x(dim);
    for (std::size_t f = b; f < e; ++f) {
      for (std::size_t k = 0; k < dim; ++k) x[k] = grid.axes[k].node(index_on_axis(f, k));
      values[f] = phi.value(x);
    }
  });

  DiscreteGenerator out;
  out.grid = grid;
  out.phi_min = kInf;
  for (double v : values)
    if (std::isfinite(v)) out.phi_min = std::min(out.phi_min, v);
  if (!std::isfinite(out.phi_min)) throw config_error("potential is infinite on every grid node");

  std::vector<std::ptrdiff_t> local(total, -1);
  for (std::size_t f = 0; f < total; ++f) {
    if (std::isfinite(values[f]) && values[f] - out.phi_min <= grid.cutoff) {
      local[f] = static_cast<std::ptrdiff_t>(out.nodes.size());
      out.nodes.push_back(f);
      out.phi.push_back(values[f]);
    }
  }
  out.masked = total - out.nodes.size();
  const std::size_t n = out.nodes.size();
  if (n < 2) throw config_error("fewer than two grid nodes survive masking");

  double cell = 1.0;
  for (const auto& a : grid.axes) cell *= a.spacing();
  out.weight.resize(n);
  out.truncated_mass = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double vol = 1.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const auto& a = grid.axes[k];
      const int ik = index_on_axis(out.nodes[i], k);
      if (a.boundary == Boundary::ZeroFlux && (ik == 0 || ik == a.nodes - 1)) vol *= 0.5;
    }
    out.weight[i] = std::exp(-(out.phi[i] - out.phi_min)) * vol;
    out.truncated_mass += std::exp(-out.phi[i]) * vol * cell;
  }

  // Faces between retained neighbours; weight e^{-Phi(midpoint)} / h^2.
  constexpr double kSteepFace = 2.0;
  struct Face {
    std::size_t i, j;
    double w;
  };
  std::vector<Face> faces;
  std::vector<double> x(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = out.nodes[i];
    for (std::size_t k = 0; k < dim; ++k) {
      const auto& a = grid.axes[k];
      const int ik = index_on_axis(f, k);
      std::size_t g;
      if (ik + 1 < a.nodes)
        g = f + stride[k];
      else if (a.boundary == Boundary::Periodic)
        g = f - static_cast<std::size_t>(ik) * stride[k];
      else
        continue;
      if (local[g] < 0) continue;
      for (std::size_t m = 0; m < dim; ++m) x[m] = grid.axes[m].node(index_on_axis(f, m));
      x[k] += 0.5 * a.spacing();
      double pm = phi.value(x);
      if (!std::isfinite(pm)) continue;
      // Unresolved face (Phi jumps by more than kSteepFace across the cell): use the density of
      // the higher end, which caps both jump rates at 1 / h^2 and keeps the operator well
      // conditioned next to singular walls. Such faces disappear under refinement.
      const double pj = out.phi[static_cast<std::size_t>(local[g])];
      if (std::abs(out.phi[i] - pj) > kSteepFace) pm = std::max(out.phi[i], pj);
      const double h = a.spacing();
      faces.push_back({i, static_cast<std::size_t>(local[g]), std::exp(-(pm - out.phi_min)) / (h * h)});
    }
  }

  UnionFind uf(n);
  for (const auto& fc : faces) uf.unite(fc.i, fc.j);
  std::size_t components = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (uf.find(i) == i) ++components;
  if (components > 1)
    throw numerical_error("masking disconnects the grid into " + std::to_string(components) +
                          " components");

  std::vector<Eigen::Triplet<double>> gt, st;
  std::vector<double> diag(n, 0.0);
  gt.reserve(2 * faces.size() + n);
  st.reserve(2 * faces.size() + n);
  for (const auto& fc : faces) {
    const double pi = out.weight[fc.i], pj = out.weight[fc.j];
    gt.emplace_back(fc.i, fc.j, fc.w / pi);
    gt.emplace_back(fc.j, fc.i, fc.w / pj);
    const double s = -fc.w / std::sqrt(pi * pj);
    st.emplace_back(fc.i, fc.j, s);
    st.emplace_back(fc.j, fc.i, s);
    diag[fc.i] += fc.w / pi;
    diag[fc.j] += fc.w / pj;
  }
  for (std::size_t i = 0; i < n; ++i) {
    gt.emplace_back(i, i, -diag[i]);
    st.emplace_back(i, i, diag[i]);
  }
  const auto en = static_cast<Eigen::Index>(n);
  out.G.resize(en, en);
  out.G.setFromTriplets(gt.begin(), gt.end());
  out.S.resize(en, en);
  out.S.setFromTriplets(st.begin(), st.end());

  double max_flux = 0.0, max_asym = 0.0, max_diag = 0.0, max_row = 0.0;
  for (Eigen::Index r = 0; r < en; ++r) {
    double row = 0.0;
    for (SparseRow::InnerIterator it(out.G, r); it; ++it) {
      row += it.value();
      if (it.col() == r) {
        max_diag = std::max(max_diag, std::abs(it.value()));
        continue;
      }
      const double a = out.weight[r] * it.value();
      const double b = out.weight[it.col()] * out.G.coeff(it.col(), r);
      max_flux = std::max(max_flux, std::abs(a));
      max_asym = std::max(max_asym, std::abs(a - b));
    }
    max_row = std::max(max_row, std::abs(row));
  }
  out.asymmetry = max_flux > 0 ? max_asym / max_flux : 0.0;
  out.row_sum_residual = max_diag > 0 ? max_row / max_diag : 0.0;
  return out;
}

EigenPair smallest_nonzero_eigenpair(const DiscreteGenerator& op, const EigenOptions& opt) {
  const auto n = static_cast<Eigen::Index>(op.size());
  if (n < 2) throw config_error("operator needs at least two nodes");
  const int cap = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(10 * n);

  // Gershgorin bound on ||S||.
  double norm = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    double s = 0;
    for (SparseRow::InnerIterator it(op.S, r); it; ++it) s += std::abs(it.value());
    norm = std::max(norm, s);
  }
  const double tol = opt.tolerance * norm;

  Eigen::VectorXd kernel(n);
  for (Eigen::Index i = 0; i < n; ++i) kernel[i] = std::sqrt(op.weight[i]);
  kernel.normalize();

  const NoiseStream noise(opt.seed);
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i)
    start[i] = noise.normal(0, static_cast<std::uint64_t>(i), noise_tag::kEigenStart, 0);

  const int basis_cap = static_cast<int>(std::min<Eigen::Index>(
      std::max<Eigen::Index>(15'000'000 / n, 40), std::min<Eigen::Index>(400, n - 1)));

  Eigen::MatrixXd V(n, basis_cap + 1);
  int cols = 0;
  std::vector<double> alpha, beta;
  Eigen::VectorXd w, ritz;
  double theta = 0.0;
  int iterations = 0;

  // Classical Gram-Schmidt with one conditional second pass (DGKS criterion).
  auto orthogonalize = [&](Eigen::VectorXd& v) {
    for (int pass = 0; pass < 2; ++pass) {
      const double before = v.norm();
      v -= kernel.dot(v) * kernel;
      if (cols > 0) {
        const Eigen::VectorXd h = V.leftCols(cols).transpose() * v;
        v.noalias() -= V.leftCols(cols) * h;
      }
      if (v.norm() > 0.7071 * before) break;
    }
  };
  auto restart = [&](Eigen::VectorXd v) {
    cols = 0;
    alpha.clear();
    beta.clear();
    orthogonalize(v);
    const double nv = v.norm();
    if (nv == 0.0) throw numerical_error("eigensolver start vector lies in the kernel");
    V.col(cols++) = v / nv;
  };
  restart(start);

  for (;;) {
    const Eigen::VectorXd last = V.col(cols - 1);
    multiply(op.S, last, w);
    ++iterations;
    alpha.push_back(last.dot(w));
    orthogonalize(w);
    const double b = w.norm();
    beta.push_back(b);

    const int m = static_cast<int>(alpha.size());
    const bool exhausted = b <= 1e-14 * norm || m + 1 >= n;
    const bool check = exhausted || m % std::max(5, m / 8) == 0 || m >= basis_cap || iterations >= cap;
    if (check) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (int k = 0; k < m; ++k) {
        T(k, k) = alpha[k];
        if (k + 1 < m) T(k, k + 1) = T(k + 1, k) = beta[k];
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      if (es.info() != Eigen::Success) throw numerical_error("tridiagonal eigensolve failed");
      theta = es.eigenvalues()[0];
      const Eigen::VectorXd y = es.eigenvectors().col(0);
      const double estimate = std::abs(b * y[m - 1]);
      if (exhausted || estimate <= tol || m >= basis_cap || iterations >= cap) {
        ritz = V.leftCols(m) * y;
        ritz -= kernel.dot(ritz) * kernel;
        ritz.normalize();
        Eigen::VectorXd sr;
        multiply(op.S, ritz, sr);
        theta = ritz.dot(sr);
        const double residual = (sr - theta * ritz).norm();
        if (residual <= tol || exhausted) {
          EigenPair out;
          out.value = theta;
          out.residual = residual;
          out.tolerance = tol;
          out.iterations = iterations;
          out.vector.resize(n);
          for (Eigen::Index i = 0; i < n; ++i) out.vector[i] = ritz[i] / std::sqrt(op.weight[i]);
          return out;
        }
        if (iterations >= cap)
          throw numerical_error("eigensolver did not converge within " + std::to_string(cap) +
                                " iterations (residual " + std::to_string(residual) + ")");
        restart(ritz);
        continue;
      }
    }
    V.col(cols++) = w / b;
  }
}

SpectralResult spectral_gap(const DiscreteGenerator& op, const EigenOptions& opt) {
  const EigenPair e = smallest_nonzero_eigenpair(op, opt);
  SpectralResult r;
  r.gap = std::max(0.0, e.value);
  r.tolerance = e.tolerance;
  r.residual = e.residual;
  GridGap g;
  for (const auto& a : op.grid.axes) g.nodes.push_back(a.nodes);
  g.gap = r.gap;
  g.residual = e.residual;
  g.iterations = e.iterations;
  r.history.push_back(g);
  r.extrapolated = r.gap;
  r.asymmetry = op.asymmetry;
  r.row_sum_residual = op.row_sum_residual;
  r.method = "grid";
  return r;
}

namespace {

SpectralResult ladder(const Potential& phi, const GapOptions& opt) {
  const int dim = phi.dim();
  const int base = opt.base_nodes > 0 ? opt.base_nodes : dim == 1 ? 129 : dim == 2 ? 33 : 13;
  GridSpec grid = default_grid(phi, base);
  grid.cutoff = opt.cutoff;
  SpectralResult out;
  out.method = "grid";
  for (int level = 0; level < std::max(opt.levels, 1); ++level) {
    if (level > 0) grid = refine(grid);
    const DiscreteGenerator op = assemble_generator(phi, grid);
    const SpectralResult r = spectral_gap(op, opt.eigen);
    out.history.push_back(r.history.front());
    out.gap = r.gap;
    out.tolerance = r.tolerance;
    out.residual = r.residual;
    out.asymmetry = std::max(out.asymmetry, r.asymmetry);
    out.row_sum_residual = std::max(out.row_sum_residual, r.row_sum_residual);
  }
  // Second-order scheme, spacing halved per level.
  const std::size_t m = out.history.size();
  out.extrapolated = m >= 2 ? out.history[m - 1].gap + (out.history[m - 1].gap - out.history[m - 2].gap) / 3.0
                            : out.gap;
  out.extrapolated = std::max(out.extrapolated, 0.0);
  return out;
}

}  // namespace

SpectralResult compute_gap(const Potential& phi, const GapOptions& opt) {
  if (phi.dim() <= 3) return ladder(phi, opt);
  const bool quadratic = phi.kind() == PotentialKind::Quadratic;
  const bool periodic = phi.kind() == PotentialKind::FlatPeriodic;
  if (!quadratic && !periodic)
    throw config_error("grid gaps are limited to dimension 3; supply the spectral gap for this potential");
  SpectralResult best;
  for (int k = 0; k < phi.dim(); ++k) {
    const Potential axis = quadratic ? Potential::quadratic({phi.quadratic_coefficients()[k]})
                                     : Potential::flat_periodic({phi.periods()[k]});
    SpectralResult r = ladder(axis, opt);
    if (k == 0 || r.extrapolated < best.extrapolated) {
      best = std::move(r);
      best.limiting_axis = k;
    }
  }
  best.method = "product";
  return best;
}

LinearBound minimal_linear_bound(std::span<const double> lhs, std::span<const double> g,
                                 std::span<const double> f, double lambda) {
  const std::size_t m = lhs.size();
  if (m == 0 || g.size() != m || f.size() != m) throw config_error("empty family");
  if (!(lambda > 0.0)) throw config_error("lambda must be positive");
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < m; ++k) {
    if (!(lhs[k] > 0.0)) continue;
    if (g[k] <= 0.0 && f[k] <= 0.0)
      throw numerical_error("Kato inequality infeasible: member with G f = 0 and f = 0");
    active.push_back(k);
  }
  if (active.empty()) return {0.0, 0.0, 0};

  auto feasible = [&](double a, double b) {
    if (a < 0.0 || b < 0.0 || !std::isfinite(a) || !std::isfinite(b)) return false;
    for (std::size_t k : active)
      if (a * g[k] + b * f[k] < lhs[k] * (1.0 - 1e-12)) return false;
    return true;
  };
  std::vector<std::pair<double, double>> cand;
  double amax = 0.0, bmax = 0.0;
  bool a_axis = true, b_axis = true;
  for (std::size_t k : active) {
    if (g[k] > 0) amax = std::max(amax, lhs[k] / g[k]); else a_axis = false;
    if (f[k] > 0) bmax = std::max(bmax, lhs[k] / f[k]); else b_axis = false;
  }
  if (a_axis) cand.emplace_back(amax, 0.0);
  if (b_axis) cand.emplace_back(0.0, bmax);
  for (std::size_t p = 0; p < active.size(); ++p)
    for (std::size_t q = p + 1; q < active.size(); ++q) {
      const std::size_t i = active[p], j = active[q];
      const double det = g[i] * f[j] - g[j] * f[i];
      if (std::abs(det) <= 1e-15 * (std::abs(g[i] * f[j]) + std::abs(g[j] * f[i]))) continue;
      cand.emplace_back((lhs[i] * f[j] - lhs[j] * f[i]) / det, (g[i] * lhs[j] - g[j] * lhs[i]) / det);
    }
  LinearBound best{kInf, kInf, 0};
  for (const auto& [a, b] : cand) {
    if (!feasible(a, b)) continue;
    const double obj = a + lambda * b, cur = best.ka + lambda * best.kb;
    if (obj < cur || (obj == cur && b < best.kb)) best = {a, b, 0};
  }
  if (!std::isfinite(best.ka)) throw numerical_error("Kato linear program has no feasible vertex");
  double worst = -kInf;
  for (std::size_t k : active) {
    const double ratio = lhs[k] / (best.ka * g[k] + best.kb * f[k]);
    if (ratio > worst) {
      worst = ratio;
      best.tight = k;
    }
  }
  return best;
}

std::array<double, 4> analytic_langevin_kato(int n) {
  const double dn = n;
  return {std::sqrt(dn) + std::sqrt(dn * (dn - 1.0)), 2.0 * std::sqrt(dn), 0.0, 0.0};
}

std::array<double, 2> analytic_fiber_kato(int d) {
  const double dd = d;
  return {(std::sqrt(dd) + std::sqrt(dd * (dd - 1.0))) * (1.0 + 2.0 / (dd - 1.0)),
          std::sqrt(dd * (dd - 1.0)) / 2.0};
}

KatoEstimate estimate_kato_constants(const Potential& phi, const ModelParams& p,
                                     const std::vector<PhaseFunction>& family, double lambda,
                                     QuadratureOptions qopt) {
  if (family.empty()) throw config_error("empty family");
  const int n = phi.dim();
  if (qopt.box_lo.empty()) family_box(family, qopt.box_lo, qopt.box_hi);
  const QuadratureScheme q(phi, p, qopt);

  std::vector<double> gnorm, fnorm, hess, grad;
  for (const auto& f : family) {
    if (!f.velocity_independent())
      throw config_error("domain mismatch: Kato family must be velocity independent");
    gnorm.push_back(q.norm(apply_G_phi(f)));
    fnorm.push_back(q.norm(f));
    double h = 0.0, gsum = 0.0;
    for (int i = 0; i < n; ++i) {
      const PhaseFunction di = derivative_x(f, i);
      for (int j = 0; j < n; ++j) h += q.norm(derivative_x(di, j));
      if (p.model == ModelKind::Langevin) {
        gsum += q.norm(times_phi_derivative(di, i));
      } else {
        for (int j = 0; j < n; ++j) gsum += q.norm(times_phi_derivative(di, j));
      }
    }
    hess.push_back(h);
    grad.push_back(gsum);
  }

  KatoEstimate out;
  out.model = p.model;
  out.family_size = family.size();
  out.lambda = lambda;
  if (p.model == ModelKind::Langevin) {
    const LinearBound a = minimal_linear_bound(hess, gnorm, fnorm, lambda);
    const LinearBound b = minimal_linear_bound(grad, gnorm, fnorm, lambda);
    out.estimated = {a.ka, b.ka, a.kb, b.kb};
    out.tight_members = {family[a.tight].id, family[b.tight].id};
  } else {
    std::vector<double> lhs(family.size());
    for (std::size_t k = 0; k < lhs.size(); ++k) lhs[k] = hess[k] + grad[k] / (p.d - 1.0);
    const LinearBound a = minimal_linear_bound(lhs, gnorm, fnorm, lambda);
    out.estimated = {a.ka, a.kb};
    out.tight_members = {family[a.tight].id};
  }
  if (phi.kind() == PotentialKind::Quadratic && phi.unit_quadratic()) {
    out.status = "analytic";
    if (p.model == ModelKind::Langevin) {
      const auto k = analytic_langevin_kato(n);
      out.constants.assign(k.begin(), k.end());
    } else {
      const auto k = analytic_fiber_kato(p.d);
      out.constants.assign(k.begin(), k.end());
    }
  } else {
    out.status = "estimated-lower-bound";
    out.constants = out.estimated;
  }
  return out;
}

std::vector<std::vector<double>> default_samples(const Potential& phi, int per_axis) {
  const int n = phi.dim();
  std::vector<std::vector<double>> out;
  if (!phi.reference_point().empty()) out.push_back(phi.reference_point());
  while (per_axis > 2 && std::pow(per_axis, n) > 2e5) --per_axis;
  std::vector<double> lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    if (phi.periodic()) {
      lo[k] = 0.0;
      hi[k] = phi.periods()[k];
    } else if (!phi.support_radius().empty()) {
      lo[k] = -phi.support_radius()[k];
      hi[k] = phi.support_radius()[k];
    } else {
      lo[k] = -1.0;
      hi[k] = 1.0;
    }
  }
  std::vector<int> idx(n, 0);
  for (;;) {
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) x[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (per_axis - 1.0);
    out.push_back(std::move(x));
    int k = n - 1;
    while (k >= 0 && ++idx[k] == per_axis) idx[k--] = 0;
    if (k < 0) break;
  }
  if (phi.pair_params() && phi.pair_params()->particles >= 2 && !phi.reference_point().empty()) {
    const int d = phi.pair_params()->d;
    const auto& ref = phi.reference_point();
    for (int e = 0; e <= 20; ++e) {
      std::vector<double> x = ref;
      const double s = std::ldexp(1.0, -e);
      for (int c = 0; c < d; ++c) x[d + c] = ref[c] + (ref[d + c] - ref[c]) * s;
      out.push_back(std::move(x));
    }
  }
  return out;
}

SufficientCriteriaReport check_sufficient_criteria(const Potential& phi,
                                                   std::span<const std::vector<double>> samples,
                                                   double c_threshold, std::optional<double> gap,
                                                   double gap_threshold) {
  if (!phi.has_hessian()) throw config_error("missing hessian: potential has no Hessian oracle");
  const int n = phi.dim();
  SufficientCriteriaReport r;
  r.c_threshold = c_threshold;
  r.gap_threshold = gap_threshold;
  r.poincare_gap = gap;
  std::vector<double> grad(n), hess(n * n);
  for (const auto& x : samples) {
    if (static_cast<int>(x.size()) != n) throw config_error("sample dimension mismatch");
    if (!phi.in_domain(x)) continue;
    phi.gradient(x, grad);
    phi.hessian(x, hess);
    const Eigen::Map<const Eigen::MatrixXd> H(hess.data(), n, n);
    const Eigen::MatrixXd Hs = 0.5 * (H + H.transpose());
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Hs, Eigen::EigenvaluesOnly).eigenvalues();
    const double spec = ev.cwiseAbs().maxCoeff();
    double g2 = 0.0;
    for (double v : grad) g2 += v * v;
    const double ratio = spec / (1.0 + std::sqrt(g2));
    ++r.samples;
    if (!(ratio <= r.c_hat)) {
      r.c_hat = std::isnan(ratio) ? kInf : ratio;
      r.argmax = x;
    }
  }
  if (r.samples == 0) throw config_error("no sample lies in the domain of the potential");
  r.growth_pass = std::isfinite(r.c_hat) && r.c_hat <= c_threshold;
  r.poincare_pass = gap && *gap > gap_threshold;
  r.pass = r.growth_pass && r.poincare_pass;
  return r;
}

nlohmann::ordered_json to_json(const SpectralResult& r) {
  nlohmann::ordered_json j;
  j["gap"] = r.gap;
  j["extrapolated_gap"] = r.extrapolated;
  j["tolerance"] = r.tolerance;
  j["residual"] = r.residual;
  j["method"] = r.method;
  if (r.limiting_axis >= 0) j["limiting_axis"] = r.limiting_axis;
  j["asymmetry"] = r.asymmetry;
  j["row_sum_residual"] = r.row_sum_residual;
  auto h = nlohmann::ordered_json::array();
  for (const auto& g : r.history)
    h.push_back({{"nodes", g.nodes}, {"gap", g.gap}, {"residual", g.residual}, {"iterations", g.iterations}});
  j["refinement"] = h;
  return j;
}

nlohmann::ordered_json to_json(const KatoEstimate& k) {
  nlohmann::ordered_json j;
  j["model"] = to_string(k.model);
  j["status"] = k.status;
  if (k.model == ModelKind::Langevin) {
    j["K1"] = k.constants[0];
    j["K2"] = k.constants[1];
    j["K3"] = k.constants[2];
    j["K4"] = k.constants[3];
  } else {
    j["K1"] = k.constants[0];
    j["K2"] = k.constants[1];
  }
  j["family_estimate"] = k.estimated;
  j["family_size"] = k.family_size;
  j["lambda"] = k.lambda;
  j["tight_members"] = k.tight_members;
  return j;
}

nlohmann::ordered_json to_json(const SufficientCriteriaReport& r) {
  nlohmann::ordered_json j;
  j["c_hat"] = std::isfinite(r.c_hat) ? nlohmann::ordered_json(r.c_hat) : nlohmann::ordered_json("inf");
  j["argmax"] = r.argmax;
  j["samples"] = r.samples;
  j["c_threshold"] = r.c_threshold;
  j["poincare_gap"] = r.poincare_gap ? nlohmann::ordered_json(*r.poincare_gap) : nlohmann::ordered_json();
  j["gap_threshold"] = r.gap_threshold;
  j["growth_pass"] = r.growth_pass;
  j["poincare_pass"] = r.poincare_pass;
  j["pass"] = r.pass;
  return j;
}

}  // namespace ergokit
