#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "ergokit/core.hpp"
#include "ergokit/operators.hpp"
#include "ergokit/rates.hpp"
#include "json.hpp"

namespace ergokit {

enum class Boundary { ZeroFlux, Periodic };

std::string to_string(Boundary b);

struct GridAxis {
  double lo = 0.0;
  double hi = 1.0;
  int nodes = 8;
  Boundary boundary = Boundary::ZeroFlux;

  /// Zero-flux axes carry nodes on both end points; periodic axes omit hi.
  double spacing() const;
  double node(int i) const { return lo + i * spacing(); }
};

struct GridSpec {
  std::vector<GridAxis> axes;
  /// Nodes with Phi - min Phi above this value are masked out.
  double cutoff = 600.0;

  std::size_t total_nodes() const;
  static constexpr std::size_t kMaxNodes = 10'000'000;
};

/// Box from the potential's support radius (or its periods), with `nodes` per axis.
GridSpec default_grid(const Potential& phi, int nodes);
/// Same box, each step halving the spacing.
GridSpec refine(const GridSpec& g);

/// Flux-form discretization of G_Phi on the retained (unmasked) nodes.
struct DiscreteGenerator {
  GridSpec grid;
  std::vector<std::size_t> nodes;   // flat grid indices of retained nodes
  std::vector<double> phi;          // Phi at the retained nodes
  std::vector<double> weight;       // discrete measure pi_i (e^{-(Phi - min Phi)} times cell volume)
  Eigen::SparseMatrix<double, Eigen::RowMajor> G;  // row i: (G f)_i
  Eigen::SparseMatrix<double, Eigen::RowMajor> S;  // D^{1/2} (-G) D^{-1/2}, D = diag(weight)
  double phi_min = 0.0;
  double truncated_mass = 0.0;      // sum of e^{-Phi} over the grid, times the cell volume
  double asymmetry = 0.0;           // max |pi_i G_ij - pi_j G_ji| / max |pi_i G_ij|
  double row_sum_residual = 0.0;    // max |sum_j G_ij| / max |G_ii|
  std::size_t masked = 0;

  std::size_t size() const { return nodes.size(); }
  std::vector<double> coordinates(std::size_t i) const;
};

DiscreteGenerator assemble_generator(const Potential& phi, const GridSpec& grid);

struct EigenOptions {
  double tolerance = 1e-10;  // relative to the Gershgorin bound on the operator norm
  int max_iterations = 0;    // 0: 10 * size
  std::uint64_t seed = 1;
};

struct EigenPair {
  double value = 0.0;
  double residual = 0.0;   // ||(-G - value) v|| / ||v|| in the discrete weighted norm
  double tolerance = 0.0;  // absolute tolerance the residual was held to
  int iterations = 0;
  std::vector<double> vector;  // grid function (not the symmetrized one)
};

/// Smallest eigenvalue of -G on the complement of the constants.
EigenPair smallest_nonzero_eigenpair(const DiscreteGenerator& op, const EigenOptions& opt = {});

struct GridGap {
  std::vector<int> nodes;
  double gap = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct SpectralResult {
  double gap = 0.0;           // finest grid
  double tolerance = 0.0;
  double residual = 0.0;
  std::vector<GridGap> history;
  double extrapolated = 0.0;  // Richardson on the two finest grids
  double asymmetry = 0.0;
  double row_sum_residual = 0.0;
  std::string method;         // "grid" or "product"
  int limiting_axis = -1;     // product decomposition: the axis with the smallest gap
};

SpectralResult spectral_gap(const DiscreteGenerator& op, const EigenOptions& opt = {});

struct GapOptions {
  int levels = 3;
  int base_nodes = 0;  // 0 picks 129 / 33 / 13 by dimension
  double cutoff = 600.0;  // nodes with Phi - min Phi above this are dropped
  EigenOptions eigen;
};

/// Gap on a refinement ladder with Richardson extrapolation. Separable potentials above the
/// grid dimension cap are split into one-dimensional problems.
SpectralResult compute_gap(const Potential& phi, const GapOptions& opt = {});

/// Langevin: {K1, K2, K3, K4}; fiber: {K1, K2}.
struct KatoEstimate {
  ModelKind model = ModelKind::Langevin;
  std::vector<double> constants;
  std::vector<double> estimated;  // the family estimate, also kept when analytic values are used
  std::size_t family_size = 0;
  std::string status;             // "analytic" or "estimated-lower-bound"
  double lambda = 1.0;            // weight of the zeroth-order constant in the objective
  std::vector<std::string> tight_members;  // one per inequality

  Provenance provenance() const {
    return status == "analytic" ? Provenance::Analytic : Provenance::Estimated;
  }
};

/// min ka + lambda kb subject to ka g_k + kb f_k >= lhs_k, ka, kb >= 0.
struct LinearBound {
  double ka = 0.0;
  double kb = 0.0;
  std::size_t tight = 0;  // a member attaining equality
};
LinearBound minimal_linear_bound(std::span<const double> lhs, std::span<const double> g_norm,
                                 std::span<const double> f_norm, double lambda);

std::array<double, 4> analytic_langevin_kato(int n);
std::array<double, 2> analytic_fiber_kato(int d);

KatoEstimate estimate_kato_constants(const Potential& phi, const ModelParams& p,
                                     const std::vector<PhaseFunction>& family, double lambda = 1.0,
                                     QuadratureOptions qopt = {});

struct SufficientCriteriaReport {
  double c_hat = 0.0;
  std::vector<double> argmax;
  std::size_t samples = 0;
  double c_threshold = 0.0;
  std::optional<double> poincare_gap;
  double gap_threshold = 0.0;
  bool growth_pass = false;
  bool poincare_pass = false;
  bool pass = false;
};

/// Tensor grid over the support box, the reference point, and for pair potentials a sequence
/// of configurations approaching the collision set.
std::vector<std::vector<double>> default_samples(const Potential& phi, int per_axis = 21);

SufficientCriteriaReport check_sufficient_criteria(const Potential& phi,
                                                   std::span<const std::vector<double>> samples,
                                                   double c_threshold,
                                                   std::optional<double> gap = std::nullopt,
                                                   double gap_threshold = 0.0);

nlohmann::ordered_json to_json(const SpectralResult& r);
nlohmann::ordered_json to_json(const KatoEstimate& k);
nlohmann::ordered_json to_json(const SufficientCriteriaReport& r);

}  // namespace ergokit
