#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ergokit/ergodicity.hpp"
#include "ergokit/rates.hpp"
#include "ergokit/spectral.hpp"
#include "json.hpp"

namespace ergokit {

struct PotentialConfig {
  PotentialKind kind = PotentialKind::Quadratic;
  std::vector<double> coefficients;  // quadratic
  std::vector<double> periods;       // flat periodic
  PairPotentialParams pair;          // pair interaction; particles, d and beta follow the model
};

/// How the constants command obtains gap(G_Phi) and the Kato constants.
enum class GapSource { Auto, Analytic, Computed, Supplied };
enum class KatoSource { Auto, Analytic, Estimated, Supplied };

struct ConstantsConfig {
  GapSource gap_source = GapSource::Auto;
  double gap = 0.0;  // Supplied
  KatoSource kato_source = KatoSource::Auto;
  std::vector<double> kato;  // Supplied
  double lambda = 1.0;
  bool use_e4 = true;
};

struct VerifyConfig {
  double kappa2_scale = 1.0;  // multiplies kappa2; values below 1 make a negative control
  bool sufficient_criteria = false;
  double c_threshold = 100.0;
};

struct RunConfig {
  ModelParams model;
  PotentialConfig potential;
  GapOptions grid;
  bool has_ensemble = false;
  ConstantsConfig constants;
  EnsembleConfig ensemble;
  std::vector<std::string> observables{"x1"};
  std::map<std::string, double> known_means;
  VerifyConfig verify;
  std::filesystem::path out = "out";
  std::uint64_t seed = 1;
  int threads = 0;
};

/// Parses a TOML document. Unknown keys and missing blocks are config errors.
RunConfig parse_config(const std::string& toml_text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& file);

/// Command-line overrides, applied after parsing.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> paths;
  std::optional<double> dt;
  std::optional<int> threads;
};
void apply_overrides(RunConfig& cfg, const Overrides& o);

Potential build_potential(const RunConfig& cfg);

struct GapReport {
  SpectralResult spectral;
  nlohmann::ordered_json json;
  std::string refinement_csv;
};

struct ConstantsReport {
  double gap = 0.0;
  std::string gap_source;
  Provenance gap_provenance = Provenance::Analytic;
  std::vector<double> kato;
  std::string kato_source;
  Provenance kato_provenance = Provenance::Analytic;
  ApplicationRates rates;
  RateConstants used;  // the variant the bound curves come from
  nlohmann::ordered_json json;
};

struct VerifyReport {
  bool pass = false;
  EnsembleRun run;
  std::vector<BoundReport> bounds;
  nlohmann::ordered_json json;
  std::string csv_body;  // verify.csv without the timestamp line
};

struct IdentitiesReport {
  bool pass = false;
  std::vector<ResidualReport> residuals;
  nlohmann::ordered_json json;
};

/// Each command runs its pipeline and, when `write` is set, writes its files into cfg.out.
GapReport cmd_gap(const RunConfig& cfg, bool write = true);
ConstantsReport cmd_constants(const RunConfig& cfg, bool write = true);
VerifyReport cmd_verify(const RunConfig& cfg, bool write = true);
IdentitiesReport cmd_identities(const RunConfig& cfg, bool write = true);

}  // namespace ergokit
