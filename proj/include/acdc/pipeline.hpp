#pragma once

#include "acdc/criterion.hpp"
#include "acdc/matfact.hpp"
#include "acdc/mixture.hpp"

#include <variant>

/// Fit every candidate K, estimate component discrepancies and select K.
namespace acdc {

enum class ModelKind { Gmm, PoissonNmf, GaussianFa };

[[nodiscard]] std::string_view to_string(ModelKind m) noexcept;
/// Accepts gmm, pnmf, gfa.
[[nodiscard]] ModelKind parse_model_kind(std::string_view name);

struct AcdcConfig {
  ModelKind model = ModelKind::Gmm;
  int k_min = 1;
  int k_max = 6;
  /// Unset: k-NN KL for mixtures (per coordinate when D > 10), per-coordinate
  /// k-NN KL for factorizations.
  std::optional<DivergenceConfig> divergence;
  LossWeighting weighting = LossWeighting::Unweighted;
  RhoMode rho_mode = RhoMode::Auto;
  /// Cutoff for fixed and supervised modes.
  double rho = 0.0;
  AutoRhoConfig auto_rho;
  mixture::EmConfig em;
  mixture::AssignmentMode assignment = mixture::AssignmentMode::Sample;
  int n_draws = 5;
  matfact::NmfConfig nmf;
  matfact::FaConfig fa;
  matfact::NoiseReference noise_reference = matfact::NoiseReference::Uniform;
  std::uint64_t seed = 0;
};

[[nodiscard]] DivergenceConfig resolved_divergence(const AcdcConfig &cfg, Eigen::Index dim);

struct FittedModel {
  int k = 0;
  double loglik = 0.0;
  long long n_free_params = 0;
  std::variant<mixture::MixtureParams, matfact::PmfParams> params;
  /// Mixtures: responsibility argmax. Factorizations: largest loading.
  LabelVector labels;
  bool converged = true;
};

struct AcdcRun {
  std::vector<FittedModel> fits;
  DiscrepancyTable table;
  std::vector<LossCurve> curves;
  SelectionResult selection;
};

[[nodiscard]] std::vector<FittedModel> fit_models(const DataMatrix &data, const AcdcConfig &cfg);
[[nodiscard]] DiscrepancyTable discrepancy_table(const std::vector<FittedModel> &fits,
                                                 const DataMatrix &data, const AcdcConfig &cfg);
/// Selection on an already computed table according to cfg.rho_mode.
[[nodiscard]] SelectionResult select(const std::vector<LossCurve> &curves, const AcdcConfig &cfg);
[[nodiscard]] AcdcRun run_acdc(const DataMatrix &data, const AcdcConfig &cfg);

} // namespace acdc
