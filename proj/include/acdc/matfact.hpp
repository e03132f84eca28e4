#pragma once

#include "acdc/discrepancy.hpp"

#include <vector>

/// Probabilistic matrix factorization x_n = sum_k y_nk with y_nk ~ F(phi_k z_nk):
/// Poisson NMF and Gaussian factor analysis, plus conditional samplers for the
/// per-component noise variables.
namespace acdc::matfact {

enum class NoiseModel { Poisson, Gaussian };

struct PmfParams {
  Matrix signatures; // K x D (rows sum to one in Poisson mode)
  Matrix loadings;   // N x K
  NoiseModel noise = NoiseModel::Poisson;
  /// Gaussian mode: per-component, per-dimension noise variances (K x D).
  Matrix noise_var;
  /// Gaussian mode: column means removed before factorizing (D).
  Vector offset;

  [[nodiscard]] int k() const noexcept { return static_cast<int>(signatures.rows()); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return signatures.cols(); }
  [[nodiscard]] Eigen::Index n() const noexcept { return loadings.rows(); }
  /// Mean of x_n under the model (N x D).
  [[nodiscard]] Matrix mean() const;
};

enum class NmfInit { GammaRandom, SvdAbs };

struct NmfConfig {
  int max_iters = 1000;
  /// Relative objective change that ends a run.
  double tol = 1e-7;
  int n_restarts = 3;
  std::uint64_t seed = 0;
  NmfInit init = NmfInit::GammaRandom;
};

struct NmfResult {
  PmfParams params;
  /// Generalized KL divergence between X and the fitted mean.
  double objective = 0.0;
  std::vector<double> trace;
  int restart = 0;
  bool converged = false;
};

/// Throws NonInteger / InvalidArgument unless every entry is a nonnegative integer.
void require_counts(const DataMatrix &x);

/// Lee-Seung multiplicative updates for KL-NMF, best of cfg.n_restarts.
/// Signatures are row-normalized (mass moved into loadings) and components
/// ordered by total loading, descending.
[[nodiscard]] NmfResult fit_poisson_nmf(const DataMatrix &x, int k, const NmfConfig &cfg);

/// sum x log(x / mu) - x + mu over all cells.
[[nodiscard]] double generalized_kl(const DataMatrix &x, const Matrix &mu);
/// log p(X | Z, Phi) under independent Poisson cells.
[[nodiscard]] double poisson_loglik(const DataMatrix &x, const PmfParams &params);

struct FaConfig {
  int max_iters = 200;
  double tol = 1e-10;
};

struct FaResult {
  PmfParams params;
  /// Squared reconstruction error of the centred data after each sweep.
  std::vector<double> trace;
  /// Data rank below K; trailing components are numerically zero.
  bool rank_deficient = false;
};

/// Centred alternating least squares started from the truncated SVD. The total
/// per-dimension residual variance is split equally across components.
[[nodiscard]] FaResult fit_gaussian_fa(const DataMatrix &x, int k, const FaConfig &cfg);

/// log p(X | Z, Phi, sigma) with x_nd ~ N(offset_d + (Z Phi)_nd, sum_k noise_var_kd).
[[nodiscard]] double gaussian_loglik(const DataMatrix &x, const PmfParams &params);

/// Law the noise variables are compared against.
enum class NoiseReference { Uniform, StandardNormal };

struct NoiseSampleTable {
  /// Per component: one row of noise variables per used observation.
  std::vector<RowMajorMatrix> eps;
  /// Per component: indices of the used observations (u_nk = 1).
  std::vector<std::vector<Eigen::Index>> members;
  std::vector<long long> counts;
  /// Per component: sampled latent contributions y_nk (N x D).
  std::vector<Matrix> contributions;
};

/// Multinomial split of each count followed by a randomized Poisson CDF
/// transform. Components with z_nk = 0 are unused for observation n.
[[nodiscard]] NoiseSampleTable sample_noise_poisson(const PmfParams &params, const DataMatrix &x,
                                                    std::uint64_t seed);

/// Sequential conditional normals for components 1..K-1; component K takes the
/// residual, so sum_k y_nk reproduces x_n exactly. The offset is shared equally
/// among the component means.
[[nodiscard]] NoiseSampleTable sample_noise_gaussian(const PmfParams &params, const DataMatrix &x,
                                                     std::uint64_t seed,
                                                     NoiseReference ref = NoiseReference::Uniform);

[[nodiscard]] inline DivergenceConfig per_coordinate_kl() {
  DivergenceConfig c;
  c.kind = DivergenceKind::KlKnnPerCoord;
  return c;
}

struct PmfDiscrepancyConfig {
  /// Per-coordinate k-NN KL by default.
  DivergenceConfig divergence = per_coordinate_kl();
  NoiseReference reference = NoiseReference::Uniform;
  /// Noise draws averaged per component.
  int n_draws = 1;
};

/// Discrepancy between each component's noise variables and the reference law.
/// Unused components are flagged empty; components too small for the
/// estimator are flagged infinite. Equivariant under component permutation.
[[nodiscard]] DiscrepancyRow component_discrepancies(const PmfParams &params, const DataMatrix &x,
                                                     const PmfDiscrepancyConfig &cfg,
                                                     std::uint64_t seed);

/// Discrepancies computed from an already sampled table.
[[nodiscard]] DiscrepancyRow discrepancies_from_table(const NoiseSampleTable &table,
                                                      const PmfDiscrepancyConfig &cfg,
                                                      std::uint64_t seed);

/// Order by total loading (Poisson) or loading energy (Gaussian), descending,
/// ties broken by signature.
[[nodiscard]] std::vector<int> canonical_order(const PmfParams &params);
[[nodiscard]] PmfParams permuted(const PmfParams &params, const std::vector<int> &order);

} // namespace acdc::matfact
