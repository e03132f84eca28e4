#pragma once

#include "acdc/discrepancy.hpp"

#include <optional>
#include <vector>

/// Gaussian mixtures: EM fitting, responsibilities, assignment sampling and
/// per-component discrepancies.
namespace acdc::mixture {

enum class CovMode { Full, Diagonal };

struct MixtureParams {
  Vector weights;               // K
  Matrix means;                 // K x D
  std::vector<Matrix> covs;     // K matrices, D x D (diagonal in diagonal mode)
  CovMode cov_mode = CovMode::Full;

  [[nodiscard]] int k() const noexcept { return static_cast<int>(weights.size()); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return means.cols(); }
};

struct EmConfig {
  int max_iters = 300;
  /// Stop when the relative log-likelihood change drops below tol.
  double tol = 1e-7;
  int n_restarts = 5;
  /// Full for D <= 10, diagonal otherwise, when unset.
  std::optional<CovMode> cov_mode;
  /// Ridge added to every covariance, relative to trace(data cov) / D.
  double cov_reg = 1e-6;
  std::uint64_t seed = 0;
};

struct FitResult {
  MixtureParams params;
  double loglik = 0.0;
  /// Log-likelihood after each M-step of the winning restart.
  std::vector<double> trace;
  int restart = 0;
  bool converged = false;
};

[[nodiscard]] CovMode default_cov_mode(Eigen::Index dim) noexcept;

/// Free parameters: (K-1) weights + K*D means + covariance entries.
[[nodiscard]] long long n_free_params(int k, Eigen::Index dim, CovMode mode) noexcept;

/// Best of cfg.n_restarts EM runs. Components come out ordered by weight
/// (descending), ties broken by mean.
[[nodiscard]] FitResult fit_gmm_em(const DataMatrix &data, int k, const EmConfig &cfg);

[[nodiscard]] double log_likelihood(const MixtureParams &params, const DataMatrix &data);

/// N x K posterior component probabilities, computed in log space.
[[nodiscard]] Matrix responsibilities(const MixtureParams &params, const DataMatrix &data);

struct ComponentSamples {
  std::vector<std::vector<Eigen::Index>> members;
  std::vector<long long> counts;
  /// Component of each observation.
  LabelVector assignment;
};

/// One categorical draw per row.
[[nodiscard]] ComponentSamples sample_assignments(const Matrix &resp, std::uint64_t seed);
/// Row-wise argmax (first maximum on ties).
[[nodiscard]] ComponentSamples argmax_assignments(const Matrix &resp);

enum class AssignmentMode { Sample, Averaged, HardArgmax };

struct MixtureDiscrepancyConfig {
  DivergenceConfig divergence;
  AssignmentMode assignment = AssignmentMode::Sample;
  /// Number of draws averaged in Averaged mode.
  int n_draws = 5;
};

/// Discrepancy between each component's assigned observations and its
/// Gaussian. Components too small for the estimator are flagged infinite.
/// Random draws follow a canonical component order, so permuting the
/// components of params permutes the output identically.
[[nodiscard]] DiscrepancyRow component_discrepancies(const MixtureParams &params,
                                                     const DataMatrix &data,
                                                     const MixtureDiscrepancyConfig &cfg,
                                                     std::uint64_t seed);

/// Component order by weight (descending), then means lexicographically.
[[nodiscard]] std::vector<int> canonical_order(const MixtureParams &params);
[[nodiscard]] MixtureParams permuted(const MixtureParams &params, const std::vector<int> &order);

} // namespace acdc::mixture
