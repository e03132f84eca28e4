#pragma once

#include "acdc/matfact.hpp"
#include "acdc/random.hpp"

#include <vector>

/// Seeded generators for skew-normal and Gaussian mixtures, Poisson
/// factorization counts and Gaussian factor-analysis data.
namespace acdc::synth {

/// Sigma_ij = exp(-(i - j)^2 / sigma_corr^2).
[[nodiscard]] Matrix correlation_matrix(Eigen::Index dim, double sigma_corr);

struct SkewMixtureSpec {
  Vector weights;            // K
  Matrix locations;          // K x D
  std::vector<Matrix> scales; // K scale matrices, D x D
  Matrix shapes;             // K x D skewness
  Eigen::Index n = 0;
  std::uint64_t seed = 0;

  [[nodiscard]] int k() const noexcept { return static_cast<int>(weights.size()); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return locations.cols(); }
};

struct LabeledData {
  DataMatrix x;
  LabelVector labels;
};

/// Azzalini representation: x = m + omega * (delta |z0| + chol(Omega - delta delta^T) w).
[[nodiscard]] LabeledData gen_skew_normal_mixture(const SkewMixtureSpec &spec);

/// Two univariate clusters: weights (0.5, 0.5), locations (-3, 3), unit
/// scales, shapes (-10, -1).
[[nodiscard]] SkewMixtureSpec skew_different_spec(Eigen::Index n, std::uint64_t seed);

/// Randomized benchmark mixture: Dirichlet weights floored at 0.05, jittered
/// grid locations shuffled per dimension, shapes centred on an even 2..8
/// ladder, isotropic scales equal to alpha times the distance to the nearest
/// other location.
[[nodiscard]] SkewMixtureSpec benchmark_skew_spec(int k, Eigen::Index dim, Eigen::Index n,
                                                  double alpha, std::uint64_t seed);

[[nodiscard]] LabeledData gen_gmm(const Vector &weights, const Matrix &means,
                                  const std::vector<Matrix> &covs, Eigen::Index n,
                                  std::uint64_t seed);

struct GmmSpec {
  Vector weights;
  Matrix means;
  std::vector<Matrix> covs;
};
/// Equal-weight unit-covariance components, neighbouring means `separation`
/// apart: on a line for D = 1, on a circle in the first two coordinates otherwise.
[[nodiscard]] GmmSpec separated_gmm_spec(int k, Eigen::Index dim, double separation);

enum class PmfScheme { WellSpecified, Perturbed, Contaminated, Overdispersed };

[[nodiscard]] std::string_view to_string(PmfScheme s) noexcept;

struct PmfSynthSpec {
  Matrix signatures; // K x D, rows on the simplex
  Matrix loadings;   // N x K
  PmfScheme scheme = PmfScheme::WellSpecified;
  /// Perturbed: Dirichlet concentration is signature / perturb_scale.
  double perturb_scale = 0.01;
  /// Contaminated: extra loading as a multiple of the mean true loading.
  double exposure = 0.05;
  /// Overdispersed: negative binomial size r, Var = mu + mu^2 / r.
  double dispersion = 5.0;
  std::uint64_t seed = 0;
};

struct PmfTruth {
  Matrix signatures;
  Matrix loadings;
};

/// Dirichlet(concentration) signatures and Gamma(shape, mean_count / K / shape) loadings.
[[nodiscard]] PmfTruth random_pmf_truth(int k, Eigen::Index dim, Eigen::Index n, double mean_count,
                                        std::uint64_t seed, double concentration = 0.5,
                                        double loading_shape = 1.0);

struct PmfData {
  DataMatrix x;
  PmfTruth truth;
};

[[nodiscard]] PmfData gen_pmf_data(const PmfSynthSpec &spec);

struct FaData {
  DataMatrix x;
  matfact::PmfParams truth;
  LabelVector labels;
};

/// y_nk ~ N(phi_k z_nk + offset / K, noise_sd^2 / K) summed over k, with
/// Gaussian signatures and sparse spiky loadings; labels mark the largest loading.
[[nodiscard]] FaData gen_fa_data(int k, Eigen::Index dim, Eigen::Index n, double noise_sd,
                                 std::uint64_t seed);

} // namespace acdc::synth
