#pragma once

#include "acdc/divergence.hpp"
#include "acdc/random.hpp"

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

/// Shared plumbing for per-component discrepancy estimation.
namespace acdc {

enum class DivergenceKind { KlKnn, KlKnnPerCoord, Mmd, Sinkhorn };

[[nodiscard]] std::string_view to_string(DivergenceKind kind) noexcept;
/// Accepts kl-knn, kl-knn-percoord, mmd, sinkhorn.
[[nodiscard]] DivergenceKind parse_divergence_kind(std::string_view name);

struct DivergenceConfig {
  DivergenceKind kind = DivergenceKind::KlKnn;
  divergence::KnnKlConfig knn = divergence::KnnKlConfig::adaptive();
  /// Median heuristic when unset.
  std::optional<double> mmd_bandwidth;
  /// Per-dimension defaults when unset.
  std::optional<divergence::SinkhornConfig> sinkhorn;
  /// Observations and model draws are subsampled to these sizes.
  Eigen::Index mmd_max_points = 2000;
  Eigen::Index sinkhorn_max_points = 400;
};

/// Smallest component sample for which the configured estimator is defined.
[[nodiscard]] Eigen::Index min_component_size(const DivergenceConfig &cfg, Eigen::Index n);

/// The model law a component's sample is compared against.
struct ReferenceModel {
  divergence::DensityOracle joint;
  /// One univariate oracle per coordinate (per-coordinate KL only).
  std::vector<divergence::DensityOracle> marginals;
  /// n draws from the reference, one per row (MMD and Sinkhorn only).
  std::function<RowMajorMatrix(Rng &, Eigen::Index)> sample;
};

/// Unif([0,1]^D).
[[nodiscard]] ReferenceModel uniform_reference(Eigen::Index dim);
/// N(mean, cov).
[[nodiscard]] ReferenceModel gaussian_reference(const Vector &mean, const Matrix &cov);

/// D(empirical law of obs || reference) with the configured estimator.
[[nodiscard]] double estimate_discrepancy(const divergence::SampleSet &obs,
                                          const ReferenceModel &ref,
                                          const DivergenceConfig &cfg, std::uint64_t seed);

enum class ComponentFlag { Ok, Empty, Infinite };

[[nodiscard]] std::string_view to_string(ComponentFlag flag) noexcept;

/// Discrepancies, usage counts and flags for the K components of one fit.
struct DiscrepancyRow {
  std::vector<double> values;
  std::vector<long long> counts;
  std::vector<ComponentFlag> flags;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

} // namespace acdc
