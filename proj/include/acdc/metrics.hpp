#pragma once

#include "acdc/matfact.hpp"

#include <utility>
#include <vector>

/// Clustering agreement, selection accuracy and factor recovery scores. All
/// functions are deterministic.
namespace acdc::metrics {

/// Size-weighted best-match F-measure over the true clusters.
[[nodiscard]] double f_measure(const LabelVector &truth, const LabelVector &pred);
/// Adjusted Rand index (Hubert-Arabie).
[[nodiscard]] double ari(const LabelVector &truth, const LabelVector &pred);
/// Adjusted mutual information, max-entropy normalization.
[[nodiscard]] double ami(const LabelVector &truth, const LabelVector &pred);

struct SelectionAccuracy {
  double mae = 0.0;
  double zero_one = 0.0;
  /// Median of K_hat - K_o; mean of the two central values for even counts.
  double median_dev = 0.0;
};

[[nodiscard]] SelectionAccuracy selection_accuracy(const std::vector<int> &estimates,
                                                   const std::vector<int> &truths);

/// 1 - cos(phi, phi_star).
[[nodiscard]] double cosine_difference(const Vector &phi, const Vector &phi_star);
/// |mean(z) - mean(z_star)| / mean(z_star).
[[nodiscard]] double relative_average_difference(const Vector &z, const Vector &z_star);

/// Minimum-cost injective assignment of rows into columns (rows <= cols).
/// Returns the column of each row.
[[nodiscard]] std::vector<int> solve_assignment(const Matrix &cost);
/// Same problem by dynamic programming over column subsets; cols <= 20.
[[nodiscard]] std::vector<int> solve_assignment_exhaustive(const Matrix &cost);

enum class MatchSolver { Assignment, Exhaustive };

struct MatchResult {
  /// (estimated component, true component) for every matched pair, ordered by
  /// the index on the smaller side.
  std::vector<std::pair<int, int>> pairs;
  double objective = 0.0;
  double l_phi = 0.0;
  double l_z = 0.0;
  /// The fit has fewer components than the truth, so some true ones are unmatched.
  bool fewer_than_truth = false;
};

/// Pair cost: cosine difference of signatures + 0.1 tanh(relative average
/// difference of loadings). Matches from the smaller component set into the larger.
[[nodiscard]] Matrix match_cost(const matfact::PmfParams &est, const matfact::PmfParams &truth);
[[nodiscard]] MatchResult match_components(const matfact::PmfParams &est,
                                           const matfact::PmfParams &truth,
                                           MatchSolver solver = MatchSolver::Assignment);

} // namespace acdc::metrics
