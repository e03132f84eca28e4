#pragma once

#include "acdc/common.hpp"

#include <map>
#include <string>
#include <vector>

/// Competing rules for choosing the number of components.
namespace acdc::baselines {

struct BaselineResult {
  std::string method;
  int k_hat = 0;
  std::map<int, double> per_k_scores;
  std::map<std::string, std::vector<double>> aux;
};

/// p log N - 2 loglik; lower is better.
[[nodiscard]] double bic_mixture(double loglik, long long n_free_params, long long n);
/// K log N - 2 loglik + 2 log K!.
[[nodiscard]] double bic_pmf(double cond_loglik, int k, long long n);
/// Smallest K with the lowest score.
[[nodiscard]] BaselineResult bic_select(const std::map<int, double> &bic, std::string method = "bic");

/// Per-cluster means for labels 0..k-1 (empty clusters get zero rows).
[[nodiscard]] Matrix centroids(const DataMatrix &data, const LabelVector &labels, int k);
[[nodiscard]] double wcss(const DataMatrix &data, const LabelVector &labels, const Matrix &centroids);
/// Labels may be any integers; centroids are the cluster means.
[[nodiscard]] double wcss(const DataMatrix &data, const LabelVector &labels);

/// K maximizing wcss(K-1) - 2 wcss(K) + wcss(K+1); smallest K on ties.
[[nodiscard]] BaselineResult elbow_select(const std::map<int, double> &wcss_per_k);

/// Mean silhouette width with Euclidean distances. Singletons and points with
/// a = b = 0 score 0.
[[nodiscard]] double silhouette_score(const DataMatrix &data, const LabelVector &labels);
[[nodiscard]] BaselineResult silhouette_select(const DataMatrix &data,
                                               const std::map<int, LabelVector> &labelings);

struct KMeansResult {
  LabelVector labels;
  Matrix centroids;
  double wcss = 0.0;
};

/// Lloyd iterations from k-means++ seeds, best of n_starts.
[[nodiscard]] KMeansResult kmeans(const DataMatrix &data, int k, std::uint64_t seed,
                                  int n_starts = 3, int max_iters = 100);

enum class GapRule { OneStandardError, Argmax };

/// Gap(K) = mean_b log W_b(K) - log W(K) with B uniform references over the
/// data's bounding box, each clustered by k-means.
[[nodiscard]] BaselineResult gap_select(const DataMatrix &data,
                                        const std::map<int, LabelVector> &labelings, int b,
                                        std::uint64_t seed,
                                        GapRule rule = GapRule::OneStandardError);

/// Counts covariance eigenvalues above the per-rank quantile of eigenvalues
/// from column-permuted replicates.
[[nodiscard]] BaselineResult parallel_analysis(const DataMatrix &x, int n_perm, double quantile,
                                               std::uint64_t seed);

} // namespace acdc::baselines
