#pragma once

#include "acdc/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

/// Discrepancy measures between an empirical sample and a model distribution.
namespace acdc::divergence {

/// N points in R^D stored row-wise (row n is contiguous).
class SampleSet {
public:
  SampleSet() = default;
  explicit SampleSet(RowMajorMatrix points);
  /// Accepts any Eigen matrix with one point per row.
  template <typename Derived>
  explicit SampleSet(const Eigen::MatrixBase<Derived> &points)
      : SampleSet(RowMajorMatrix(points)) {}
  /// Univariate sample.
  static SampleSet from_values(std::span<const double> values);

  [[nodiscard]] Eigen::Index size() const noexcept { return points_.rows(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return points_.cols(); }
  [[nodiscard]] std::span<const double> point(Eigen::Index n) const noexcept {
    return {points_.data() + n * points_.cols(),
            static_cast<std::size_t>(points_.cols())};
  }
  [[nodiscard]] const RowMajorMatrix &points() const noexcept { return points_; }

private:
  RowMajorMatrix points_;
};

enum class Support { FullSpace, UnitCube, NonnegOrthant };

/// Known model density q, evaluated in log space.
struct DensityOracle {
  std::function<double(std::span<const double>)> log_density;
  Support support = Support::FullSpace;

  [[nodiscard]] double operator()(std::span<const double> x) const {
    return log_density(x);
  }
};

/// N(mean, cov) log-density. Throws NotSPD if cov has no Cholesky factor.
[[nodiscard]] DensityOracle gaussian_oracle(const Vector &mean, const Matrix &cov);
/// Univariate N(mean, sd^2).
[[nodiscard]] DensityOracle normal_oracle(double mean, double sd);
/// Unif([0,1]^D): log-density 0 inside the cube, -inf outside.
[[nodiscard]] DensityOracle unit_cube_oracle();

enum class KMode { Fixed, AdaptiveSqrt };

struct KnnKlConfig {
  KMode k_mode = KMode::AdaptiveSqrt;
  int k = 1;
  /// Applies -log k + digamma(k); ignored in adaptive mode.
  bool bias_correction = false;
  /// Seed for the duplicate-point jitter.
  std::uint64_t jitter_seed = 0;
  /// Use the k-d tree for D <= 16 (results are identical to brute force).
  bool use_tree = true;

  static KnnKlConfig fixed(int k, bool corrected = false) {
    return {KMode::Fixed, k, corrected, 0, true};
  }
  static KnnKlConfig adaptive() { return {}; }
};

/// Neighbour rank used for a sample of size n.
[[nodiscard]] int effective_k(const KnnKlConfig &cfg, Eigen::Index n);

/// Plug-in KL between an empirical pmf and a model pmf. Symbols with zero
/// count are dropped (0 log 0 := 0).
template <typename Symbol>
[[nodiscard]] double kl_plugin_discrete(const std::map<Symbol, long long> &counts,
                                        const std::map<Symbol, double> &pmf_q,
                                        double mass_tol = 1e-9) {
  long long total = 0;
  for (const auto &[sym, c] : counts) {
    require(c >= 0, ErrorCode::InvalidArgument, "negative count");
    total += c;
  }
  require(total > 0, ErrorCode::EmptySample, "total count is zero");
  double mass = 0.0;
  for (const auto &[sym, q] : pmf_q) {
    require(q >= 0.0, ErrorCode::InvalidArgument, "negative model probability");
    mass += q;
  }
  require(mass <= 1.0 + mass_tol, ErrorCode::InvalidArgument,
          "model pmf sums to more than one");

  const double n = static_cast<double>(total);
  double kl = 0.0;
  for (const auto &[sym, c] : counts) {
    if (c == 0)
      continue;
    const auto it = pmf_q.find(sym);
    const double q = it == pmf_q.end() ? 0.0 : it->second;
    require(q > 0.0, ErrorCode::ZeroModelMass,
            "observed symbol has zero model probability");
    const double p = static_cast<double>(c) / n;
    kl += p * std::log(p / q);
  }
  return kl;
}

/// Distance from each point to its k-th nearest other point.
[[nodiscard]] std::vector<double> kth_neighbor_distances(const SampleSet &samples,
                                                         int k, bool use_tree = true);

/// Exact duplicates receive seeded additive jitter of size 1e-10 * data range,
/// kept inside the bounding box of the sample.
/// Returns the input unchanged when all points are distinct.
[[nodiscard]] SampleSet jitter_duplicates(const SampleSet &samples,
                                          std::uint64_t seed);

/// One-sample k-NN estimate of KL(P || Q) from draws of P and the density of Q.
[[nodiscard]] double kl_knn_one_sample(const SampleSet &samples,
                                       const DensityOracle &q,
                                       const KnnKlConfig &cfg);

/// Sum of univariate estimates over coordinates (independence approximation).
[[nodiscard]] double kl_knn_per_coordinate(const SampleSet &samples,
                                           std::span<const DensityOracle> q_marginals,
                                           const KnnKlConfig &cfg);

/// Closed-form KL(N(mu1, Sigma1) || N(mu2, Sigma2)).
[[nodiscard]] double kl_gaussian_closed_form(const Vector &mu1, const Matrix &sigma1,
                                             const Vector &mu2, const Matrix &sigma2);

struct KernelSpec {
  double bandwidth = 1.0;

  /// k(x, y) = exp(-|x - y|^2 / (2 h^2))
  [[nodiscard]] double operator()(std::span<const double> x,
                                  std::span<const double> y) const;
};

/// Median pairwise distance of the pooled samples (deterministic subsample of
/// at most max_points points when larger).
[[nodiscard]] KernelSpec median_heuristic_kernel(const SampleSet &p,
                                                 const SampleSet &q,
                                                 Eigen::Index max_points = 1000);

/// Unbiased U-statistic estimate of MMD^2. Needs at least two points per side.
[[nodiscard]] double mmd_squared(const SampleSet &p, const SampleSet &q,
                                 const KernelSpec &kernel);
/// Biased V-statistic estimate of MMD^2 (always >= 0 up to rounding).
[[nodiscard]] double mmd_squared_biased(const SampleSet &p, const SampleSet &q,
                                        const KernelSpec &kernel);
/// V-statistic MMD^2 between two weighted empirical measures.
[[nodiscard]] double mmd_squared_weighted(const SampleSet &p, std::span<const double> wp,
                                          const SampleSet &q, std::span<const double> wq,
                                          const KernelSpec &kernel);
/// sqrt(max(0, mmd2))
[[nodiscard]] inline double mmd_from_squared(double mmd2) {
  return std::sqrt(std::max(0.0, mmd2));
}

enum class CostMetric { Euclidean, Cosine };

struct SinkhornConfig {
  double epsilon = 1.0;
  double rho_marginal = 20.0;
  int max_iters = 1000;
  double tol = 1e-9;
  CostMetric cost_metric = CostMetric::Euclidean;

  /// Defaults by data dimension: D <= 20 -> (1, 20); 21-30 -> (2, 10);
  /// 31-60 -> (2, 5). Larger D uses the last bracket.
  static SinkhornConfig for_dimension(Eigen::Index dim);
};

struct SinkhornResult {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;
  /// false when the residual stayed above tol after max_iters
  bool converged = true;
  Matrix plan;
};

[[nodiscard]] Matrix cost_matrix(const SampleSet &a, const SampleSet &b, CostMetric metric);

/// Unbalanced entropic OT with KL marginal penalties, solved by log-domain
/// scaling iterations. Non-convergence is reported through the result.
[[nodiscard]] SinkhornResult sinkhorn_unbalanced(std::span<const double> r,
                                                 std::span<const double> c,
                                                 const Matrix &cost,
                                                 const SinkhornConfig &cfg);
[[nodiscard]] SinkhornResult sinkhorn_unbalanced(std::span<const double> r,
                                                 std::span<const double> c,
                                                 const SampleSet &points_r,
                                                 const SampleSet &points_c,
                                                 const SinkhornConfig &cfg);

} // namespace acdc::divergence
