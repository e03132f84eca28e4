#include "acdc/divergence.hpp"
#include "acdc/parallel.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <numbers>

namespace acdc::divergence {

DensityOracle gaussian_oracle(const Vector &mean, const Matrix &cov) {
  require(cov.rows() == mean.size() && cov.cols() == mean.size(),
          ErrorCode::DimensionMismatch, "covariance does not match mean");
  Eigen::LLT<Matrix> llt(cov);
  require(llt.info() == Eigen::Success, ErrorCode::NotSPD,
          "covariance is not positive definite");
  const Matrix l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  const auto dim = static_cast<double>(mean.size());
  const double norm = -0.5 * (dim * std::log(2.0 * std::numbers::pi) + log_det);
  return {[l, mean, norm](std::span<const double> x) {
            Vector diff = Eigen::Map<const Vector>(x.data(), mean.size()) - mean;
            l.triangularView<Eigen::Lower>().solveInPlace(diff);
            return norm - 0.5 * diff.squaredNorm();
          },
          Support::FullSpace};
}

DensityOracle normal_oracle(double mean, double sd) {
  require(sd > 0.0, ErrorCode::NotSPD, "standard deviation must be positive");
  const double norm = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd);
  return {[mean, sd, norm](std::span<const double> x) {
            const double z = (x[0] - mean) / sd;
            return norm - 0.5 * z * z;
          },
          Support::FullSpace};
}

DensityOracle unit_cube_oracle() {
  return {[](std::span<const double> x) {
            for (double v : x)
              if (v < 0.0 || v > 1.0)
                return -std::numeric_limits<double>::infinity();
            return 0.0;
          },
          Support::UnitCube};
}

int effective_k(const KnnKlConfig &cfg, Eigen::Index n) {
  if (cfg.k_mode == KMode::Fixed)
    return cfg.k;
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))));
}

namespace {

/// log of the volume of the D-ball of radius r
double log_ball_volume(Eigen::Index dim, double r) {
  const double d = static_cast<double>(dim);
  return 0.5 * d * std::log(std::numbers::pi) + d * std::log(r) -
         std::lgamma(0.5 * d + 1.0);
}

} // namespace

double kl_knn_one_sample(const SampleSet &samples, const DensityOracle &q,
                         const KnnKlConfig &cfg) {
  const Eigen::Index n = samples.size();
  require(samples.dim() >= 1, ErrorCode::InvalidArgument, "dimension must be >= 1");
  require(cfg.k_mode != KMode::Fixed || cfg.k >= 1, ErrorCode::InvalidArgument,
          "k must be >= 1");
  const int k = effective_k(cfg, n);
  require(n > k, ErrorCode::TooFewSamples,
          "need N > k (N=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");

  const SampleSet pts = jitter_duplicates(samples, cfg.jitter_seed);
  const std::vector<double> radii = kth_neighbor_distances(pts, k, cfg.use_tree);

  std::vector<double> terms(static_cast<std::size_t>(n));
  const double log_ratio = std::log(static_cast<double>(k) / static_cast<double>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = radii[static_cast<std::size_t>(i)];
    if (!(r > 0.0))
      throw Error(ErrorCode::DegenerateRadius,
                  "zero k-NN radius at point " + std::to_string(i));
    terms[static_cast<std::size_t>(i)] =
        log_ratio - log_ball_volume(pts.dim(), r) - q(pts.point(i));
  }
  double sum = 0.0;
  for (double t : terms)
    sum += t;
  double kl = sum / static_cast<double>(n);
  if (cfg.k_mode == KMode::Fixed && cfg.bias_correction)
    kl += boost::math::digamma(static_cast<double>(k)) - std::log(static_cast<double>(k));
  return kl;
}

double kl_knn_per_coordinate(const SampleSet &samples,
                             std::span<const DensityOracle> q_marginals,
                             const KnnKlConfig &cfg) {
  const Eigen::Index dim = samples.dim();
  require(static_cast<Eigen::Index>(q_marginals.size()) == dim,
          ErrorCode::DimensionMismatch,
          "expected " + std::to_string(dim) + " marginal densities, got " +
              std::to_string(q_marginals.size()));
  std::vector<double> per_coord(static_cast<std::size_t>(dim));
  for (Eigen::Index d = 0; d < dim; ++d) {
    RowMajorMatrix col = samples.points().col(d);
    try {
      KnnKlConfig c = cfg;
      c.jitter_seed = cfg.jitter_seed + static_cast<std::uint64_t>(d);
      per_coord[static_cast<std::size_t>(d)] =
          kl_knn_one_sample(SampleSet(std::move(col)), q_marginals[static_cast<std::size_t>(d)], c);
    } catch (const Error &e) {
      rethrow_with_context(e, "coordinate " + std::to_string(d));
    }
  }
  double sum = 0.0;
  for (double v : per_coord)
    sum += v;
  return sum;
}

double kl_gaussian_closed_form(const Vector &mu1, const Matrix &sigma1,
                               const Vector &mu2, const Matrix &sigma2) {
  const Eigen::Index dim = mu1.size();
  require(mu2.size() == dim && sigma1.rows() == dim && sigma1.cols() == dim &&
              sigma2.rows() == dim && sigma2.cols() == dim,
          ErrorCode::DimensionMismatch, "Gaussian parameter sizes disagree");
  Eigen::LLT<Matrix> llt1(sigma1), llt2(sigma2);
  require(llt1.info() == Eigen::Success, ErrorCode::NotSPD, "Sigma1 is not SPD");
  require(llt2.info() == Eigen::Success, ErrorCode::NotSPD, "Sigma2 is not SPD");
  const Matrix l1 = llt1.matrixL(), l2 = llt2.matrixL();
  const double log_det1 = 2.0 * l1.diagonal().array().log().sum();
  const double log_det2 = 2.0 * l2.diagonal().array().log().sum();
  // tr(S2^-1 S1) = |L2^-1 L1|_F^2
  const Matrix m = l2.triangularView<Eigen::Lower>().solve(l1);
  const Vector diff = l2.triangularView<Eigen::Lower>().solve(mu2 - mu1);
  const double kl = 0.5 * (log_det2 - log_det1 - static_cast<double>(dim) +
                           m.squaredNorm() + diff.squaredNorm());
  return std::max(0.0, kl);
}

} // namespace acdc::divergence
