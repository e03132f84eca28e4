#include "acdc/matfact.hpp"

#include <numbers>

namespace acdc::matfact {

FaResult fit_gaussian_fa(const DataMatrix &x, int k, const FaConfig &cfg) {
  require(k >= 1, ErrorCode::InvalidArgument, "K must be >= 1");
  require(cfg.max_iters >= 0 && cfg.tol > 0.0, ErrorCode::InvalidArgument,
          "invalid factor analysis configuration");
  require(x.rows() > k, ErrorCode::TooFewSamples,
          "need N > K (N=" + std::to_string(x.rows()) + ", K=" + std::to_string(k) + ")");
  require(x.cols() >= k, ErrorCode::InvalidArgument,
          "need D >= K (D=" + std::to_string(x.cols()) + ", K=" + std::to_string(k) + ")");
  require(x.allFinite(), ErrorCode::InvalidArgument, "data contains non-finite values");

  FaResult res;
  PmfParams &p = res.params;
  p.noise = NoiseModel::Gaussian;
  p.offset = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - p.offset.transpose();

  Eigen::BDCSVD<Matrix> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector &sv = svd.singularValues();
  const double cutoff = 1e-10 * std::max(sv(0), std::numeric_limits<double>::min());
  res.rank_deficient = sv(k - 1) <= cutoff;

  Matrix z = svd.matrixU().leftCols(k) * sv.head(k).asDiagonal();
  Matrix phi = svd.matrixV().leftCols(k).transpose();
  double prev = (xc - z * phi).squaredNorm();
  res.trace.push_back(prev);
  for (int it = 0; it < cfg.max_iters; ++it) {
    const Matrix zt = (phi * phi.transpose()).completeOrthogonalDecomposition().solve(phi * xc.transpose());
    z = zt.transpose();
    phi = (z.transpose() * z).completeOrthogonalDecomposition().solve(z.transpose() * xc);
    const double err = (xc - z * phi).squaredNorm();
    res.trace.push_back(err);
    const bool done = prev - err <= cfg.tol * std::max(prev, std::numeric_limits<double>::min());
    prev = err;
    if (done)
      break;
  }

  // unit-norm signatures with a nonnegative coordinate sum; scale goes to the loadings
  for (int c = 0; c < k; ++c) {
    double norm = phi.row(c).norm();
    if (norm == 0.0)
      continue;
    if (phi.row(c).sum() < 0.0)
      norm = -norm;
    phi.row(c) /= norm;
    z.col(c) *= norm;
  }
  const Matrix resid = xc - z * phi;
  const Vector sigma2 = resid.colwise().squaredNorm().transpose() / static_cast<double>(x.rows());
  p.signatures = std::move(phi);
  p.loadings = std::move(z);
  p.noise_var = (sigma2 / static_cast<double>(k)).transpose().replicate(k, 1);
  p = permuted(p, canonical_order(p));
  return res;
}

double gaussian_loglik(const DataMatrix &x, const PmfParams &params) {
  require(params.noise == NoiseModel::Gaussian, ErrorCode::InvalidArgument,
          "Gaussian log-likelihood needs Gaussian-mode parameters");
  const Matrix mu = params.mean();
  require(mu.rows() == x.rows() && mu.cols() == x.cols(), ErrorCode::DimensionMismatch,
          "parameters do not match the data");
  const Vector var = params.noise_var.colwise().sum().transpose();
  double ll = 0.0;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    require(var(d) > 0.0, ErrorCode::ZeroVariance,
            "noise variance of dimension " + std::to_string(d) + " is zero");
    const double c = -0.5 * std::log(2.0 * std::numbers::pi * var(d));
    ll += static_cast<double>(x.rows()) * c -
          0.5 * (x.col(d) - mu.col(d)).squaredNorm() / var(d);
  }
  return ll;
}

} // namespace acdc::matfact
