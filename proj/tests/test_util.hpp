#pragma once

#include "acdc/common.hpp"
#include "acdc/random.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace acdc::testing {

/// Draws N points from N(mean, cov) with the given engine (test-only sampler).
inline Matrix draw_gaussian(Rng &rng, const Vector &mean, const Matrix &cov,
                            Eigen::Index n) {
  const Matrix l = cov.llt().matrixL();
  std::normal_distribution<double> z;
  Matrix out(n, mean.size());
  Vector w(mean.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index d = 0; d < mean.size(); ++d)
      w(d) = z(rng);
    out.row(i) = (mean + l * w).transpose();
  }
  return out;
}

/// Random SPD matrix A A^T + 0.1 I.
inline Matrix random_spd(Rng &rng, Eigen::Index dim) {
  std::normal_distribution<double> z;
  Matrix a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j)
      a(i, j) = z(rng);
  return a * a.transpose() + 0.1 * Matrix::Identity(dim, dim);
}

inline Vector random_vector(Rng &rng, Eigen::Index dim, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    v(i) = z(rng);
  return v;
}

/// Sigma_ij = exp(-(i-j)^2 / s^2), built independently of the library.
inline Matrix banded_correlation(Eigen::Index dim, double s) {
  Matrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double t = static_cast<double>(i - j);
      m(i, j) = std::exp(-t * t / (s * s));
    }
  return m;
}

/// Kolmogorov-Smirnov statistic of values against Unif(0,1).
inline double ks_uniform_statistic(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double f = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic p-value of the KS statistic with Stephens' small-sample correction.
inline double ks_pvalue(double stat, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * stat;
  if (lambda < 0.2)
    return 1.0;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-16)
      break;
  }
  return std::clamp(p, 0.0, 1.0);
}

} // namespace acdc::testing
