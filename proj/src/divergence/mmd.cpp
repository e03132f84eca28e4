#include "acdc/divergence.hpp"

#include <numeric>

namespace acdc::divergence {

namespace {

void check_dims(const SampleSet &p, const SampleSet &q) {
  require(p.size() > 0 && q.size() > 0, ErrorCode::EmptySample,
          "MMD needs nonempty samples");
  require(p.dim() == q.dim(), ErrorCode::DimensionMismatch,
          "sample dimensions differ: " + std::to_string(p.dim()) + " vs " +
              std::to_string(q.dim()));
}

/// Sum of k(x_i, y_j) over all pairs (optionally skipping i == j).
double kernel_sum(const SampleSet &x, const SampleSet &y, const KernelSpec &kernel,
                  bool skip_diagonal) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = 0; j < y.size(); ++j)
      if (!skip_diagonal || i != j)
        s += kernel(x.point(i), y.point(j));
  return s;
}

} // namespace

double KernelSpec::operator()(std::span<const double> x,
                              std::span<const double> y) const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] - y[i];
    d2 += t * t;
  }
  return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
}

KernelSpec median_heuristic_kernel(const SampleSet &p, const SampleSet &q,
                                   Eigen::Index max_points) {
  check_dims(p, q);
  const Eigen::Index total = p.size() + q.size();
  const Eigen::Index stride = std::max<Eigen::Index>(1, (total + max_points - 1) / max_points);
  std::vector<std::span<const double>> pool;
  for (Eigen::Index i = 0; i < total; i += stride)
    pool.push_back(i < p.size() ? p.point(i) : q.point(i - p.size()));
  std::vector<double> dists;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < pool[i].size(); ++d) {
        const double t = pool[i][d] - pool[j][d];
        d2 += t * t;
      }
      dists.push_back(std::sqrt(d2));
    }
  if (dists.empty())
    return {1.0};
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return {*mid > 0.0 ? *mid : 1.0};
}

double mmd_squared(const SampleSet &p, const SampleSet &q, const KernelSpec &kernel) {
  check_dims(p, q);
  require(p.size() >= 2 && q.size() >= 2, ErrorCode::TooFewSamples,
          "unbiased MMD needs at least two points per sample");
  const double m = static_cast<double>(p.size()), n = static_cast<double>(q.size());
  return kernel_sum(p, p, kernel, true) / (m * (m - 1.0)) +
         kernel_sum(q, q, kernel, true) / (n * (n - 1.0)) -
         2.0 * kernel_sum(p, q, kernel, false) / (m * n);
}

double mmd_squared_biased(const SampleSet &p, const SampleSet &q,
                          const KernelSpec &kernel) {
  check_dims(p, q);
  const std::vector<double> wp(static_cast<std::size_t>(p.size()),
                               1.0 / static_cast<double>(p.size()));
  const std::vector<double> wq(static_cast<std::size_t>(q.size()),
                               1.0 / static_cast<double>(q.size()));
  return mmd_squared_weighted(p, wp, q, wq, kernel);
}

double mmd_squared_weighted(const SampleSet &p, std::span<const double> wp,
                            const SampleSet &q, std::span<const double> wq,
                            const KernelSpec &kernel) {
  check_dims(p, q);
  require(static_cast<Eigen::Index>(wp.size()) == p.size() &&
              static_cast<Eigen::Index>(wq.size()) == q.size(),
          ErrorCode::LengthMismatch, "weights do not match sample sizes");
  auto quad = [&](const SampleSet &x, std::span<const double> wx, const SampleSet &y,
                  std::span<const double> wy) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      for (Eigen::Index j = 0; j < y.size(); ++j)
        s += wx[static_cast<std::size_t>(i)] * wy[static_cast<std::size_t>(j)] *
             kernel(x.point(i), y.point(j));
    return s;
  };
  return quad(p, wp, p, wp) + quad(q, wq, q, wq) - 2.0 * quad(p, wp, q, wq);
}

} // namespace acdc::divergence
