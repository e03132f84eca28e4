#include "acdc/metrics.hpp"

#include <cmath>
#include <limits>

namespace acdc::metrics {

double cosine_difference(const Vector &phi, const Vector &phi_star) {
  require(phi.size() == phi_star.size(), ErrorCode::DimensionMismatch,
          "signature lengths differ");
  const double a = phi.norm(), b = phi_star.norm();
  require(a > 0.0 && b > 0.0, ErrorCode::ZeroVector, "cosine difference of a zero vector");
  return 1.0 - phi.dot(phi_star) / (a * b);
}

double relative_average_difference(const Vector &z, const Vector &z_star) {
  require(z.size() > 0 && z_star.size() > 0, ErrorCode::EmptyInput, "empty loading vector");
  const double m_star = z_star.mean();
  require(m_star != 0.0, ErrorCode::ZeroTruthMean, "true loadings have zero mean");
  return std::abs(z.mean() - m_star) / m_star;
}

std::vector<int> solve_assignment(const Matrix &cost) {
  const auto n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
  require(n <= m, ErrorCode::InvalidArgument, "assignment needs rows <= cols");
  require(cost.allFinite(), ErrorCode::InvalidArgument, "assignment costs must be finite");
  // Hungarian method with potentials, 1-based with a virtual column 0
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0), way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js])
          continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[js];
        if (cur < minv[js]) {
          minv[js] = cur;
          way[js] = j0;
        }
        if (minv[js] < delta) {
          delta = minv[js];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        const auto js = static_cast<std::size_t>(j);
        if (used[js]) {
          u[static_cast<std::size_t>(p[js])] += delta;
          v[js] -= delta;
        } else {
          minv[js] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] != 0)
      col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return col;
}

std::vector<int> solve_assignment_exhaustive(const Matrix &cost) {
  const auto n = static_cast<int>(cost.rows()), m = static_cast<int>(cost.cols());
  require(n <= m, ErrorCode::InvalidArgument, "assignment needs rows <= cols");
  require(m <= 20, ErrorCode::InvalidArgument, "exhaustive assignment supports at most 20 columns");
  // best[mask]: cheapest way to give rows 0..popcount(mask)-1 the columns in mask
  const std::size_t states = std::size_t{1} << m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(states, inf);
  std::vector<int> last(states, -1);
  best[0] = 0.0;
  for (std::size_t mask = 0; mask < states; ++mask) {
    if (best[mask] == inf)
      continue;
    const int row = __builtin_popcountll(mask);
    if (row >= n)
      continue;
    for (int j = 0; j < m; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      if (mask & bit)
        continue;
      const double c = best[mask] + cost(row, j);
      if (c < best[mask | bit]) {
        best[mask | bit] = c;
        last[mask | bit] = j;
      }
    }
  }
  std::size_t arg = 0;
  double arg_cost = inf;
  for (std::size_t mask = 0; mask < states; ++mask)
    if (__builtin_popcountll(mask) == n && best[mask] < arg_cost) {
      arg_cost = best[mask];
      arg = mask;
    }
  std::vector<int> col(static_cast<std::size_t>(n));
  for (int row = n - 1; row >= 0; --row) {
    const int j = last[arg];
    col[static_cast<std::size_t>(row)] = j;
    arg &= ~(std::size_t{1} << j);
  }
  return col;
}

Matrix match_cost(const matfact::PmfParams &est, const matfact::PmfParams &truth) {
  require(est.dim() == truth.dim() && est.n() == truth.n(), ErrorCode::IncompatibleDims,
          "fitted and true factorizations differ in D or N");
  Matrix c(est.k(), truth.k());
  for (int a = 0; a < est.k(); ++a)
    for (int b = 0; b < truth.k(); ++b)
      c(a, b) = cosine_difference(est.signatures.row(a).transpose(),
                                  truth.signatures.row(b).transpose()) +
                0.1 * std::tanh(relative_average_difference(est.loadings.col(a),
                                                            truth.loadings.col(b)));
  return c;
}

MatchResult match_components(const matfact::PmfParams &est, const matfact::PmfParams &truth,
                             MatchSolver solver) {
  const Matrix c = match_cost(est, truth);
  const bool transposed = c.rows() > c.cols();
  const Matrix oriented = transposed ? Matrix(c.transpose()) : c;
  const std::vector<int> col = solver == MatchSolver::Assignment
                                   ? solve_assignment(oriented)
                                   : solve_assignment_exhaustive(oriented);
  MatchResult res;
  res.fewer_than_truth = est.k() < truth.k();
  for (std::size_t i = 0; i < col.size(); ++i) {
    const int a = transposed ? col[i] : static_cast<int>(i);
    const int b = transposed ? static_cast<int>(i) : col[i];
    res.pairs.emplace_back(a, b);
    res.objective += oriented(static_cast<Eigen::Index>(i), col[i]);
    res.l_phi = std::max(res.l_phi, cosine_difference(est.signatures.row(a).transpose(),
                                                      truth.signatures.row(b).transpose()));
    res.l_z = std::max(res.l_z, relative_average_difference(est.loadings.col(a),
                                                            truth.loadings.col(b)));
  }
  return res;
}

} // namespace acdc::metrics
