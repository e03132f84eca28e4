#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "acdc/metrics.hpp"
#include "test_util.hpp"

#include <numeric>

using namespace acdc;
using namespace acdc::metrics;

namespace {

LabelVector random_labels(Rng &rng, std::size_t n, int k) {
  std::uniform_int_distribution<int> u(0, k - 1);
  LabelVector l(n);
  for (int &v : l)
    v = u(rng);
  return l;
}

/// Brute force over all permutations of the columns.
double brute_force_cost(const Matrix &cost) {
  std::vector<int> cols(static_cast<std::size_t>(cost.cols()));
  std::iota(cols.begin(), cols.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Eigen::Index r = 0; r < cost.rows(); ++r)
      s += cost(r, cols[static_cast<std::size_t>(r)]);
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

double cost_of(const Matrix &cost, const std::vector<int> &assign) {
  double s = 0.0;
  for (std::size_t r = 0; r < assign.size(); ++r)
    s += cost(static_cast<Eigen::Index>(r), assign[r]);
  return s;
}

matfact::PmfParams random_params(Rng &rng, int k, Eigen::Index dim, Eigen::Index n) {
  std::gamma_distribution<double> g(1.0, 1.0);
  matfact::PmfParams p;
  p.signatures.resize(k, dim);
  for (Eigen::Index i = 0; i < p.signatures.size(); ++i)
    p.signatures.data()[i] = g(rng);
  for (int c = 0; c < k; ++c)
    p.signatures.row(c) /= p.signatures.row(c).sum();
  p.loadings.resize(n, k);
  for (Eigen::Index i = 0; i < p.loadings.size(); ++i)
    p.loadings.data()[i] = 10.0 * g(rng);
  return p;
}

} // namespace

TEST_CASE("F-measure") {
  CHECK(f_measure({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(f_measure({0, 0, 1, 1}, {5, 5, 2, 2}) == doctest::Approx(1.0));
  // both true clusters best-match the single predicted cluster: F = 2 * 0.5 / 1.5
  CHECK(f_measure({0, 0, 1, 1}, {0, 0, 0, 0}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS((void)f_measure({0, 1}, {0}), Error);
}

TEST_CASE("ARI and AMI") {
  const LabelVector a{0, 0, 0, 1, 1, 1, 2, 2, 2};
  const LabelVector b{1, 1, 1, 2, 2, 2, 0, 0, 0};
  CHECK(ari(a, b) == doctest::Approx(1.0));
  CHECK(ami(a, b) == doctest::Approx(1.0));

  // contingency [[2,1],[0,3]]: index 4, expected 6 * 7 / 15 = 2.8, max 6.5
  CHECK(ari({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 1}) == doctest::Approx(1.2 / 3.7));

  Rng rng = make_rng(21, {1});
  double ari_sum = 0.0, ami_sum = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const LabelVector x = random_labels(rng, 2000, 4), y = random_labels(rng, 2000, 3);
    ari_sum += ari(x, y);
    ami_sum += ami(x, y);
    CHECK(std::abs(ari(x, y)) <= 0.05);
    CHECK(std::abs(ami(x, y)) <= 0.05);
    CHECK(ari(x, y) == doctest::Approx(ari(y, x)));
  }
  CHECK(std::abs(ari_sum / 20) <= 0.01);
  CHECK(std::abs(ami_sum / 20) <= 0.01);
}

TEST_CASE("selection accuracy") {
  const SelectionAccuracy s = selection_accuracy({3, 5}, {3, 3});
  CHECK(s.mae == doctest::Approx(1.0));
  CHECK(s.zero_one == doctest::Approx(0.5));
  CHECK(s.median_dev == doctest::Approx(1.0));
  const SelectionAccuracy t = selection_accuracy({2, 3, 7}, {3, 3, 3});
  CHECK(t.median_dev == doctest::Approx(0.0));
  CHECK(t.mae == doctest::Approx(5.0 / 3.0));
  CHECK_THROWS_AS((void)selection_accuracy({1}, {1, 2}), Error);
}

TEST_CASE("cosine and relative average differences") {
  Vector a(3), b(3);
  a << 1, 0, 0;
  b << 0, 1, 0;
  CHECK(cosine_difference(a, a) == doctest::Approx(0.0));
  CHECK(cosine_difference(a, b) == doctest::Approx(1.0));
  CHECK(cosine_difference(2.0 * a, a) == doctest::Approx(0.0));
  try {
    (void)cosine_difference(Vector::Zero(3), a);
    FAIL("expected ZeroVector");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::ZeroVector);
  }
  Vector z(2), zs(2);
  z << 3, 5;
  zs << 2, 2;
  CHECK(relative_average_difference(z, zs) == doctest::Approx(1.0));
  try {
    (void)relative_average_difference(z, Vector::Zero(2));
    FAIL("expected ZeroTruthMean");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::ZeroTruthMean);
  }
}

TEST_CASE("assignment solvers agree with brute force") {
  Rng rng = make_rng(99, {2});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 6);
  for (int rep = 0; rep < 50; ++rep) {
    const int cols = size(rng);
    const int rows = std::uniform_int_distribution<int>(1, cols)(rng);
    Matrix cost(rows, cols);
    for (Eigen::Index i = 0; i < cost.size(); ++i)
      cost.data()[i] = rep % 5 == 0 ? std::round(3 * u(rng)) : u(rng);
    const auto h = solve_assignment(cost);
    const auto e = solve_assignment_exhaustive(cost);
    REQUIRE(h.size() == static_cast<std::size_t>(rows));
    std::vector<int> used = h;
    std::sort(used.begin(), used.end());
    CHECK(std::adjacent_find(used.begin(), used.end()) == used.end());
    CHECK(cost_of(cost, h) == doctest::Approx(cost_of(cost, e)).epsilon(1e-12));
    if (rows == cols)
      CHECK(cost_of(cost, h) == doctest::Approx(brute_force_cost(cost)).epsilon(1e-12));
  }
  CHECK_THROWS_AS((void)solve_assignment(Matrix::Zero(3, 2)), Error);
}

TEST_CASE("component matching") {
  Rng rng = make_rng(5, {3});
  const matfact::PmfParams truth = random_params(rng, 3, 12, 40);

  SUBCASE("permuted copy matches perfectly") {
    matfact::PmfParams est = truth;
    const std::vector<int> perm{2, 0, 1};
    for (int c = 0; c < 3; ++c) {
      est.signatures.row(c) = truth.signatures.row(perm[static_cast<std::size_t>(c)]);
      est.loadings.col(c) = truth.loadings.col(perm[static_cast<std::size_t>(c)]);
    }
    const MatchResult m = match_components(est, truth);
    CHECK(m.objective == doctest::Approx(0.0).epsilon(1e-12));
    for (const auto &[e, t] : m.pairs)
      CHECK(t == perm[static_cast<std::size_t>(e)]);
    CHECK_FALSE(m.fewer_than_truth);
  }

  SUBCASE("fewer estimated components than the truth") {
    matfact::PmfParams est;
    est.signatures = truth.signatures.topRows(2);
    est.loadings = truth.loadings.leftCols(2);
    const MatchResult m = match_components(est, truth);
    CHECK(m.fewer_than_truth);
    REQUIRE(m.pairs.size() == 2);
    CHECK(m.pairs[0] == std::pair<int, int>{0, 0});
    CHECK(m.pairs[1] == std::pair<int, int>{1, 1});
    CHECK(m.objective == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("solvers agree") {
    for (int rep = 0; rep < 10; ++rep) {
      const matfact::PmfParams est = random_params(rng, 4, 12, 40);
      const double a = match_components(est, truth).objective;
      const double b = match_components(est, truth, MatchSolver::Exhaustive).objective;
      CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
  }

  SUBCASE("incompatible shapes") {
    const matfact::PmfParams other = random_params(rng, 3, 10, 40);
    try {
      (void)match_components(other, truth);
      FAIL("expected IncompatibleDims");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::IncompatibleDims);
    }
  }
}
