#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "acdc/baselines.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace acdc;
using namespace acdc::baselines;

namespace {

/// Isotropic blobs centred at the given rows, n per blob; labels follow the blob.
std::pair<DataMatrix, LabelVector> blobs(Rng &rng, const Matrix &centres, Eigen::Index n,
                                         double sd) {
  std::normal_distribution<double> z(0.0, sd);
  DataMatrix x(centres.rows() * n, centres.cols());
  LabelVector l(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::Index c = i % centres.rows();
    for (Eigen::Index d = 0; d < x.cols(); ++d)
      x(i, d) = centres(c, d) + z(rng);
    l[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return {x, l};
}

std::map<int, LabelVector> kmeans_labelings(const DataMatrix &x, int k_max, std::uint64_t seed) {
  std::map<int, LabelVector> m;
  for (int k = 1; k <= k_max; ++k)
    m[k] = kmeans(x, k, seed).labels;
  return m;
}

Matrix three_centres() {
  Matrix c(3, 2);
  c << 0, 0, 10, 0, 5, 9;
  return c;
}

} // namespace

TEST_CASE("BIC formulas") {
  CHECK(std::abs(bic_mixture(-150.0, 2, 100) - 309.2103) < 5e-5);
  CHECK(bic_mixture(-300.0, 2, 100) > bic_mixture(-150.0, 2, 100));
  CHECK(bic_mixture(-12.5, 0, 40) == doctest::Approx(25.0));
  CHECK(bic_pmf(-10.0, 1, 50) == doctest::Approx(std::log(50.0) + 20.0));
  // N is an integer here, so swap the K log N term for the log N = 2 value: 3 * 2 + 2 log 3!
  CHECK(std::abs(bic_pmf(0.0, 3, 100) - 3 * std::log(100.0) + 6.0 - 9.583519) < 5e-7);
  for (int k = 1; k < 8; ++k)
    CHECK(bic_pmf(-5.0, k + 1, 300) - bic_pmf(-5.0, k, 300) ==
          doctest::Approx(std::log(300.0) + 2.0 * std::log(k + 1.0)).epsilon(1e-12));
  for (int k = 1; k < 8; ++k)
    CHECK(bic_pmf(-5.0, k, 300) - bic_mixture(-5.0, k, 300) ==
          doctest::Approx(2.0 * std::lgamma(k + 1.0)).epsilon(1e-12));

  const BaselineResult r = bic_select({{1, 5.0}, {2, 3.0}, {3, 3.0}});
  CHECK(r.k_hat == 2);
}

TEST_CASE("within-cluster sum of squares and elbow") {
  DataMatrix x(2, 1);
  x << 0, 2;
  CHECK(wcss(x, {0, 0}) == doctest::Approx(2.0));
  CHECK(wcss(x, {0, 1}) == 0.0);
  CHECK(wcss(x, {7, 7}) == doctest::Approx(2.0));

  Rng rng = make_rng(3, {1});
  const auto [data, truth] = blobs(rng, three_centres(), 50, 1.0);
  // refining clusters never increases WCSS
  LabelVector coarse(truth.size(), 0), fine = truth, finer = truth;
  for (std::size_t i = 0; i < finer.size(); i += 2)
    finer[i] += 3;
  CHECK(wcss(data, fine) <= wcss(data, coarse));
  CHECK(wcss(data, finer) <= wcss(data, fine));

  CHECK(elbow_select({{1, 100}, {2, 20}, {3, 18}, {4, 17}}).k_hat == 2);
  CHECK(elbow_select({{1, 100}, {2, 20}, {3, 18}, {4, 17}}).per_k_scores.at(2) == doctest::Approx(78.0));
  CHECK(elbow_select({{1, 10}, {2, 8}, {3, 6}, {4, 4}, {5, 2}}).k_hat == 2);
  // strictly convex: 1/K^2 has its largest curvature at the first interior point
  std::map<int, double> convex;
  for (int k = 1; k <= 6; ++k)
    convex[k] = 1.0 / (k * k);
  const BaselineResult e = elbow_select(convex);
  int arg = 2;
  for (int k = 2; k <= 5; ++k)
    if (convex[k - 1] - 2 * convex[k] + convex[k + 1] > convex[arg - 1] - 2 * convex[arg] + convex[arg + 1])
      arg = k;
  CHECK(e.k_hat == arg);
  try {
    (void)elbow_select({{1, 3.0}, {2, 1.0}});
    FAIL("expected TooFewPoints");
  } catch (const Error &err) {
    CHECK(err.code() == ErrorCode::TooFewPoints);
  }
}

TEST_CASE("silhouette") {
  Rng rng = make_rng(5, {2});
  Matrix centres(2, 2);
  centres << 0, 0, 50, 0;
  const auto [x, truth] = blobs(rng, centres, 40, 0.5);
  CHECK(silhouette_score(x, truth) > 0.9);

  LabelVector relabeled = truth;
  for (int &l : relabeled)
    l = 1 - l;
  CHECK(silhouette_score(x, relabeled) == doctest::Approx(silhouette_score(x, truth)).epsilon(1e-12));

  const auto labelings = kmeans_labelings(x, 4, 9);
  CHECK(silhouette_select(x, labelings).k_hat == 2);

  const DataMatrix same = DataMatrix::Ones(10, 3);
  CHECK(silhouette_score(same, {0, 0, 0, 0, 0, 1, 1, 1, 1, 1}) == 0.0);
  CHECK(silhouette_score(x, LabelVector(truth.size(), 0)) == 0.0);
}

TEST_CASE("k-means") {
  Rng rng = make_rng(8, {3});
  const auto [x, truth] = blobs(rng, three_centres(), 60, 0.7);
  const KMeansResult r = kmeans(x, 3, 4);
  CHECK(r.wcss == doctest::Approx(wcss(x, truth)).epsilon(1e-9));
  const KMeansResult again = kmeans(x, 3, 4);
  CHECK(again.labels == r.labels);
  CHECK_THROWS_AS((void)kmeans(x, 0, 4), Error);
}

TEST_CASE("gap statistic") {
  int one = 0, three = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_rng(seed, {4});
    Matrix origin = Matrix::Zero(1, 2);
    const auto [blob, l1] = blobs(rng, origin, 200, 1.0);
    if (gap_select(blob, kmeans_labelings(blob, 5, seed), 10, seed).k_hat == 1)
      ++one;
    const auto [three_blobs, l3] = blobs(rng, three_centres(), 70, 0.8);
    if (gap_select(three_blobs, kmeans_labelings(three_blobs, 5, seed), 10, seed).k_hat == 3)
      ++three;
  }
  CHECK(one >= 6);
  CHECK(three >= 6);

  Rng rng = make_rng(1, {5});
  const auto [x, truth] = blobs(rng, three_centres(), 50, 0.8);
  const auto labelings = kmeans_labelings(x, 5, 1);
  const BaselineResult a = gap_select(x, labelings, 8, 33);
  const BaselineResult b = gap_select(x, labelings, 8, 33);
  CHECK(a.k_hat == b.k_hat);
  CHECK(a.per_k_scores == b.per_k_scores);
  CHECK(gap_select(x, labelings, 8, 33, GapRule::Argmax).k_hat == 3);
}

TEST_CASE("parallel analysis") {
  SUBCASE("pure noise") {
    int small = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng = make_rng(seed, {6});
      const Matrix x = testing::draw_gaussian(rng, Vector::Zero(8), Matrix::Identity(8, 8), 300);
      if (parallel_analysis(x, 20, 0.95, seed).k_hat <= 1)
        ++small;
    }
    CHECK(small >= 9);
  }

  Rng rng = make_rng(2, {7});
  const Eigen::Index n = 300, dim = 10;
  const Matrix scores = testing::draw_gaussian(rng, Vector::Zero(2), Matrix::Identity(2, 2), n);
  Matrix basis(2, dim);
  for (Eigen::Index i = 0; i < basis.size(); ++i)
    basis.data()[i] = std::normal_distribution<double>(0.0, 3.0)(rng);
  const Matrix x = scores * basis + testing::draw_gaussian(rng, Vector::Zero(dim),
                                                           0.01 * Matrix::Identity(dim, dim), n);

  SUBCASE("rank two signal") {
    const BaselineResult r = parallel_analysis(x, 20, 0.95, 3);
    CHECK(r.k_hat == 2);
    CHECK(r.aux.at("eigenvalues").size() == static_cast<std::size_t>(dim));
    CHECK(parallel_analysis(x, 20, 0.95, 3).aux.at("thresholds") == r.aux.at("thresholds"));
  }

  SUBCASE("monotone in the quantile") {
    const Matrix noisy = x + testing::draw_gaussian(rng, Vector::Zero(dim), 4.0 * Matrix::Identity(dim, dim), n);
    int prev = dim + 1;
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95, 0.99}) {
      const int k = parallel_analysis(noisy, 20, q, 11).k_hat;
      CHECK(k <= prev);
      prev = k;
    }
  }

  SUBCASE("row order does not matter") {
    Matrix reversed = x.colwise().reverse();
    const BaselineResult a = parallel_analysis(x, 10, 0.9, 5), b = parallel_analysis(reversed, 10, 0.9, 5);
    CHECK(a.k_hat == b.k_hat);
    for (std::size_t j = 0; j < a.aux.at("thresholds").size(); ++j)
      CHECK(a.aux.at("thresholds")[j] == doctest::Approx(b.aux.at("thresholds")[j]).epsilon(1e-9));
  }

  CHECK_THROWS_AS((void)parallel_analysis(x, 0, 0.95, 1), Error);
  CHECK_THROWS_AS((void)parallel_analysis(x, 5, 1.0, 1), Error);
}
