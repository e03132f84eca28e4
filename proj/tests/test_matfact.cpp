#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "acdc/matfact.hpp"
#include "test_util.hpp"

using namespace acdc;
using namespace acdc::matfact;

namespace {

DataMatrix poisson_counts(Rng &rng, const Matrix &mean) {
  DataMatrix x(mean.rows(), mean.cols());
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    x.data()[i] = static_cast<double>(std::poisson_distribution<long long>(mean.data()[i])(rng));
  return x;
}

PmfParams random_poisson_params(Rng &rng, Eigen::Index n, Eigen::Index dim, int k) {
  std::gamma_distribution<double> g(1.0, 1.0);
  PmfParams p;
  p.signatures.resize(k, dim);
  p.loadings.resize(n, k);
  for (int c = 0; c < k; ++c) {
    for (Eigen::Index d = 0; d < dim; ++d)
      p.signatures(c, d) = g(rng);
    p.signatures.row(c) /= p.signatures.row(c).sum();
  }
  for (Eigen::Index i = 0; i < p.loadings.size(); ++i)
    p.loadings.data()[i] = 40.0 * g(rng);
  return p;
}

struct FaData {
  PmfParams truth;
  DataMatrix x;
};

/// Well-specified factor-analysis draws: y_nk ~ N(phi_k z_nk + offset / K, var_k).
/// Sparse loadings keep a dropped factor visibly non-Gaussian in the residual.
FaData fa_data(Rng &rng, Eigen::Index n, Eigen::Index dim, int k, double noise_sd) {
  std::normal_distribution<double> z;
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution spike(0.1);
  FaData out;
  PmfParams &p = out.truth;
  p.noise = NoiseModel::Gaussian;
  p.signatures.resize(k, dim);
  for (Eigen::Index i = 0; i < p.signatures.size(); ++i)
    p.signatures.data()[i] = z(rng);
  p.loadings.resize(n, k);
  for (Eigen::Index i = 0; i < p.loadings.size(); ++i)
    p.loadings.data()[i] = (spike(rng) ? 10.0 : 0.0) + 0.3 * e(rng);
  p.offset = Vector::LinSpaced(dim, -1.0, 1.0);
  p.noise_var = Matrix::Constant(k, dim, noise_sd * noise_sd / k);
  out.x = DataMatrix::Zero(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index d = 0; d < dim; ++d)
      for (int c = 0; c < k; ++c)
        out.x(i, d) += p.signatures(c, d) * p.loadings(i, c) + p.offset(d) / k +
                       std::sqrt(p.noise_var(c, d)) * z(rng);
  return out;
}

} // namespace

TEST_CASE("Poisson NMF on an exact rank-1 instance") {
  Vector z(6), phi(5);
  z << 1, 2, 3, 4, 5, 6;
  phi << 3, 0, 7, 1, 9;
  const DataMatrix x = z * phi.transpose();
  NmfConfig cfg;
  cfg.max_iters = 3000;
  cfg.tol = 1e-14;
  const auto fit = fit_poisson_nmf(x, 1, cfg);
  const Matrix rec = fit.params.mean();
  CHECK((rec - x).norm() / x.norm() <= 1e-6);
  CHECK(std::abs(fit.params.signatures.row(0).sum() - 1.0) < 1e-9);
}

TEST_CASE("Poisson NMF objective is nonincreasing") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng = make_rng(seed, {21});
    const PmfParams truth = random_poisson_params(rng, 60, 12, 3);
    const DataMatrix x = poisson_counts(rng, truth.mean());
    for (int k : {2, 3, 5}) {
      NmfConfig cfg;
      cfg.seed = seed;
      cfg.max_iters = 300;
      const auto fit = fit_poisson_nmf(x, k, cfg);
      for (std::size_t t = 1; t < fit.trace.size(); ++t)
        CHECK(fit.trace[t] <= fit.trace[t - 1] + 1e-8 * std::abs(fit.trace[t - 1]));
      CHECK(fit.objective == doctest::Approx(generalized_kl(x, fit.params.mean())).epsilon(1e-9));
      for (int c = 0; c < k; ++c)
        CHECK(std::abs(fit.params.signatures.row(c).sum() - 1.0) < 1e-9);
      for (int c = 1; c < k; ++c)
        CHECK(fit.params.loadings.col(c - 1).sum() >= fit.params.loadings.col(c).sum());
      CHECK(fit.params.signatures.minCoeff() >= 0.0);
      CHECK(fit.params.loadings.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("K=1 NMF loadings equal the row sums") {
  Rng rng = make_rng(5);
  const PmfParams truth = random_poisson_params(rng, 40, 8, 2);
  const DataMatrix x = poisson_counts(rng, truth.mean());
  NmfConfig cfg;
  cfg.init = NmfInit::SvdAbs;
  const auto fit = fit_poisson_nmf(x, 1, cfg);
  const Vector rows = x.rowwise().sum();
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    CHECK(fit.params.loadings(i, 0) * fit.params.signatures.row(0).sum() ==
          doctest::Approx(rows(i)).epsilon(1e-9));
}

TEST_CASE("count validation") {
  DataMatrix x(2, 2);
  x << 1, 2, 3, 4.5;
  try {
    (void)fit_poisson_nmf(x, 1, {});
    FAIL("expected NonInteger");
  } catch (const Error &e) {
    CHECK(e.code() == ErrorCode::NonInteger);
  }
  x(1, 1) = -1;
  CHECK_THROWS_AS(require_counts(x), Error);
  x(1, 1) = 4;
  CHECK_NOTHROW(require_counts(x));
  CHECK_THROWS_AS((void)fit_poisson_nmf(x, 3, {}), Error);
}

TEST_CASE("Poisson noise sampler") {
  Rng rng = make_rng(6);
  const PmfParams truth = random_poisson_params(rng, 30, 10, 3);
  const DataMatrix x = poisson_counts(rng, truth.mean());

  SUBCASE("conservation and CDF bounds") {
    const auto t = sample_noise_poisson(truth, x, 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index d = 0; d < x.cols(); ++d) {
        double s = 0.0;
        for (const auto &c : t.contributions)
          s += c(i, d);
        CHECK(s == x(i, d));
      }
    for (const auto &e : t.eps) {
      CHECK(e.allFinite());
      CHECK(e.minCoeff() >= 0.0);
      CHECK(e.maxCoeff() <= 1.0);
    }
    CHECK(t.counts == std::vector<long long>{30, 30, 30});
  }
  SUBCASE("deterministic per seed") {
    const auto a = sample_noise_poisson(truth, x, 4);
    const auto b = sample_noise_poisson(truth, x, 4);
    for (std::size_t c = 0; c < a.eps.size(); ++c)
      CHECK(a.eps[c] == b.eps[c]);
  }
  SUBCASE("K=1 keeps the count and bounds epsilon by the CDF") {
    PmfParams one;
    one.signatures = Matrix::Ones(1, 1);
    one.loadings = Matrix::Ones(1, 1);
    const DataMatrix zero = DataMatrix::Zero(1, 1);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto t = sample_noise_poisson(one, zero, seed);
      CHECK(t.contributions[0](0, 0) == 0.0);
      CHECK(t.eps[0](0, 0) <= std::exp(-1.0));
      CHECK(t.eps[0](0, 0) >= 0.0);
    }
    DataMatrix three(1, 1);
    three << 3;
    const auto t = sample_noise_poisson(one, three, 0);
    CHECK(t.contributions[0](0, 0) == 3.0);
  }
  SUBCASE("zero loadings leave a component unused") {
    PmfParams p = truth;
    p.loadings.col(1).setZero();
    p.loadings(4, 2) = 0.0;
    const auto t = sample_noise_poisson(p, x, 2);
    CHECK(t.counts[1] == 0);
    CHECK(t.counts[2] == 29);
    CHECK(t.contributions[1].isZero());
    const auto row = component_discrepancies(p, x, {}, 0);
    CHECK(row.flags[1] == ComponentFlag::Empty);
  }
  SUBCASE("split frequencies follow the multinomial") {
    PmfParams p;
    p.signatures = Matrix::Ones(3, 1);
    p.loadings = Matrix(1, 3);
    p.loadings << 1.0, 2.0, 5.0;
    DataMatrix cell(1, 1);
    cell << 10;
    const int reps = 20000;
    Vector mean = Vector::Zero(3);
    for (int r = 0; r < reps; ++r) {
      const auto t = sample_noise_poisson(p, cell, static_cast<std::uint64_t>(r));
      for (int c = 0; c < 3; ++c)
        mean(c) += t.contributions[static_cast<std::size_t>(c)](0, 0);
    }
    mean /= reps;
    for (int c = 0; c < 3; ++c) {
      const double ph = p.loadings(0, c) / 8.0;
      const double sd = std::sqrt(10.0 * ph * (1.0 - ph) / reps);
      CHECK(std::abs(mean(c) - 10.0 * ph) <= 3.0 * sd);
    }
  }
}

TEST_CASE("Gaussian factor analysis fit") {
  Rng rng = make_rng(7);
  SUBCASE("noiseless rank-K data") {
    FaData data = fa_data(rng, 200, 8, 3, 0.0 + 1e-300);
    const auto fit = fit_gaussian_fa(data.x, 3, {});
    CHECK(fit.params.noise_var.colwise().sum().maxCoeff() <= 1e-10);
    CHECK_FALSE(fit.rank_deficient);
    CHECK((fit.params.mean() - data.x).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("K=1 is the leading singular direction") {
    FaData data = fa_data(rng, 300, 6, 1, 0.3);
    const auto fit = fit_gaussian_fa(data.x, 1, {});
    const Matrix xc = data.x.rowwise() - data.x.colwise().mean();
    Eigen::JacobiSVD<Matrix> svd(xc, Eigen::ComputeThinV);
    const Vector v = svd.matrixV().col(0);
    const Vector phi = fit.params.signatures.row(0).transpose();
    CHECK(std::abs(std::abs(v.dot(phi)) - 1.0) < 1e-10);
  }
  SUBCASE("reconstruction error is nonincreasing") {
    FaData data = fa_data(rng, 150, 7, 2, 0.5);
    const auto fit = fit_gaussian_fa(data.x, 3, {});
    for (std::size_t t = 1; t < fit.trace.size(); ++t)
      CHECK(fit.trace[t] <= fit.trace[t - 1] * (1.0 + 1e-12));
    CHECK(fit.params.noise_var.minCoeff() > 0.0);
    CHECK((fit.params.noise_var.row(0) - fit.params.noise_var.row(2)).norm() == 0.0);
  }
  SUBCASE("rank deficiency is reported") {
    FaData data = fa_data(rng, 100, 5, 1, 0.0);
    const auto fit = fit_gaussian_fa(data.x, 2, {});
    CHECK(fit.rank_deficient);
  }
  SUBCASE("size checks") {
    CHECK_THROWS_AS((void)fit_gaussian_fa(DataMatrix::Zero(3, 5), 3, {}), Error);
  }
}

TEST_CASE("Gaussian noise sampler") {
  Rng rng = make_rng(8);
  SUBCASE("K=1 is the standardized residual") {
    FaData data = fa_data(rng, 50, 4, 1, 0.7);
    const auto t = sample_noise_gaussian(data.truth, data.x, 3);
    for (Eigen::Index i = 0; i < 50; ++i)
      for (Eigen::Index d = 0; d < 4; ++d) {
        CHECK(t.contributions[0](i, d) == data.x(i, d));
        const double zs = (data.x(i, d) - data.truth.signatures(0, d) * data.truth.loadings(i, 0) -
                           data.truth.offset(d)) /
                          0.7;
        CHECK(t.eps[0](i, d) == doctest::Approx(0.5 * std::erfc(-zs / std::sqrt(2.0))).epsilon(1e-12));
      }
    const auto tn = sample_noise_gaussian(data.truth, data.x, 3, NoiseReference::StandardNormal);
    const double zs = (data.x(0, 0) - data.truth.mean()(0, 0)) / 0.7;
    CHECK(tn.eps[0](0, 0) == doctest::Approx(zs).epsilon(1e-12));
  }
  SUBCASE("contributions recompose the data") {
    FaData data = fa_data(rng, 400, 5, 3, 0.5);
    const auto t = sample_noise_gaussian(data.truth, data.x, 4);
    for (Eigen::Index i = 0; i < 400; ++i)
      for (Eigen::Index d = 0; d < 5; ++d) {
        double s = 0.0, scale = 0.0;
        for (const auto &c : t.contributions) {
          s += c(i, d);
          scale = std::max(scale, std::abs(c(i, d)));
        }
        CHECK(std::abs(s - data.x(i, d)) <= 4.0 * std::numeric_limits<double>::epsilon() * scale);
      }
  }
  SUBCASE("epsilon is uniform under the true parameters") {
    FaData data = fa_data(rng, 5000, 3, 3, 1.0);
    const auto t = sample_noise_gaussian(data.truth, data.x, 5);
    for (const auto &e : t.eps) {
      std::vector<double> pool(e.data(), e.data() + e.size());
      const double stat = acdc::testing::ks_uniform_statistic(pool);
      CHECK(acdc::testing::ks_pvalue(stat, pool.size()) > 0.01);
    }
  }
  SUBCASE("zero variance is rejected") {
    FaData data = fa_data(rng, 10, 3, 2, 0.5);
    data.truth.noise_var(1, 2) = 0.0;
    try {
      (void)sample_noise_gaussian(data.truth, data.x, 0);
      FAIL("expected ZeroVariance");
    } catch (const Error &e) {
      CHECK(e.code() == ErrorCode::ZeroVariance);
    }
  }
}

TEST_CASE("PMF component discrepancies") {
  SUBCASE("exact uniform noise gives a small discrepancy") {
    Rng rng = make_rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    NoiseSampleTable t;
    for (int c = 0; c < 2; ++c) {
      RowMajorMatrix e(1500, 4);
      for (Eigen::Index i = 0; i < e.size(); ++i)
        e.data()[i] = u(rng);
      t.eps.push_back(e);
      t.counts.push_back(1500);
    }
    const auto row = discrepancies_from_table(t, {}, 0);
    for (double v : row.values)
      CHECK(v <= 0.1);
  }
  SUBCASE("equivariance under component permutation") {
    Rng rng = make_rng(10);
    const PmfParams truth = random_poisson_params(rng, 400, 6, 3);
    const DataMatrix x = poisson_counts(rng, truth.mean());
    const std::vector<int> perm{2, 0, 1};
    const auto base = component_discrepancies(truth, x, {}, 3);
    const auto moved = component_discrepancies(permuted(truth, perm), x, {}, 3);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(moved.values[j] == base.values[static_cast<std::size_t>(perm[j])]);

    FaData fa = fa_data(rng, 300, 4, 3, 0.5);
    const auto gbase = component_discrepancies(fa.truth, fa.x, {}, 3);
    const auto gmoved = component_discrepancies(permuted(fa.truth, perm), fa.x, {}, 3);
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(gmoved.values[j] == gbase.values[static_cast<std::size_t>(perm[j])]);
  }
  SUBCASE("Poisson reference must be uniform") {
    Rng rng = make_rng(11);
    const PmfParams truth = random_poisson_params(rng, 10, 3, 1);
    PmfDiscrepancyConfig cfg;
    cfg.reference = NoiseReference::StandardNormal;
    CHECK_THROWS_AS((void)component_discrepancies(truth, poisson_counts(rng, truth.mean()), cfg, 0),
                    Error);
  }
}

TEST_CASE("factor analysis: correct K beats every smaller K") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng = make_rng(seed, {404});
    FaData data = fa_data(rng, 2000, 8, 3, 1.0);
    double at_truth = 0.0;
    std::vector<double> smaller;
    for (int k = 1; k <= 3; ++k) {
      const auto fit = fit_gaussian_fa(data.x, k, {});
      const auto row = component_discrepancies(fit.params, data.x, {}, seed);
      const double worst = *std::max_element(row.values.begin(), row.values.end());
      if (k == 3)
        at_truth = worst;
      else
        smaller.push_back(worst);
    }
    if (at_truth < *std::min_element(smaller.begin(), smaller.end()))
      ++wins;
  }
  CHECK(wins >= 8);
}
