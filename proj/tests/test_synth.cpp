#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "acdc/synth.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace acdc;
using namespace acdc::synth;

namespace {

/// |observed - expected| within k standard errors of a binomial proportion.
bool binomial_ok(double count, double n, double p, double k = 4.0) {
  return std::abs(count - n * p) <= k * std::sqrt(n * p * (1 - p));
}

double sample_skewness(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v)
    m += x;
  m /= static_cast<double>(v.size());
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    m2 += (x - m) * (x - m);
    m3 += (x - m) * (x - m) * (x - m);
  }
  m2 /= static_cast<double>(v.size());
  m3 /= static_cast<double>(v.size());
  return m3 / std::pow(m2, 1.5);
}

std::size_t hash_matrix(const DataMatrix &x) {
  std::size_t h = 1469598103934665603ULL;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    h = (h ^ std::hash<double>{}(x.data()[i])) * 1099511628211ULL;
  return h;
}

} // namespace

TEST_CASE("correlation matrix") {
  const Matrix s = correlation_matrix(6, 1.5);
  for (Eigen::Index i = 0; i < 6; ++i)
    CHECK(s(i, i) == 1.0);
  CHECK(s(0, 2) == doctest::Approx(std::exp(-4.0 / 2.25)));
  CHECK(s.isApprox(testing::banded_correlation(6, 1.5)));
  for (Eigen::Index d : {2, 5, 10, 25, 50, 100})
    for (double sc : {0.1, 0.5, 1.0, 2.0, 3.0}) {
      Eigen::LLT<Matrix> llt(correlation_matrix(d, sc));
      CHECK(llt.info() == Eigen::Success);
    }
  // wider kernels are positive definite in exact arithmetic but not in double
  // precision beyond moderate D; the sampler still has to cope
  CHECK(Eigen::LLT<Matrix>(correlation_matrix(25, 5.0)).info() == Eigen::Success);
  SkewMixtureSpec spec;
  spec.weights = Vector::Ones(1);
  spec.locations = Matrix::Zero(1, 100);
  spec.scales = {correlation_matrix(100, 5.0)};
  spec.shapes = Matrix::Constant(1, 100, 0.5);
  spec.n = 50;
  spec.seed = 3;
  const LabeledData d = gen_skew_normal_mixture(spec);
  CHECK(d.x.allFinite());
  CHECK_THROWS_AS((void)correlation_matrix(3, 0.0), Error);
}

TEST_CASE("skew-normal mixture without skew matches Gaussian mixture moments") {
  SkewMixtureSpec spec;
  spec.weights = Vector(2);
  spec.weights << 0.3, 0.7;
  spec.locations = Matrix(2, 2);
  spec.locations << -2, 1, 3, 0;
  spec.scales = {correlation_matrix(2, 1.0), 2.0 * Matrix::Identity(2, 2)};
  spec.shapes = Matrix::Zero(2, 2);
  spec.n = 20000;
  spec.seed = 11;
  const LabeledData d = gen_skew_normal_mixture(spec);

  Vector mean = Vector::Zero(2);
  Matrix second = Matrix::Zero(2, 2);
  for (int c = 0; c < 2; ++c) {
    const Vector m = spec.locations.row(c).transpose();
    mean += spec.weights(c) * m;
    second += spec.weights(c) * (spec.scales[static_cast<std::size_t>(c)] + m * m.transpose());
  }
  const Matrix cov = second - mean * mean.transpose();
  const Vector emp_mean = d.x.colwise().mean().transpose();
  const Matrix centred = d.x.rowwise() - emp_mean.transpose();
  const Matrix emp_cov = centred.transpose() * centred / static_cast<double>(spec.n);
  const double n = static_cast<double>(spec.n);
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK(std::abs(emp_mean(i) - mean(i)) <= 3.0 * std::sqrt(cov(i, i) / n));
    // standard error of the sample variance from the empirical fourth moment
    double m4 = 0.0;
    for (Eigen::Index r = 0; r < d.x.rows(); ++r)
      m4 += std::pow(d.x(r, i) - emp_mean(i), 4);
    m4 /= n;
    CHECK(std::abs(emp_cov(i, i) - cov(i, i)) <= 3.0 * std::sqrt((m4 - cov(i, i) * cov(i, i)) / n));
  }
  double ones = 0.0;
  for (int l : d.labels)
    ones += l;
  CHECK(binomial_ok(ones, n, 0.7, 3.0));
}

TEST_CASE("different scenario") {
  const SkewMixtureSpec spec = skew_different_spec(10000, 7);
  CHECK(spec.shapes(0, 0) == -10.0);
  CHECK(spec.shapes(1, 0) == -1.0);
  const LabeledData d = gen_skew_normal_mixture(spec);
  std::vector<double> a, b;
  for (Eigen::Index i = 0; i < d.x.rows(); ++i)
    (d.labels[static_cast<std::size_t>(i)] == 0 ? a : b).push_back(d.x(i, 0));
  CHECK(binomial_ok(static_cast<double>(a.size()), 10000.0, 0.5, 3.0));
  // the skew-normal with shape -10 is close to a negated half-normal: skewness near -0.96
  CHECK(sample_skewness(a) < -0.8);
  CHECK(sample_skewness(b) < -0.05);
  CHECK(sample_skewness(b) > sample_skewness(a));
  // negative shape pulls the mass below the location
  double mean_a = 0.0;
  for (double x : a)
    mean_a += x;
  mean_a /= static_cast<double>(a.size());
  CHECK(mean_a == doctest::Approx(-3.0 - std::sqrt(2.0 / std::numbers::pi) * 10.0 / std::sqrt(101.0)).epsilon(0.01));

  const LabeledData again = gen_skew_normal_mixture(spec);
  CHECK(again.x == d.x);
  CHECK(again.labels == d.labels);
  CHECK(hash_matrix(gen_skew_normal_mixture(skew_different_spec(10000, 8)).x) != hash_matrix(d.x));
}

TEST_CASE("labels follow the generating component") {
  SkewMixtureSpec spec = benchmark_skew_spec(4, 3, 2000, 0.05, 21);
  const LabeledData d = gen_skew_normal_mixture(spec);
  for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
    Eigen::Index nearest = 0;
    (spec.locations.rowwise() - d.x.row(i)).rowwise().squaredNorm().minCoeff(&nearest);
    CHECK(nearest == d.labels[static_cast<std::size_t>(i)]);
  }
  CHECK(std::abs(spec.weights.sum() - 1.0) < 1e-12);
  CHECK(spec.weights.minCoeff() > 0.0);
}

TEST_CASE("Gaussian mixture sampler") {
  SUBCASE("single component mean") {
    Vector w = Vector::Ones(1);
    Matrix mu(1, 3);
    mu << 1, -2, 5;
    const Matrix cov = testing::banded_correlation(3, 1.0) * 2.0;
    const LabeledData d = gen_gmm(w, mu, {cov}, 5000, 4);
    for (Eigen::Index i = 0; i < 3; ++i)
      CHECK(std::abs(d.x.col(i).mean() - mu(0, i)) <= 4.0 * std::sqrt(cov(i, i) / 5000.0));
  }
  SUBCASE("weights and reproducibility") {
    const GmmSpec s = separated_gmm_spec(3, 2, 8.0);
    CHECK((s.means.row(0) - s.means.row(1)).norm() == doctest::Approx(8.0));
    const LabeledData a = gen_gmm(s.weights, s.means, s.covs, 6000, 9);
    const LabeledData b = gen_gmm(s.weights, s.means, s.covs, 6000, 9);
    CHECK(a.labels == b.labels);
    CHECK(a.x == b.x);
    std::vector<double> counts(3, 0.0);
    for (int l : a.labels)
      counts[static_cast<std::size_t>(l)] += 1.0;
    for (double c : counts)
      CHECK(binomial_ok(c, 6000.0, 1.0 / 3.0));
    CHECK(hash_matrix(gen_gmm(s.weights, s.means, s.covs, 6000, 10).x) != hash_matrix(a.x));
  }
  CHECK_THROWS_AS((void)gen_gmm(Vector::Ones(1), Matrix::Zero(1, 2), {-Matrix::Identity(2, 2)}, 10, 1),
                  Error);
}

TEST_CASE("Poisson factorization data") {
  Matrix phi(2, 4);
  phi << 0.1, 0.2, 0.3, 0.4, 0.5, 0.25, 0.125, 0.125;
  Matrix z(1, 2);
  z << 20.0, 8.0;
  const Eigen::RowVectorXd mu = z * phi;

  const int reps = 10000;
  const auto moments = [&](PmfScheme scheme, double perturb) {
    PmfSynthSpec spec{phi, z, scheme};
    spec.perturb_scale = perturb;
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(4), sq = Eigen::RowVectorXd::Zero(4);
    for (int r = 0; r < reps; ++r) {
      spec.seed = static_cast<std::uint64_t>(r);
      const PmfData d = gen_pmf_data(spec);
      sum += d.x.row(0);
      sq += d.x.row(0).cwiseProduct(d.x.row(0));
    }
    const Eigen::RowVectorXd mean = sum / reps;
    return std::pair{mean, Eigen::RowVectorXd(sq / reps - mean.cwiseProduct(mean))};
  };

  SUBCASE("well specified") {
    const auto [mean, var] = moments(PmfScheme::WellSpecified, 0.01);
    for (Eigen::Index d = 0; d < 4; ++d)
      CHECK(std::abs(mean(d) - mu(d)) <= 3.0 * std::sqrt(mu(d) / reps));
  }
  SUBCASE("vanishing perturbation") {
    const auto [mean, var] = moments(PmfScheme::Perturbed, 1e-6);
    for (Eigen::Index d = 0; d < 4; ++d) {
      CHECK(std::abs(mean(d) - mu(d)) <= 4.0 * std::sqrt(mu(d) / reps));
      CHECK(var(d) / mu(d) == doctest::Approx(1.0).epsilon(0.1));
    }
  }
  SUBCASE("overdispersed") {
    PmfSynthSpec spec{phi, Matrix::Constant(500, 2, 15.0), PmfScheme::Overdispersed};
    spec.dispersion = 2.0;
    spec.seed = 5;
    const PmfData d = gen_pmf_data(spec);
    double ratio = 0.0;
    for (Eigen::Index c = 0; c < 4; ++c) {
      const double m = d.x.col(c).mean();
      const double v = (d.x.col(c).array() - m).square().sum() / (d.x.rows() - 1.0);
      ratio += v / m / 4.0;
    }
    CHECK(ratio > 1.2);
  }
  SUBCASE("contaminated adds mass everywhere") {
    PmfSynthSpec spec{phi, Matrix::Constant(2000, 2, 10.0), PmfScheme::Contaminated};
    spec.exposure = 0.5;
    spec.seed = 6;
    const PmfData d = gen_pmf_data(spec);
    const double total = d.x.sum() / static_cast<double>(d.x.rows());
    CHECK(total == doctest::Approx(20.0 + 0.5 * 10.0).epsilon(0.03));
    CHECK(d.x.minCoeff() >= 0.0);
    CHECK((d.x.array() == d.x.array().round()).all());
  }
  SUBCASE("determinism and validation") {
    const PmfTruth t = random_pmf_truth(3, 12, 50, 100.0, 4);
    CHECK((t.signatures.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    PmfSynthSpec spec{t.signatures, t.loadings, PmfScheme::Perturbed};
    spec.seed = 2;
    CHECK(gen_pmf_data(spec).x == gen_pmf_data(spec).x);
    spec.seed = 3;
    const std::size_t h3 = hash_matrix(gen_pmf_data(spec).x);
    spec.seed = 2;
    CHECK(h3 != hash_matrix(gen_pmf_data(spec).x));
    spec.signatures(0, 0) += 0.5;
    CHECK_THROWS_AS((void)gen_pmf_data(spec), Error);
  }
}

TEST_CASE("factor analysis data") {
  const FaData d = gen_fa_data(3, 8, 400, 0.5, 12);
  CHECK(d.x.rows() == 400);
  CHECK(d.truth.signatures.rows() == 3);
  CHECK(d.labels.size() == 400);
  const Matrix mean = d.truth.loadings * d.truth.signatures;
  const Matrix resid = (d.x - mean).rowwise() - d.truth.offset.transpose();
  // total noise per cell is N(0, noise_sd^2)
  CHECK(std::abs(resid.array().square().mean() - 0.25) < 0.02);
  CHECK(gen_fa_data(3, 8, 400, 0.5, 12).x == d.x);
}
