#include "acdc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace acdc::synth {

namespace {

int draw_label(Rng &rng, const Vector &cum) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * cum(cum.size() - 1);
  for (Eigen::Index k = 0; k + 1 < cum.size(); ++k)
    if (u < cum(k))
      return static_cast<int>(k);
  return static_cast<int>(cum.size() - 1);
}

Vector cumulative(const Vector &weights) {
  require(weights.size() > 0 && weights.minCoeff() >= 0.0 && weights.sum() > 0.0,
          ErrorCode::InvalidArgument, "mixture weights must be nonnegative with positive sum");
  Vector cum(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cum.begin());
  return cum;
}

Matrix cholesky(const Matrix &m, const std::string &what) {
  Eigen::LLT<Matrix> llt(m);
  require(llt.info() == Eigen::Success, ErrorCode::NotSPD, what + " is not positive definite");
  return llt.matrixL();
}

/// Cholesky factor, or a symmetric square root when the matrix is only
/// numerically semidefinite (smooth correlation kernels in high dimension).
Matrix square_root(const Matrix &m, const std::string &what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success)
    return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const Vector ev = es.eigenvalues();
  require(ev.minCoeff() >= -1e-10 * std::max(1.0, ev.maxCoeff()), ErrorCode::NotSPD,
          what + " is not positive semidefinite");
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

/// Dirichlet draw; zero concentrations give zero entries.
Vector dirichlet(Rng &rng, const Vector &alpha) {
  Vector v(alpha.size());
  for (Eigen::Index d = 0; d < alpha.size(); ++d)
    v(d) = alpha(d) > 0.0 ? std::gamma_distribution<double>(alpha(d), 1.0)(rng) : 0.0;
  const double s = v.sum();
  if (s > 0.0)
    return v / s;
  // every gamma underflowed: put the mass on the largest concentration
  Eigen::Index arg = 0;
  alpha.maxCoeff(&arg);
  v.setZero();
  v(arg) = 1.0;
  return v;
}

double poisson(Rng &rng, double mean) {
  if (mean <= 0.0)
    return 0.0;
  return static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
}

} // namespace

Matrix correlation_matrix(Eigen::Index dim, double sigma_corr) {
  require(dim >= 1 && sigma_corr > 0.0, ErrorCode::InvalidArgument,
          "correlation matrix needs D >= 1 and sigma_corr > 0");
  Matrix s(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      const auto g = static_cast<double>(i - j);
      s(i, j) = std::exp(-g * g / (sigma_corr * sigma_corr));
    }
  return s;
}

LabeledData gen_skew_normal_mixture(const SkewMixtureSpec &spec) {
  const int k = spec.k();
  const Eigen::Index dim = spec.dim();
  require(spec.locations.rows() == k && spec.shapes.rows() == k && spec.shapes.cols() == dim &&
              static_cast<int>(spec.scales.size()) == k,
          ErrorCode::DimensionMismatch, "skew mixture spec has inconsistent shapes");
  const Vector cum = cumulative(spec.weights);

  struct Component {
    Vector omega, delta;
    Matrix chol;
  };
  std::vector<Component> comps;
  for (int c = 0; c < k; ++c) {
    const Matrix &sigma = spec.scales[static_cast<std::size_t>(c)];
    require(sigma.rows() == dim && sigma.cols() == dim, ErrorCode::DimensionMismatch,
            "scale matrix has the wrong size");
    Component comp;
    comp.omega = sigma.diagonal().cwiseSqrt();
    require(comp.omega.minCoeff() > 0.0, ErrorCode::NotSPD, "scale matrix has a zero diagonal");
    const Vector inv = comp.omega.cwiseInverse();
    const Matrix corr = inv.asDiagonal() * sigma * inv.asDiagonal();
    const Vector gamma = spec.shapes.row(c).transpose();
    const Vector cg = corr * gamma;
    comp.delta = cg / std::sqrt(1.0 + gamma.dot(cg));
    comp.chol = square_root(corr - comp.delta * comp.delta.transpose(),
                         "skew-normal residual covariance of component " + std::to_string(c));
    comps.push_back(std::move(comp));
  }

  LabeledData out{DataMatrix(spec.n, dim), LabelVector(static_cast<std::size_t>(spec.n))};
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(i)});
    const int c = draw_label(rng, cum);
    const Component &comp = comps[static_cast<std::size_t>(c)];
    const double z0 = std::abs(normal(rng));
    Vector w(dim);
    for (Eigen::Index d = 0; d < dim; ++d)
      w(d) = normal(rng);
    const Vector y = comp.delta * z0 + comp.chol * w;
    out.x.row(i) = spec.locations.row(c) + comp.omega.cwiseProduct(y).transpose();
    out.labels[static_cast<std::size_t>(i)] = c;
  }
  return out;
}

SkewMixtureSpec skew_different_spec(Eigen::Index n, std::uint64_t seed) {
  SkewMixtureSpec s;
  s.weights = Vector::Constant(2, 0.5);
  s.locations = Matrix(2, 1);
  s.locations << -3.0, 3.0;
  s.scales = {Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  s.shapes = Matrix(2, 1);
  s.shapes << -10.0, -1.0;
  s.n = n;
  s.seed = seed;
  return s;
}

SkewMixtureSpec benchmark_skew_spec(int k, Eigen::Index dim, Eigen::Index n, double alpha,
                                    std::uint64_t seed) {
  require(k >= 1 && dim >= 1 && alpha > 0.0, ErrorCode::InvalidArgument,
          "benchmark spec needs K, D >= 1 and alpha > 0");
  Rng rng = make_rng(seed, {0x5e7});
  std::normal_distribution<double> normal;
  constexpr double spacing = 6.0;
  SkewMixtureSpec s;
  s.n = n;
  s.seed = derive_seed(seed, {0xda7a});
  s.weights = dirichlet(rng, Vector::Constant(k, 5.0));
  // floor tiny weights at 0.05 and take the excess from the others
  if (constexpr double floor = 0.05; k * floor < 1.0 && s.weights.minCoeff() < floor) {
    const Vector excess = (s.weights.array() - floor).max(0.0).matrix();
    s.weights = (Vector::Constant(k, floor) + excess * ((1.0 - k * floor) / excess.sum())).eval();
  }
  s.locations.resize(k, dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    std::vector<double> col(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
      col[static_cast<std::size_t>(c)] = spacing * c + normal(rng);
    std::shuffle(col.begin(), col.end(), rng);
    for (int c = 0; c < k; ++c)
      s.locations(c, d) = col[static_cast<std::size_t>(c)];
  }
  s.shapes.resize(k, dim);
  for (int c = 0; c < k; ++c) {
    const double centre = k == 1 ? 5.0 : 2.0 + 6.0 * c / (k - 1);
    for (Eigen::Index d = 0; d < dim; ++d)
      s.shapes(c, d) = centre + normal(rng);
  }
  for (int c = 0; c < k; ++c) {
    double sep = std::numeric_limits<double>::infinity();
    for (int o = 0; o < k; ++o)
      if (o != c)
        sep = std::min(sep, (s.locations.row(c) - s.locations.row(o)).norm());
    if (!std::isfinite(sep))
      sep = spacing;
    const double scale = alpha * sep;
    s.scales.push_back(Matrix::Identity(dim, dim) * scale * scale);
  }
  return s;
}

LabeledData gen_gmm(const Vector &weights, const Matrix &means, const std::vector<Matrix> &covs,
                    Eigen::Index n, std::uint64_t seed) {
  const auto k = weights.size();
  const Eigen::Index dim = means.cols();
  require(means.rows() == k && static_cast<Eigen::Index>(covs.size()) == k,
          ErrorCode::DimensionMismatch, "GMM spec has inconsistent shapes");
  const Vector cum = cumulative(weights);
  std::vector<Matrix> chol;
  for (Eigen::Index c = 0; c < k; ++c)
    chol.push_back(cholesky(covs[static_cast<std::size_t>(c)],
                            "covariance of component " + std::to_string(c)));
  LabeledData out{DataMatrix(n, dim), LabelVector(static_cast<std::size_t>(n))};
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
    const int c = draw_label(rng, cum);
    Vector w(dim);
    for (Eigen::Index d = 0; d < dim; ++d)
      w(d) = normal(rng);
    out.x.row(i) = means.row(c) + (chol[static_cast<std::size_t>(c)] * w).transpose();
    out.labels[static_cast<std::size_t>(i)] = c;
  }
  return out;
}

GmmSpec separated_gmm_spec(int k, Eigen::Index dim, double separation) {
  require(k >= 1 && dim >= 1 && separation > 0.0, ErrorCode::InvalidArgument,
          "separated GMM needs K, D >= 1 and a positive separation");
  GmmSpec s;
  s.weights = Vector::Constant(k, 1.0 / k);
  s.means = Matrix::Zero(k, dim);
  if (dim == 1 || k <= 2) {
    for (int c = 0; c < k; ++c)
      s.means(c, 0) = separation * (c - 0.5 * (k - 1));
  } else {
    const double radius = separation / (2.0 * std::sin(std::numbers::pi / k));
    for (int c = 0; c < k; ++c) {
      const double a = 2.0 * std::numbers::pi * c / k;
      s.means(c, 0) = radius * std::cos(a);
      s.means(c, 1) = radius * std::sin(a);
    }
  }
  s.covs.assign(static_cast<std::size_t>(k), Matrix::Identity(dim, dim));
  return s;
}

std::string_view to_string(PmfScheme s) noexcept {
  switch (s) {
  case PmfScheme::WellSpecified: return "well-specified";
  case PmfScheme::Perturbed: return "perturbed";
  case PmfScheme::Contaminated: return "contaminated";
  case PmfScheme::Overdispersed: return "overdispersed";
  }
  return "well-specified";
}

PmfTruth random_pmf_truth(int k, Eigen::Index dim, Eigen::Index n, double mean_count,
                          std::uint64_t seed, double concentration, double loading_shape) {
  require(k >= 1 && dim >= 1 && n >= 1 && mean_count > 0.0 && concentration > 0.0 &&
              loading_shape > 0.0,
          ErrorCode::InvalidArgument, "invalid PMF truth parameters");
  Rng rng = make_rng(seed, {0x516});
  PmfTruth t{Matrix(k, dim), Matrix(n, k)};
  for (int c = 0; c < k; ++c)
    t.signatures.row(c) = dirichlet(rng, Vector::Constant(dim, concentration)).transpose();
  std::gamma_distribution<double> g(loading_shape, mean_count / k / loading_shape);
  for (Eigen::Index i = 0; i < t.loadings.size(); ++i)
    t.loadings.data()[i] = g(rng);
  return t;
}

PmfData gen_pmf_data(const PmfSynthSpec &spec) {
  const Matrix &phi = spec.signatures;
  const Matrix &z = spec.loadings;
  require(phi.rows() == z.cols() && phi.rows() >= 1, ErrorCode::DimensionMismatch,
          "signatures and loadings disagree on K");
  require(phi.minCoeff() >= 0.0 && z.minCoeff() >= 0.0, ErrorCode::InvalidArgument,
          "signatures and loadings must be nonnegative");
  for (Eigen::Index c = 0; c < phi.rows(); ++c)
    require(std::abs(phi.row(c).sum() - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
            "signature " + std::to_string(c) + " does not sum to one");
  require(spec.perturb_scale > 0.0 && spec.exposure >= 0.0 && spec.dispersion > 0.0,
          ErrorCode::InvalidArgument, "invalid PMF scheme parameter");

  const Eigen::Index n = z.rows(), dim = phi.cols();
  const double contamination = spec.exposure * z.mean();
  PmfData out{DataMatrix(n, dim), {phi, z}};
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(i)});
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(dim);
    for (Eigen::Index c = 0; c < phi.rows(); ++c) {
      if (spec.scheme == PmfScheme::Perturbed)
        mean += z(i, c) * dirichlet(rng, phi.row(c).transpose() / spec.perturb_scale).transpose();
      else
        mean += z(i, c) * phi.row(c);
    }
    if (spec.scheme == PmfScheme::Contaminated)
      mean += contamination * dirichlet(rng, Vector::Ones(dim)).transpose();
    for (Eigen::Index d = 0; d < dim; ++d) {
      double rate = mean(d);
      if (spec.scheme == PmfScheme::Overdispersed && rate > 0.0)
        rate = std::gamma_distribution<double>(spec.dispersion, rate / spec.dispersion)(rng);
      out.x(i, d) = poisson(rng, rate);
    }
  }
  return out;
}

FaData gen_fa_data(int k, Eigen::Index dim, Eigen::Index n, double noise_sd, std::uint64_t seed) {
  require(k >= 1 && dim >= 1 && n >= 1 && noise_sd > 0.0, ErrorCode::InvalidArgument,
          "invalid factor analysis parameters");
  Rng rng = make_rng(seed, {0xfa});
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution spike(0.1);
  FaData out;
  matfact::PmfParams &p = out.truth;
  p.noise = matfact::NoiseModel::Gaussian;
  p.signatures.resize(k, dim);
  for (Eigen::Index i = 0; i < p.signatures.size(); ++i)
    p.signatures.data()[i] = normal(rng);
  p.loadings.resize(n, k);
  for (Eigen::Index i = 0; i < p.loadings.size(); ++i)
    p.loadings.data()[i] = (spike(rng) ? 10.0 : 0.0) + 0.3 * expo(rng);
  p.offset = Vector::LinSpaced(dim, -1.0, 1.0);
  p.noise_var = Matrix::Constant(k, dim, noise_sd * noise_sd / k);
  out.x = DataMatrix::Zero(n, dim);
  out.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng row_rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
    for (Eigen::Index d = 0; d < dim; ++d)
      for (int c = 0; c < k; ++c)
        out.x(i, d) += p.signatures(c, d) * p.loadings(i, c) + p.offset(d) / k +
                       std::sqrt(p.noise_var(c, d)) * normal(row_rng);
    Eigen::Index arg = 0;
    p.loadings.row(i).maxCoeff(&arg);
    out.labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

} // namespace acdc::synth
