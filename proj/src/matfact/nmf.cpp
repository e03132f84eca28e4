#include "acdc/matfact.hpp"
#include "acdc/parallel.hpp"

#include <numeric>
#include <optional>

namespace acdc::matfact {

namespace {

constexpr double kFloor = 1e-12;

bool signature_less(const Matrix &phi, int a, int b) {
  for (Eigen::Index d = 0; d < phi.cols(); ++d)
    if (phi(a, d) != phi(b, d))
      return phi(a, d) < phi(b, d);
  return false;
}

/// X ./ mu on cells with x > 0, zero elsewhere.
Matrix ratio(const DataMatrix &x, const Matrix &mu) {
  Matrix r(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xv = x.data()[i];
    r.data()[i] = xv > 0.0 ? xv / std::max(mu.data()[i], kFloor) : 0.0;
  }
  return r;
}

struct Factors {
  Matrix z;   // N x K
  Matrix phi; // K x D
};

Factors initial_factors(const DataMatrix &x, int k, const NmfConfig &cfg, int restart) {
  const Eigen::Index n = x.rows(), dim = x.cols();
  Factors f{Matrix(n, k), Matrix(k, dim)};
  if (cfg.init == NmfInit::SvdAbs && restart == 0) {
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double pad = 1e-6 * std::max(x.mean(), 1.0);
    for (int c = 0; c < k; ++c) {
      const double s = c < svd.singularValues().size() ? std::sqrt(svd.singularValues()(c)) : 0.0;
      for (Eigen::Index i = 0; i < n; ++i)
        f.z(i, c) = (c < svd.matrixU().cols() ? std::abs(svd.matrixU()(i, c)) * s : 0.0) + pad;
      for (Eigen::Index d = 0; d < dim; ++d)
        f.phi(c, d) = (c < svd.matrixV().cols() ? std::abs(svd.matrixV()(d, c)) * s : 0.0) + pad;
    }
    return f;
  }
  Rng rng = make_rng(cfg.seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(restart)});
  std::gamma_distribution<double> g(1.0, 1.0);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index d = 0; d < dim; ++d)
      f.phi(c, d) = g(rng);
    f.phi.row(c) /= f.phi.row(c).sum();
  }
  const Vector rows = x.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c)
      f.z(i, c) = std::max(rows(i), 1.0) / k * g(rng);
  return f;
}

NmfResult run_nmf(const DataMatrix &x, int k, const NmfConfig &cfg, int restart) {
  Factors f = initial_factors(x, k, cfg, restart);
  NmfResult res;
  res.restart = restart;
  Matrix mu = f.z * f.phi;
  double prev = generalized_kl(x, mu);
  res.trace.push_back(prev);
  for (int it = 0; it < cfg.max_iters; ++it) {
    // signatures first, then loadings
    Matrix r = ratio(x, mu);
    const Vector zsum = f.z.colwise().sum().transpose().cwiseMax(kFloor);
    f.phi.array() *= (f.z.transpose() * r).array().colwise() / zsum.array();
    mu.noalias() = f.z * f.phi;
    r = ratio(x, mu);
    const Eigen::RowVectorXd phisum = f.phi.rowwise().sum().transpose().cwiseMax(kFloor);
    f.z.array() *= (r * f.phi.transpose()).array().rowwise() / phisum.array();
    mu.noalias() = f.z * f.phi;
    const double obj = generalized_kl(x, mu);
    res.trace.push_back(obj);
    const bool done = std::abs(prev - obj) <= cfg.tol * std::max(std::abs(prev), kFloor);
    prev = obj;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.objective = prev;
  res.params.noise = NoiseModel::Poisson;
  res.params.signatures = std::move(f.phi);
  res.params.loadings = std::move(f.z);
  return res;
}

void normalize_signatures(PmfParams &p) {
  for (int c = 0; c < p.k(); ++c) {
    const double s = p.signatures.row(c).sum();
    if (s > 0.0) {
      p.signatures.row(c) /= s;
      p.loadings.col(c) *= s;
    } else {
      p.signatures.row(c).setConstant(1.0 / static_cast<double>(p.dim()));
      p.loadings.col(c).setZero();
    }
  }
}

} // namespace

Matrix PmfParams::mean() const {
  Matrix m = loadings * signatures;
  if (noise == NoiseModel::Gaussian && offset.size() == m.cols())
    m.rowwise() += offset.transpose();
  return m;
}

void require_counts(const DataMatrix &x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      const double v = x(i, d);
      require(std::isfinite(v) && v >= 0.0, ErrorCode::NegativeValue,
              "count matrix entry (" + std::to_string(i) + ", " + std::to_string(d) +
                  ") is negative or not finite");
      require(v == std::floor(v), ErrorCode::NonInteger,
              "count matrix entry (" + std::to_string(i) + ", " + std::to_string(d) +
                  ") is not an integer");
    }
}

double generalized_kl(const DataMatrix &x, const Matrix &mu) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xv = x.data()[i], m = mu.data()[i];
    if (xv > 0.0)
      s += xv * std::log(xv / std::max(m, kFloor)) - xv;
    s += m;
  }
  return s;
}

double poisson_loglik(const DataMatrix &x, const PmfParams &params) {
  const Matrix mu = params.mean();
  require(mu.rows() == x.rows() && mu.cols() == x.cols(), ErrorCode::DimensionMismatch,
          "parameters do not match the count matrix");
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xv = x.data()[i], m = mu.data()[i];
    if (xv > 0.0)
      ll += m > 0.0 ? xv * std::log(m) : -std::numeric_limits<double>::infinity();
    ll += -m - std::lgamma(xv + 1.0);
  }
  return ll;
}

std::vector<int> canonical_order(const PmfParams &params) {
  std::vector<double> mass(static_cast<std::size_t>(params.k()));
  for (int c = 0; c < params.k(); ++c)
    mass[static_cast<std::size_t>(c)] = params.noise == NoiseModel::Poisson
                                            ? params.loadings.col(c).sum()
                                            : params.loadings.col(c).squaredNorm();
  std::vector<int> order(mass.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (mass[static_cast<std::size_t>(a)] != mass[static_cast<std::size_t>(b)])
      return mass[static_cast<std::size_t>(a)] > mass[static_cast<std::size_t>(b)];
    return signature_less(params.signatures, a, b);
  });
  return order;
}

PmfParams permuted(const PmfParams &params, const std::vector<int> &order) {
  PmfParams out = params;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto dst = static_cast<Eigen::Index>(j);
    out.signatures.row(dst) = params.signatures.row(order[j]);
    out.loadings.col(dst) = params.loadings.col(order[j]);
    if (params.noise_var.rows() == params.k())
      out.noise_var.row(dst) = params.noise_var.row(order[j]);
  }
  return out;
}

NmfResult fit_poisson_nmf(const DataMatrix &x, int k, const NmfConfig &cfg) {
  require(k >= 1, ErrorCode::InvalidArgument, "K must be >= 1");
  require(cfg.max_iters >= 1 && cfg.tol > 0.0 && cfg.n_restarts >= 1,
          ErrorCode::InvalidArgument, "invalid NMF configuration");
  require(x.rows() >= k && x.cols() >= k, ErrorCode::TooFewSamples,
          "need N, D >= K (N=" + std::to_string(x.rows()) + ", D=" + std::to_string(x.cols()) +
              ", K=" + std::to_string(k) + ")");
  require_counts(x);

  std::vector<std::optional<NmfResult>> runs(static_cast<std::size_t>(cfg.n_restarts));
  parallel_for(runs.size(), [&](std::size_t r) { runs[r] = run_nmf(x, k, cfg, static_cast<int>(r)); });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (runs[r]->objective < runs[best]->objective)
      best = r;
  NmfResult out = std::move(*runs[best]);
  normalize_signatures(out.params);
  out.params = permuted(out.params, canonical_order(out.params));
  return out;
}

} // namespace acdc::matfact
