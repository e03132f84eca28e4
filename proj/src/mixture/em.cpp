#include "acdc/mixture.hpp"
#include "acdc/parallel.hpp"

#include <numbers>
#include <numeric>

namespace acdc::mixture {

CovMode default_cov_mode(Eigen::Index dim) noexcept {
  return dim <= 10 ? CovMode::Full : CovMode::Diagonal;
}

long long n_free_params(int k, Eigen::Index dim, CovMode mode) noexcept {
  const long long d = dim;
  const long long cov = mode == CovMode::Full ? d * (d + 1) / 2 : d;
  return (k - 1) + k * d + k * cov;
}

namespace {

/// N x K matrix of log(w_k) + log N(x_n; mu_k, Sigma_k).
Matrix weighted_log_densities(const MixtureParams &p, const DataMatrix &x) {
  const Eigen::Index n = x.rows(), dim = x.cols();
  require(dim == p.dim(), ErrorCode::DimensionMismatch,
          "data has " + std::to_string(dim) + " columns, model expects " +
              std::to_string(p.dim()));
  Matrix out(n, p.k());
  const double c0 = -0.5 * static_cast<double>(dim) * std::log(2.0 * std::numbers::pi);
  for (int k = 0; k < p.k(); ++k) {
    Eigen::LLT<Matrix> llt(p.covs[static_cast<std::size_t>(k)]);
    require(llt.info() == Eigen::Success, ErrorCode::NotSPD,
            "covariance of component " + std::to_string(k) + " is not positive definite");
    const Matrix l = llt.matrixL();
    const double half_log_det = l.diagonal().array().log().sum();
    Matrix centered = (x.rowwise() - p.means.row(k)).transpose(); // D x N
    l.triangularView<Eigen::Lower>().solveInPlace(centered);
    const double log_w = std::log(p.weights(k));
    out.col(k) = (c0 - half_log_det + log_w - 0.5 * centered.colwise().squaredNorm().array())
                     .matrix()
                     .transpose();
  }
  return out;
}

/// Normalizes rows of log densities in place into responsibilities; returns
/// the total log-likelihood.
double normalize_rows(Matrix &logp) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < logp.rows(); ++i) {
    const double mx = logp.row(i).maxCoeff();
    double s = 0.0;
    for (Eigen::Index k = 0; k < logp.cols(); ++k)
      s += std::exp(logp(i, k) - mx);
    const double lse = mx + std::log(s);
    ll += lse;
    for (Eigen::Index k = 0; k < logp.cols(); ++k)
      logp(i, k) = std::exp(logp(i, k) - lse);
  }
  return ll;
}

Matrix data_covariance(const DataMatrix &x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows());
}

struct Ridge {
  double value;
};

Ridge make_ridge(const DataMatrix &x, double cov_reg) {
  const double scale = data_covariance(x).trace() / static_cast<double>(x.cols());
  return {cov_reg * (scale > 0.0 ? scale : 1.0)};
}

/// Weighted covariance of x around mean with weights r (sum nk).
Matrix weighted_cov(const DataMatrix &x, const Eigen::Ref<const Vector> &r, double nk,
                    const Eigen::Ref<const Eigen::RowVectorXd> &mean, CovMode mode, Ridge ridge) {
  const Matrix centered = x.rowwise() - mean;
  Matrix cov;
  if (mode == CovMode::Full) {
    cov = (centered.array().colwise() * r.array()).matrix().transpose() * centered / nk;
  } else {
    const Vector var = (centered.array().square().colwise() * r.array()).colwise().sum() / nk;
    cov = var.asDiagonal();
  }
  cov.diagonal().array() += ridge.value;
  return cov;
}

void m_step(const DataMatrix &x, const Matrix &resp, CovMode mode, Ridge ridge,
            MixtureParams &p) {
  const double n = static_cast<double>(x.rows());
  for (int k = 0; k < p.k(); ++k) {
    const double nk = resp.col(k).sum();
    p.weights(k) = nk / n;
    p.means.row(k) = (resp.col(k).transpose() * x) / nk;
    p.covs[static_cast<std::size_t>(k)] =
        weighted_cov(x, resp.col(k), nk, p.means.row(k), mode, ridge);
  }
}

/// k-means++ seeding of K centres.
Matrix seed_centres(const DataMatrix &x, int k, Rng &rng) {
  const Eigen::Index n = x.rows();
  Matrix centres(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centres.row(0) = x.row(first(rng));
  Vector d2 = (x.rowwise() - centres.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double target = u(rng);
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centres.row(c) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - centres.row(c)).rowwise().squaredNorm());
  }
  return centres;
}

std::optional<FitResult> run_em(const DataMatrix &x, int k, const EmConfig &cfg, CovMode mode,
                                Ridge ridge, int restart) {
  Rng rng = make_rng(cfg.seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(restart)});
  const double n = static_cast<double>(x.rows());

  MixtureParams p;
  p.cov_mode = mode;
  p.weights = Vector::Constant(k, 1.0 / k);
  p.means = seed_centres(x, k, rng);
  Matrix pooled = data_covariance(x);
  if (mode == CovMode::Diagonal)
    pooled = Matrix(pooled.diagonal().asDiagonal());
  pooled.diagonal().array() += ridge.value;
  p.covs.assign(static_cast<std::size_t>(k), pooled);

  FitResult res;
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it <= cfg.max_iters; ++it) {
    Matrix resp = weighted_log_densities(p, x);
    const double ll = normalize_rows(resp);
    res.trace.push_back(ll);
    if (it > 0 && std::abs(ll - prev) <= cfg.tol * std::abs(prev)) {
      res.converged = true;
      break;
    }
    prev = ll;
    if (it == cfg.max_iters)
      break;
    const Vector mass = resp.colwise().sum();
    if (mass.minCoeff() < 1e-8 * n)
      return std::nullopt; // a component collapsed
    m_step(x, resp, mode, ridge, p);
  }
  res.loglik = res.trace.back();
  res.params = std::move(p);
  res.restart = restart;
  return res;
}

bool mean_less(const Matrix &means, int a, int b) {
  for (Eigen::Index d = 0; d < means.cols(); ++d) {
    if (means(a, d) != means(b, d))
      return means(a, d) < means(b, d);
  }
  return false;
}

} // namespace

std::vector<int> canonical_order(const MixtureParams &params) {
  std::vector<int> order(static_cast<std::size_t>(params.k()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (params.weights(a) != params.weights(b))
      return params.weights(a) > params.weights(b);
    return mean_less(params.means, a, b);
  });
  return order;
}

MixtureParams permuted(const MixtureParams &params, const std::vector<int> &order) {
  MixtureParams out;
  out.cov_mode = params.cov_mode;
  out.weights.resize(params.k());
  out.means.resize(params.k(), params.dim());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const int src = order[j];
    out.weights(static_cast<Eigen::Index>(j)) = params.weights(src);
    out.means.row(static_cast<Eigen::Index>(j)) = params.means.row(src);
    out.covs.push_back(params.covs[static_cast<std::size_t>(src)]);
  }
  return out;
}

FitResult fit_gmm_em(const DataMatrix &data, int k, const EmConfig &cfg) {
  require(k >= 1, ErrorCode::InvalidArgument, "K must be >= 1");
  require(data.cols() >= 1, ErrorCode::InvalidArgument, "data must have at least one column");
  require(data.rows() >= k, ErrorCode::TooFewSamples,
          "need N >= K (N=" + std::to_string(data.rows()) + ", K=" + std::to_string(k) + ")");
  require(cfg.max_iters >= 1 && cfg.tol > 0.0 && cfg.n_restarts >= 1 && cfg.cov_reg > 0.0,
          ErrorCode::InvalidArgument, "invalid EM configuration");
  require(data.allFinite(), ErrorCode::InvalidArgument, "data contains non-finite values");

  const CovMode mode = cfg.cov_mode.value_or(default_cov_mode(data.cols()));
  const Ridge ridge = make_ridge(data, cfg.cov_reg);
  std::vector<std::optional<FitResult>> runs(static_cast<std::size_t>(cfg.n_restarts));
  parallel_for(runs.size(), [&](std::size_t r) {
    runs[r] = run_em(data, k, cfg, mode, ridge, static_cast<int>(r));
  });

  const FitResult *best = nullptr;
  for (const auto &r : runs)
    if (r && (!best || r->loglik > best->loglik))
      best = &*r;
  if (!best)
    throw Error(ErrorCode::DegenerateComponent,
                "every EM restart collapsed a component (K=" + std::to_string(k) + ")");
  FitResult out = *best;
  out.params = permuted(out.params, canonical_order(out.params));
  return out;
}

double log_likelihood(const MixtureParams &params, const DataMatrix &data) {
  Matrix logp = weighted_log_densities(params, data);
  return normalize_rows(logp);
}

Matrix responsibilities(const MixtureParams &params, const DataMatrix &data) {
  Matrix logp = weighted_log_densities(params, data);
  normalize_rows(logp);
  return logp;
}

} // namespace acdc::mixture
