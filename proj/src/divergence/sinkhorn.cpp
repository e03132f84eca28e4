#include "acdc/divergence.hpp"

namespace acdc::divergence {

SinkhornConfig SinkhornConfig::for_dimension(Eigen::Index dim) {
  SinkhornConfig cfg;
  if (dim <= 20) {
    cfg.epsilon = 1.0;
    cfg.rho_marginal = 20.0;
  } else if (dim <= 30) {
    cfg.epsilon = 2.0;
    cfg.rho_marginal = 10.0;
  } else {
    cfg.epsilon = 2.0;
    cfg.rho_marginal = 5.0;
  }
  return cfg;
}

Matrix cost_matrix(const SampleSet &a, const SampleSet &b, CostMetric metric) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch,
          "cost matrix inputs have different dimensions");
  Matrix m(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const auto x = a.point(i);
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const auto y = b.point(j);
      double dot = 0.0, nx = 0.0, ny = 0.0, d2 = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) {
        const double t = x[d] - y[d];
        d2 += t * t;
        dot += x[d] * y[d];
        nx += x[d] * x[d];
        ny += y[d] * y[d];
      }
      if (metric == CostMetric::Euclidean) {
        m(i, j) = std::sqrt(d2);
      } else {
        m(i, j) = (nx > 0.0 && ny > 0.0) ? 1.0 - dot / std::sqrt(nx * ny) : 1.0;
      }
    }
  }
  return m;
}

namespace {

double log_sum_exp(const Vector &v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx))
    return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

/// Generalized KL between nonnegative vectors with strictly positive b.
double kl_measures(const Vector &a, const Vector &b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) > 0.0)
      s += a(i) * std::log(a(i) / b(i));
    s += b(i) - a(i);
  }
  return s;
}

std::vector<Eigen::Index> positive_support(std::span<const double> w, const char *name) {
  std::vector<Eigen::Index> idx;
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    require(w[i] >= 0.0 && std::isfinite(w[i]), ErrorCode::InvalidArgument,
            std::string(name) + " weights must be finite and nonnegative");
    total += w[i];
    if (w[i] > 0.0)
      idx.push_back(static_cast<Eigen::Index>(i));
  }
  require(!idx.empty(), ErrorCode::EmptySample, std::string(name) + " weights are all zero");
  require(std::abs(total - 1.0) <= 1e-8, ErrorCode::InvalidArgument,
          std::string(name) + " weights must sum to one");
  return idx;
}

} // namespace

SinkhornResult sinkhorn_unbalanced(std::span<const double> r, std::span<const double> c,
                                   const Matrix &cost, const SinkhornConfig &cfg) {
  require(cfg.epsilon > 0.0 && cfg.rho_marginal > 0.0 && cfg.max_iters >= 1 && cfg.tol > 0.0,
          ErrorCode::InvalidArgument, "invalid Sinkhorn configuration");
  require(cost.rows() == static_cast<Eigen::Index>(r.size()) &&
              cost.cols() == static_cast<Eigen::Index>(c.size()),
          ErrorCode::DimensionMismatch, "cost matrix does not match marginals");

  const auto ri = positive_support(r, "row");
  const auto ci = positive_support(c, "column");
  const auto n = static_cast<Eigen::Index>(ri.size());
  const auto l = static_cast<Eigen::Index>(ci.size());
  Vector log_r(n), log_c(l), rv(n), cv(l);
  for (Eigen::Index i = 0; i < n; ++i) {
    rv(i) = r[static_cast<std::size_t>(ri[static_cast<std::size_t>(i)])];
    log_r(i) = std::log(rv(i));
  }
  for (Eigen::Index j = 0; j < l; ++j) {
    cv(j) = c[static_cast<std::size_t>(ci[static_cast<std::size_t>(j)])];
    log_c(j) = std::log(cv(j));
  }
  Matrix m(n, l), log_k(n, l);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < l; ++j) {
      m(i, j) = cost(ri[static_cast<std::size_t>(i)], ci[static_cast<std::size_t>(j)]);
      log_k(i, j) = -m(i, j) / cfg.epsilon + log_r(i) + log_c(j);
    }

  const double fi = cfg.rho_marginal / (cfg.rho_marginal + cfg.epsilon);
  Vector f = Vector::Zero(n), g = Vector::Zero(l);
  Vector row_marg = Vector::Zero(n), col_marg = Vector::Zero(l);
  Vector tmp_l(l), tmp_n(n);

  SinkhornResult res;
  res.converged = false;
  res.residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      tmp_l = log_k.row(i).transpose() + g;
      f(i) = fi * (log_r(i) - log_sum_exp(tmp_l));
    }
    for (Eigen::Index j = 0; j < l; ++j) {
      tmp_n = log_k.col(j) + f;
      g(j) = fi * (log_c(j) - log_sum_exp(tmp_n));
    }
    Vector new_row(n), new_col = Vector::Zero(l);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < l; ++j) {
        const double a = std::exp(f(i) + log_k(i, j) + g(j));
        s += a;
        new_col(j) += a;
      }
      new_row(i) = s;
    }
    res.residual = std::max((new_row - row_marg).cwiseAbs().maxCoeff(),
                            (new_col - col_marg).cwiseAbs().maxCoeff());
    row_marg = std::move(new_row);
    col_marg = std::move(new_col);
    res.iterations = it;
    if (res.residual < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  Matrix plan(n, l);
  double transport = 0.0, entropic = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < l; ++j) {
      const double log_ratio = f(i) + g(j) - m(i, j) / cfg.epsilon; // log(A / (r c))
      const double a = std::exp(log_ratio + log_r(i) + log_c(j));
      plan(i, j) = a;
      transport += a * m(i, j);
      if (a > 0.0)
        entropic += a * log_ratio;
      entropic += rv(i) * cv(j) - a;
    }
  res.value = transport + cfg.epsilon * entropic +
              cfg.rho_marginal * kl_measures(plan.rowwise().sum(), rv) +
              cfg.rho_marginal * kl_measures(plan.colwise().sum().transpose(), cv);

  res.plan = Matrix::Zero(cost.rows(), cost.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < l; ++j)
      res.plan(ri[static_cast<std::size_t>(i)], ci[static_cast<std::size_t>(j)]) = plan(i, j);
  return res;
}

SinkhornResult sinkhorn_unbalanced(std::span<const double> r, std::span<const double> c,
                                   const SampleSet &points_r, const SampleSet &points_c,
                                   const SinkhornConfig &cfg) {
  require(static_cast<Eigen::Index>(r.size()) == points_r.size() &&
              static_cast<Eigen::Index>(c.size()) == points_c.size(),
          ErrorCode::LengthMismatch, "weights do not match point counts");
  return sinkhorn_unbalanced(r, c, cost_matrix(points_r, points_c, cfg.cost_metric), cfg);
}

} // namespace acdc::divergence
