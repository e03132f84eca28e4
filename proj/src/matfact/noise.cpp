#include "acdc/matfact.hpp"
#include "acdc/parallel.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <numbers>
#include <numeric>

namespace acdc::matfact {

namespace {

void check_shapes(const PmfParams &p, const DataMatrix &x) {
  require(p.signatures.rows() == p.loadings.cols(), ErrorCode::DimensionMismatch,
          "signatures and loadings disagree on K");
  require(x.rows() == p.n() && x.cols() == p.dim(), ErrorCode::DimensionMismatch,
          "data is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
              ", parameters expect " + std::to_string(p.n()) + "x" + std::to_string(p.dim()));
}

/// P(Y <= y) for Y ~ Poisson(lambda); zero for y < 0.
double poisson_cdf(long long y, double lambda) {
  if (y < 0)
    return 0.0;
  if (lambda <= 0.0)
    return 1.0;
  return boost::math::gamma_q(static_cast<double>(y) + 1.0, lambda);
}

NoiseSampleTable empty_table(const std::vector<std::vector<Eigen::Index>> &members,
                             Eigen::Index n, Eigen::Index dim) {
  NoiseSampleTable t;
  t.members = members;
  for (const auto &m : members) {
    t.eps.emplace_back(static_cast<Eigen::Index>(m.size()), dim);
    t.counts.push_back(static_cast<long long>(m.size()));
    t.contributions.push_back(Matrix::Zero(n, dim));
  }
  return t;
}

/// Position of each observation inside each component's member list (-1 if unused).
std::vector<std::vector<Eigen::Index>> positions(const std::vector<std::vector<Eigen::Index>> &members,
                                                 Eigen::Index n) {
  std::vector<std::vector<Eigen::Index>> pos(members.size(),
                                             std::vector<Eigen::Index>(static_cast<std::size_t>(n), -1));
  for (std::size_t k = 0; k < members.size(); ++k)
    for (std::size_t i = 0; i < members[k].size(); ++i)
      pos[k][static_cast<std::size_t>(members[k][i])] = static_cast<Eigen::Index>(i);
  return pos;
}

/// Last summand r with fl(s + r) == x when such a value lies within a few ulps
/// of x - s; otherwise the closest candidate found.
double residual_summand(double s, double x) {
  double r = x - s, best = r;
  double best_err = std::abs((s + r) - x);
  for (int step = 0; step < 8 && best_err > 0.0; ++step) {
    r = std::nextafter(r, (s + r) < x ? std::numeric_limits<double>::infinity()
                                      : -std::numeric_limits<double>::infinity());
    const double err = std::abs((s + r) - x);
    if (err < best_err) {
      best_err = err;
      best = r;
    }
  }
  return best;
}

} // namespace

NoiseSampleTable sample_noise_poisson(const PmfParams &params, const DataMatrix &x,
                                      std::uint64_t seed) {
  require(params.noise == NoiseModel::Poisson, ErrorCode::InvalidArgument,
          "Poisson sampler needs Poisson-mode parameters");
  check_shapes(params, x);
  require_counts(x);
  const int k = params.k();
  const Eigen::Index n = x.rows(), dim = x.cols();

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    for (Eigen::Index i = 0; i < n; ++i)
      if (params.loadings(i, c) > 0.0)
        members[static_cast<std::size_t>(c)].push_back(i);
  NoiseSampleTable t = empty_table(members, n, dim);
  const auto pos = positions(members, n);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ni) {
    const auto i = static_cast<Eigen::Index>(ni);
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> rate(static_cast<std::size_t>(k));
    std::vector<double> suffix(static_cast<std::size_t>(k));
    std::vector<long long> y(static_cast<std::size_t>(k));
    for (Eigen::Index d = 0; d < dim; ++d) {
      for (int c = 0; c < k; ++c)
        rate[static_cast<std::size_t>(c)] = params.signatures(c, d) * params.loadings(i, c);
      // suffix[c] = sum of rates from c on; exact p = 1 for the last positive rate
      for (int c = k - 1; c >= 0; --c)
        suffix[static_cast<std::size_t>(c)] =
            rate[static_cast<std::size_t>(c)] + (c + 1 < k ? suffix[static_cast<std::size_t>(c + 1)] : 0.0);
      const double total = suffix[0];
      // multinomial split by sequential conditional binomials
      auto left = static_cast<long long>(x(i, d));
      for (int c = 0; c < k; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        long long draw = 0;
        if (left > 0 && rate[cu] > 0.0) {
          const double p = std::min(1.0, rate[cu] / suffix[cu]);
          draw = p >= 1.0 ? left : std::binomial_distribution<long long>(left, p)(rng);
        }
        y[cu] = draw;
        left -= draw;
      }
      if (total <= 0.0 && x(i, d) > 0.0) {
        // no component can produce this count; spread it evenly over used components
        std::fill(y.begin(), y.end(), 0);
        long long remaining = static_cast<long long>(x(i, d));
        std::vector<int> used;
        for (int c = 0; c < k; ++c)
          if (params.loadings(i, c) > 0.0)
            used.push_back(c);
        if (used.empty())
          used.push_back(k - 1);
        for (std::size_t u = 0; remaining > 0; u = (u + 1) % used.size(), --remaining)
          ++y[static_cast<std::size_t>(used[u])];
      }
      for (int c = 0; c < k; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        t.contributions[cu](i, d) = static_cast<double>(y[cu]);
        const Eigen::Index row = pos[cu][ni];
        if (row < 0)
          continue;
        const double lo = poisson_cdf(y[cu] - 1, rate[cu]);
        const double hi = poisson_cdf(y[cu], rate[cu]);
        t.eps[cu](row, d) = lo + unif(rng) * (hi - lo);
      }
    }
  });
  return t;
}

NoiseSampleTable sample_noise_gaussian(const PmfParams &params, const DataMatrix &x,
                                       std::uint64_t seed, NoiseReference ref) {
  require(params.noise == NoiseModel::Gaussian, ErrorCode::InvalidArgument,
          "Gaussian sampler needs Gaussian-mode parameters");
  check_shapes(params, x);
  const int k = params.k();
  const Eigen::Index n = x.rows(), dim = x.cols();
  require(params.noise_var.rows() == k && params.noise_var.cols() == dim,
          ErrorCode::DimensionMismatch, "noise variances must be K x D");
  for (int c = 0; c < k; ++c)
    for (Eigen::Index d = 0; d < dim; ++d)
      require(params.noise_var(c, d) > 0.0 && std::isfinite(params.noise_var(c, d)),
              ErrorCode::ZeroVariance,
              "noise variance of component " + std::to_string(c) + ", dimension " +
                  std::to_string(d) + " is not positive");
  const Vector offset = params.offset.size() == dim ? params.offset : Vector::Zero(dim);

  // suffix sums of the variances: tail_var(c, d) = sum_{c' > c} var(c', d)
  Matrix tail_var = Matrix::Zero(k, dim);
  for (int c = k - 2; c >= 0; --c)
    tail_var.row(c) = tail_var.row(c + 1) + params.noise_var.row(c + 1);

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
  for (auto &m : members) {
    m.resize(static_cast<std::size_t>(n));
    std::iota(m.begin(), m.end(), Eigen::Index{0});
  }
  NoiseSampleTable t = empty_table(members, n, dim);

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ni) {
    const auto i = static_cast<Eigen::Index>(ni);
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> normal;
    std::vector<double> mu(static_cast<std::size_t>(k)), y(static_cast<std::size_t>(k));
    for (Eigen::Index d = 0; d < dim; ++d) {
      for (int c = 0; c < k; ++c)
        mu[static_cast<std::size_t>(c)] =
            params.signatures(c, d) * params.loadings(i, c) + offset(d) / static_cast<double>(k);
      double rest = x(i, d); // x minus the contributions drawn so far
      double tail_mu = 0.0;
      for (int c = 1; c < k; ++c)
        tail_mu += mu[static_cast<std::size_t>(c)];
      double partial = 0.0;
      for (int c = 0; c < k - 1; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const double v = params.noise_var(c, d), tv = tail_var(c, d);
        const double mean = (mu[cu] * tv + (rest - tail_mu) * v) / (v + tv);
        const double var = v * tv / (v + tv);
        y[cu] = mean + std::sqrt(var) * normal(rng);
        rest -= y[cu];
        tail_mu -= mu[cu + 1];
        partial += y[cu];
      }
      y[static_cast<std::size_t>(k - 1)] = residual_summand(partial, x(i, d));
      for (int c = 0; c < k; ++c) {
        const auto cu = static_cast<std::size_t>(c);
        t.contributions[cu](i, d) = y[cu];
        const double zscore = (y[cu] - mu[cu]) / std::sqrt(params.noise_var(c, d));
        t.eps[cu](i, d) = ref == NoiseReference::Uniform
                              ? 0.5 * std::erfc(-zscore / std::numbers::sqrt2)
                              : zscore;
      }
    }
  });
  return t;
}

DiscrepancyRow discrepancies_from_table(const NoiseSampleTable &table,
                                        const PmfDiscrepancyConfig &cfg, std::uint64_t seed) {
  const std::size_t k = table.eps.size();
  DiscrepancyRow row;
  row.values.assign(k, 0.0);
  row.counts = table.counts;
  row.flags.assign(k, ComponentFlag::Ok);
  parallel_for(k, [&](std::size_t c) {
    const auto &eps = table.eps[c];
    if (eps.rows() == 0) {
      row.flags[c] = ComponentFlag::Empty;
      return;
    }
    if (eps.rows() < min_component_size(cfg.divergence, eps.rows())) {
      row.values[c] = std::numeric_limits<double>::infinity();
      row.flags[c] = ComponentFlag::Infinite;
      return;
    }
    const ReferenceModel ref =
        cfg.reference == NoiseReference::Uniform
            ? uniform_reference(eps.cols())
            : gaussian_reference(Vector::Zero(eps.cols()), Matrix::Identity(eps.cols(), eps.cols()));
    try {
      row.values[c] = estimate_discrepancy(divergence::SampleSet(eps), ref, cfg.divergence,
                                           derive_seed(seed, {c}));
    } catch (const Error &e) {
      rethrow_with_context(e, "component " + std::to_string(c));
    }
    if (std::isinf(row.values[c]))
      row.flags[c] = ComponentFlag::Infinite;
  });
  return row;
}

DiscrepancyRow component_discrepancies(const PmfParams &params, const DataMatrix &x,
                                       const PmfDiscrepancyConfig &cfg, std::uint64_t seed) {
  require(cfg.n_draws >= 1, ErrorCode::InvalidArgument, "n_draws must be >= 1");
  require(params.noise == NoiseModel::Gaussian || cfg.reference == NoiseReference::Uniform,
          ErrorCode::InvalidArgument, "Poisson noise variables are only defined against Unif([0,1]^D)");
  const auto order = canonical_order(params);
  const PmfParams p = permuted(params, order);
  const auto k = static_cast<std::size_t>(p.k());

  DiscrepancyRow canon;
  std::vector<double> sums(k, 0.0);
  for (int r = 0; r < cfg.n_draws; ++r) {
    const std::uint64_t s = derive_seed(seed, {static_cast<std::uint64_t>(r)});
    const NoiseSampleTable table = p.noise == NoiseModel::Poisson
                                       ? sample_noise_poisson(p, x, s)
                                       : sample_noise_gaussian(p, x, s, cfg.reference);
    DiscrepancyRow row = discrepancies_from_table(table, cfg, derive_seed(s, {0xd15c}));
    if (r == 0)
      canon = row;
    for (std::size_t c = 0; c < k; ++c) {
      sums[c] += row.values[c];
      if (row.flags[c] != ComponentFlag::Ok)
        canon.flags[c] = row.flags[c];
    }
  }

  DiscrepancyRow out;
  out.values.resize(k);
  out.counts.resize(k);
  out.flags.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto dst = static_cast<std::size_t>(order[j]);
    out.flags[dst] = canon.flags[j];
    out.counts[dst] = canon.counts[j];
    out.values[dst] = canon.flags[j] == ComponentFlag::Infinite
                          ? std::numeric_limits<double>::infinity()
                          : sums[j] / cfg.n_draws;
  }
  return out;
}

} // namespace acdc::matfact
