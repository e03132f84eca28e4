#include "acdc/discrepancy.hpp"

#include <numeric>

namespace acdc {

using divergence::SampleSet;

std::string_view to_string(DivergenceKind kind) noexcept {
  switch (kind) {
  case DivergenceKind::KlKnn: return "kl-knn";
  case DivergenceKind::KlKnnPerCoord: return "kl-knn-percoord";
  case DivergenceKind::Mmd: return "mmd";
  case DivergenceKind::Sinkhorn: return "sinkhorn";
  }
  return "?";
}

DivergenceKind parse_divergence_kind(std::string_view name) {
  for (auto k : {DivergenceKind::KlKnn, DivergenceKind::KlKnnPerCoord, DivergenceKind::Mmd,
                 DivergenceKind::Sinkhorn})
    if (to_string(k) == name)
      return k;
  throw Error(ErrorCode::InvalidArgument, "unknown divergence '" + std::string(name) + "'");
}

std::string_view to_string(ComponentFlag flag) noexcept {
  switch (flag) {
  case ComponentFlag::Ok: return "ok";
  case ComponentFlag::Empty: return "empty";
  case ComponentFlag::Infinite: return "infinite";
  }
  return "?";
}

Eigen::Index min_component_size(const DivergenceConfig &cfg, Eigen::Index n) {
  switch (cfg.kind) {
  case DivergenceKind::KlKnn:
  case DivergenceKind::KlKnnPerCoord:
    if (cfg.knn.k_mode == divergence::KMode::Fixed)
      return cfg.knn.k + 1;
    // floor(sqrt(n)) < n holds for every n >= 2
    (void)n;
    return 2;
  case DivergenceKind::Mmd: return 2;
  case DivergenceKind::Sinkhorn: return 1;
  }
  return 2;
}

ReferenceModel uniform_reference(Eigen::Index dim) {
  ReferenceModel ref;
  ref.joint = divergence::unit_cube_oracle();
  ref.marginals.assign(static_cast<std::size_t>(dim), divergence::unit_cube_oracle());
  ref.sample = [dim](Rng &rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RowMajorMatrix m(n, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = u(rng);
    return m;
  };
  return ref;
}

ReferenceModel gaussian_reference(const Vector &mean, const Matrix &cov) {
  ReferenceModel ref;
  ref.joint = divergence::gaussian_oracle(mean, cov);
  for (Eigen::Index d = 0; d < mean.size(); ++d)
    ref.marginals.push_back(divergence::normal_oracle(mean(d), std::sqrt(cov(d, d))));
  const Matrix l = cov.llt().matrixL();
  ref.sample = [mean, l](Rng &rng, Eigen::Index n) {
    std::normal_distribution<double> z;
    RowMajorMatrix m(n, mean.size());
    Vector w(mean.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index d = 0; d < w.size(); ++d)
        w(d) = z(rng);
      m.row(i) = (mean + l * w).transpose();
    }
    return m;
  };
  return ref;
}

namespace {

/// Deterministic subsample of at most `cap` rows, original order kept.
SampleSet subsample(const SampleSet &s, Eigen::Index cap, Rng &rng) {
  if (s.size() <= cap)
    return s;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(s.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < cap; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, s.size() - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(cap));
  std::sort(idx.begin(), idx.end());
  RowMajorMatrix out(cap, s.dim());
  for (Eigen::Index i = 0; i < cap; ++i)
    out.row(i) = s.points().row(idx[static_cast<std::size_t>(i)]);
  return SampleSet(std::move(out));
}

} // namespace

double estimate_discrepancy(const SampleSet &obs, const ReferenceModel &ref,
                            const DivergenceConfig &cfg, std::uint64_t seed) {
  switch (cfg.kind) {
  case DivergenceKind::KlKnn: {
    auto knn = cfg.knn;
    knn.jitter_seed = derive_seed(seed, {1});
    return divergence::kl_knn_one_sample(obs, ref.joint, knn);
  }
  case DivergenceKind::KlKnnPerCoord: {
    auto knn = cfg.knn;
    knn.jitter_seed = derive_seed(seed, {2});
    return divergence::kl_knn_per_coordinate(obs, ref.marginals, knn);
  }
  case DivergenceKind::Mmd: {
    Rng rng = make_rng(seed, {3});
    const SampleSet p = subsample(obs, cfg.mmd_max_points, rng);
    const SampleSet q(ref.sample(rng, p.size()));
    const auto kernel = cfg.mmd_bandwidth ? divergence::KernelSpec{*cfg.mmd_bandwidth}
                                          : divergence::median_heuristic_kernel(p, q);
    return divergence::mmd_from_squared(divergence::mmd_squared(p, q, kernel));
  }
  case DivergenceKind::Sinkhorn: {
    Rng rng = make_rng(seed, {4});
    const SampleSet p = subsample(obs, cfg.sinkhorn_max_points, rng);
    const SampleSet q(ref.sample(rng, p.size()));
    const auto sk = cfg.sinkhorn.value_or(divergence::SinkhornConfig::for_dimension(obs.dim()));
    const std::vector<double> w(static_cast<std::size_t>(p.size()),
                                1.0 / static_cast<double>(p.size()));
    return divergence::sinkhorn_unbalanced(w, w, p, q, sk).value;
  }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown divergence kind");
}

} // namespace acdc
