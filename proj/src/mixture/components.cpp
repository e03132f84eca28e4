#include "acdc/mixture.hpp"
#include "acdc/parallel.hpp"

namespace acdc::mixture {

namespace {

ComponentSamples collect(std::vector<int> assignment, Eigen::Index k) {
  ComponentSamples out;
  out.members.resize(static_cast<std::size_t>(k));
  out.counts.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t n = 0; n < assignment.size(); ++n) {
    const auto c = static_cast<std::size_t>(assignment[n]);
    out.members[c].push_back(static_cast<Eigen::Index>(n));
    ++out.counts[c];
  }
  out.assignment = std::move(assignment);
  return out;
}

} // namespace

ComponentSamples sample_assignments(const Matrix &resp, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0xa55});
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> assignment(static_cast<std::size_t>(resp.rows()));
  for (Eigen::Index n = 0; n < resp.rows(); ++n) {
    const double target = u(rng) * resp.row(n).sum();
    double acc = 0.0;
    int pick = -1;
    for (Eigen::Index k = 0; k < resp.cols(); ++k) {
      if (resp(n, k) <= 0.0)
        continue;
      pick = static_cast<int>(k);
      acc += resp(n, k);
      if (acc > target)
        break;
    }
    require(pick >= 0, ErrorCode::InvalidArgument,
            "responsibility row " + std::to_string(n) + " has no positive entry");
    assignment[static_cast<std::size_t>(n)] = pick;
  }
  return collect(std::move(assignment), resp.cols());
}

ComponentSamples argmax_assignments(const Matrix &resp) {
  std::vector<int> assignment(static_cast<std::size_t>(resp.rows()));
  for (Eigen::Index n = 0; n < resp.rows(); ++n) {
    Eigen::Index best = 0;
    resp.row(n).maxCoeff(&best);
    assignment[static_cast<std::size_t>(n)] = static_cast<int>(best);
  }
  return collect(std::move(assignment), resp.cols());
}

DiscrepancyRow component_discrepancies(const MixtureParams &params, const DataMatrix &data,
                                       const MixtureDiscrepancyConfig &cfg,
                                       std::uint64_t seed) {
  require(cfg.n_draws >= 1, ErrorCode::InvalidArgument, "n_draws must be >= 1");
  const auto order = canonical_order(params);
  const MixtureParams p = permuted(params, order);
  const Matrix resp = responsibilities(p, data);
  const int k = p.k();
  const int draws = cfg.assignment == AssignmentMode::Averaged ? cfg.n_draws : 1;

  std::vector<ReferenceModel> refs;
  for (int j = 0; j < k; ++j)
    refs.push_back(gaussian_reference(p.means.row(j).transpose(), p.covs[static_cast<std::size_t>(j)]));

  // sums[j] accumulates over draws; counts/flags come from the first draw
  std::vector<double> sums(static_cast<std::size_t>(k), 0.0);
  DiscrepancyRow canon;
  canon.flags.assign(static_cast<std::size_t>(k), ComponentFlag::Ok);
  for (int r = 0; r < draws; ++r) {
    const ComponentSamples cs =
        cfg.assignment == AssignmentMode::HardArgmax
            ? argmax_assignments(resp)
            : sample_assignments(resp, derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    if (r == 0)
      canon.counts = cs.counts;
    std::vector<double> vals(static_cast<std::size_t>(k));
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t j) {
      const auto &members = cs.members[j];
      const auto nj = static_cast<Eigen::Index>(members.size());
      if (nj == 0 || nj < min_component_size(cfg.divergence, nj)) {
        vals[j] = std::numeric_limits<double>::infinity();
        return;
      }
      RowMajorMatrix pts(nj, data.cols());
      for (Eigen::Index i = 0; i < nj; ++i)
        pts.row(i) = data.row(members[static_cast<std::size_t>(i)]);
      try {
        vals[j] = estimate_discrepancy(divergence::SampleSet(std::move(pts)), refs[j],
                                       cfg.divergence,
                                       derive_seed(seed, {static_cast<std::uint64_t>(r), j}));
      } catch (const Error &e) {
        rethrow_with_context(e, "component " + std::to_string(j));
      }
    });
    for (std::size_t j = 0; j < vals.size(); ++j) {
      if (std::isinf(vals[j]))
        canon.flags[j] = ComponentFlag::Infinite;
      sums[j] += vals[j];
    }
  }

  DiscrepancyRow out;
  out.values.resize(static_cast<std::size_t>(k));
  out.counts.resize(static_cast<std::size_t>(k));
  out.flags.resize(static_cast<std::size_t>(k));
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto dst = static_cast<std::size_t>(order[j]);
    out.values[dst] = canon.flags[j] == ComponentFlag::Infinite
                          ? std::numeric_limits<double>::infinity()
                          : sums[j] / draws;
    out.counts[dst] = canon.counts[j];
    out.flags[dst] = canon.flags[j];
  }
  return out;
}

} // namespace acdc::mixture
