#include "acdc/pipeline.hpp"
#include "acdc/parallel.hpp"

#include <optional>

namespace acdc {

namespace {

LabelVector argmax_rows(const Matrix &m) {
  LabelVector out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index j = 0;
    m.row(i).maxCoeff(&j);
    out[static_cast<std::size_t>(i)] = static_cast<int>(j);
  }
  return out;
}

FittedModel fit_one(const DataMatrix &data, int k, const AcdcConfig &cfg) {
  FittedModel f;
  f.k = k;
  switch (cfg.model) {
  case ModelKind::Gmm: {
    mixture::EmConfig em = cfg.em;
    em.seed = derive_seed(cfg.seed, {0xe11});
    auto fit = mixture::fit_gmm_em(data, k, em);
    f.loglik = fit.loglik;
    f.n_free_params = mixture::n_free_params(k, data.cols(), fit.params.cov_mode);
    f.labels = argmax_rows(mixture::responsibilities(fit.params, data));
    f.converged = fit.converged;
    f.params = std::move(fit.params);
    break;
  }
  case ModelKind::PoissonNmf: {
    matfact::NmfConfig nmf = cfg.nmf;
    nmf.seed = derive_seed(cfg.seed, {0x1f});
    auto fit = matfact::fit_poisson_nmf(data, k, nmf);
    f.loglik = matfact::poisson_loglik(data, fit.params);
    f.n_free_params = static_cast<long long>(k) * (data.cols() - 1 + data.rows());
    f.labels = argmax_rows(fit.params.loadings);
    f.converged = fit.converged;
    f.params = std::move(fit.params);
    break;
  }
  case ModelKind::GaussianFa: {
    auto fit = matfact::fit_gaussian_fa(data, k, cfg.fa);
    f.loglik = matfact::gaussian_loglik(data, fit.params);
    f.n_free_params = static_cast<long long>(k) * (data.cols() + data.rows()) + 2 * data.cols();
    f.labels = argmax_rows(fit.params.loadings.cwiseAbs());
    f.converged = !fit.rank_deficient;
    f.params = std::move(fit.params);
    break;
  }
  }
  return f;
}

} // namespace

std::string_view to_string(ModelKind m) noexcept {
  switch (m) {
  case ModelKind::Gmm: return "gmm";
  case ModelKind::PoissonNmf: return "pnmf";
  case ModelKind::GaussianFa: return "gfa";
  }
  return "gmm";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto m : {ModelKind::Gmm, ModelKind::PoissonNmf, ModelKind::GaussianFa})
    if (to_string(m) == name)
      return m;
  throw Error(ErrorCode::InvalidArgument, "unknown model '" + std::string(name) + "'");
}

DivergenceConfig resolved_divergence(const AcdcConfig &cfg, Eigen::Index dim) {
  if (cfg.divergence)
    return *cfg.divergence;
  DivergenceConfig d;
  if (cfg.model != ModelKind::Gmm || dim > 10)
    d.kind = DivergenceKind::KlKnnPerCoord;
  return d;
}

std::vector<FittedModel> fit_models(const DataMatrix &data, const AcdcConfig &cfg) {
  require(cfg.k_min >= 1 && cfg.k_min <= cfg.k_max, ErrorCode::InvalidArgument,
          "need 1 <= kmin <= kmax (got " + std::to_string(cfg.k_min) + ".." +
              std::to_string(cfg.k_max) + ")");
  require(data.rows() > 0 && data.cols() > 0, ErrorCode::EmptyInput, "empty data matrix");
  const auto n_k = static_cast<std::size_t>(cfg.k_max - cfg.k_min + 1);
  std::vector<std::optional<FittedModel>> slots(n_k);
  parallel_for(n_k, [&](std::size_t i) {
    const int k = cfg.k_min + static_cast<int>(i);
    try {
      slots[i] = fit_one(data, k, cfg);
    } catch (const Error &e) {
      rethrow_with_context(e, "fitting K=" + std::to_string(k));
    }
  });
  std::vector<FittedModel> fits;
  for (auto &s : slots)
    fits.push_back(std::move(*s));
  return fits;
}

DiscrepancyTable discrepancy_table(const std::vector<FittedModel> &fits, const DataMatrix &data,
                                   const AcdcConfig &cfg) {
  require(!fits.empty(), ErrorCode::EmptyInput, "no fitted models");
  const DivergenceConfig div = resolved_divergence(cfg, data.cols());
  DiscrepancyTable table;
  table.k_min = fits.front().k;
  table.rows.resize(fits.size());
  parallel_for(fits.size(), [&](std::size_t i) {
    const FittedModel &f = fits[i];
    const std::uint64_t seed = derive_seed(cfg.seed, {0xd15, static_cast<std::uint64_t>(f.k)});
    try {
      if (const auto *mp = std::get_if<mixture::MixtureParams>(&f.params)) {
        mixture::MixtureDiscrepancyConfig mc;
        mc.divergence = div;
        mc.assignment = cfg.assignment;
        mc.n_draws = cfg.n_draws;
        table.rows[i] = mixture::component_discrepancies(*mp, data, mc, seed);
      } else {
        matfact::PmfDiscrepancyConfig pc;
        pc.divergence = div;
        pc.reference = cfg.noise_reference;
        table.rows[i] = matfact::component_discrepancies(std::get<matfact::PmfParams>(f.params),
                                                         data, pc, seed);
      }
    } catch (const Error &e) {
      rethrow_with_context(e, "discrepancies for K=" + std::to_string(f.k));
    }
  });
  return table;
}

SelectionResult select(const std::vector<LossCurve> &curves, const AcdcConfig &cfg) {
  switch (cfg.rho_mode) {
  case RhoMode::Auto: return auto_select_rho(curves, cfg.auto_rho);
  case RhoMode::Fixed:
  case RhoMode::Supervised: return select_at_rho(curves, cfg.rho, cfg.rho_mode);
  }
  return select_at_rho(curves, cfg.rho, cfg.rho_mode);
}

AcdcRun run_acdc(const DataMatrix &data, const AcdcConfig &cfg) {
  AcdcRun run;
  run.fits = fit_models(data, cfg);
  run.table = discrepancy_table(run.fits, data, cfg);
  run.curves = build_loss_curves(run.table, cfg.weighting);
  run.selection = select(run.curves, cfg);
  return run;
}

} // namespace acdc
