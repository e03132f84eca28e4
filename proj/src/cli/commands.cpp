#include "commands.hpp"

#include "acdc/baselines.hpp"
#include "acdc/io.hpp"
#include "acdc/metrics.hpp"
#include "acdc/pipeline.hpp"
#include "acdc/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace acdc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

json to_json(const Matrix &m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vector &v) { return std::vector<double>(v.begin(), v.end()); }

/// Infinite bounds become null.
json bound(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string dump(const json &j) { return j.dump(2) + "\n"; }

fs::path out_path(const std::string &dir, const char *name) {
  require(!dir.empty(), ErrorCode::InvalidArgument, "--output-dir is required");
  return fs::path(dir) / name;
}

LabelVector labels_from(const DataMatrix &col, const std::string &what) {
  LabelVector l(static_cast<std::size_t>(col.rows()));
  for (Eigen::Index i = 0; i < col.rows(); ++i) {
    require(col(i, 0) == std::round(col(i, 0)), ErrorCode::NonInteger,
            what + ": label on row " + std::to_string(i + 1) + " is not an integer");
    l[static_cast<std::size_t>(i)] = static_cast<int>(col(i, 0));
  }
  return l;
}

AcdcConfig fit_config(const FitOptions &o) {
  AcdcConfig cfg;
  cfg.model = parse_model_kind(o.model);
  cfg.k_min = o.kmin;
  cfg.k_max = o.kmax;
  cfg.seed = o.seed;
  require(o.restarts >= 1, ErrorCode::InvalidArgument, "--restarts must be at least 1");
  cfg.em.n_restarts = o.restarts;
  cfg.nmf.n_restarts = o.restarts;
  require(cfg.k_min >= 1 && cfg.k_min <= cfg.k_max, ErrorCode::InvalidArgument,
          "need 1 <= --kmin <= --kmax");
  return cfg;
}

json fit_echo(const FitOptions &o) {
  return {{"input", o.input}, {"header", o.header}, {"model", o.model}, {"kmin", o.kmin},
          {"kmax", o.kmax},   {"restarts", o.restarts}, {"seed", o.seed}};
}

json component_table(const AcdcRun &run, double rho, LossWeighting weighting) {
  json per_k = json::array();
  for (std::size_t i = 0; i < run.fits.size(); ++i) {
    const FittedModel &f = run.fits[i];
    const DiscrepancyRow &row = run.table.rows[i];
    const LossCurve &curve = run.curves[i];
    std::vector<std::string> flags;
    for (const auto flag : row.flags)
      flags.emplace_back(to_string(flag));
    json d = json::array();
    for (double v : row.values)
      d.push_back(bound(v));
    per_k.push_back({{"k", f.k},
                     {"loglik", f.loglik},
                     {"n_free_params", f.n_free_params},
                     {"converged", f.converged},
                     {"discrepancies", d},
                     {"counts", row.counts},
                     {"flags", flags},
                     {"knots", curve.points},
                     {"infinite", curve.infinite},
                     {"loss", bound(acdc_loss(row, rho, weighting))}});
  }
  return per_k;
}

/// rho,K,loss,penalized_loss at every knot plus 200 evenly spaced points.
std::string loss_curve_csv(const std::vector<LossCurve> &curves, double lambda) {
  std::set<double> rhos;
  double top = 0.0;
  for (const auto &c : curves)
    if (!c.infinite)
      for (double p : c.points) {
        rhos.insert(p);
        top = std::max(top, p);
      }
  const double hi = top > 0.0 ? 1.1 * top : 1.0;
  for (int i = 0; i < 200; ++i)
    rhos.insert(hi * i / 199.0);
  std::string out = "rho,K,loss,penalized_loss\n";
  for (const auto &c : curves)
    for (double rho : rhos) {
      const double loss = c.evaluate(rho);
      out += io::format_number(rho) + "," + std::to_string(c.k) + "," + io::format_number(loss) +
             "," + io::format_number(loss + lambda * c.k) + "\n";
    }
  return out;
}

struct GeneratedSet {
  DataMatrix x;
  json truth;
};

GeneratedSet generate_preset(const GenerateOptions &o) {
  require(o.n >= 1, ErrorCode::InvalidArgument, "--n must be positive");
  const auto pick = [](int v, int fallback) { return v > 0 ? v : fallback; };
  GeneratedSet g;
  const auto labeled = [&](const synth::LabeledData &d) {
    g.x = d.x;
    g.truth["labels"] = d.labels;
  };
  const auto skew_echo = [](const synth::SkewMixtureSpec &s) {
    json scales = json::array();
    for (const auto &m : s.scales)
      scales.push_back(to_json(m));
    return json{{"weights", to_json(s.weights)}, {"locations", to_json(s.locations)},
                {"scales", scales},              {"shapes", to_json(s.shapes)},
                {"k", s.k()}};
  };

  if (o.preset == "skew-different") {
    const auto spec = synth::skew_different_spec(o.n, o.seed);
    labeled(synth::gen_skew_normal_mixture(spec));
    g.truth["spec"] = skew_echo(spec);
  } else if (o.preset == "skew-benchmark") {
    const auto spec = synth::benchmark_skew_spec(pick(o.k, 3), pick(o.dim, 2), o.n, o.alpha, o.seed);
    labeled(synth::gen_skew_normal_mixture(spec));
    g.truth["spec"] = skew_echo(spec);
  } else if (o.preset == "gmm") {
    const auto spec = synth::separated_gmm_spec(pick(o.k, 3), pick(o.dim, 2), o.separation);
    labeled(synth::gen_gmm(spec.weights, spec.means, spec.covs, o.n, o.seed));
    json covs = json::array();
    for (const auto &c : spec.covs)
      covs.push_back(to_json(c));
    g.truth["spec"] = {{"weights", to_json(spec.weights)}, {"means", to_json(spec.means)},
                       {"covariances", covs}, {"k", spec.weights.size()}};
  } else if (o.preset.rfind("pmf-", 0) == 0) {
    const std::string scheme_name = o.preset.substr(4);
    synth::PmfScheme scheme{};
    bool known = false;
    for (const auto s : {synth::PmfScheme::WellSpecified, synth::PmfScheme::Perturbed,
                         synth::PmfScheme::Contaminated, synth::PmfScheme::Overdispersed})
      if (synth::to_string(s) == scheme_name) {
        scheme = s;
        known = true;
      }
    require(known, ErrorCode::InvalidArgument, "unknown preset: " + o.preset);
    const synth::PmfTruth t =
        synth::random_pmf_truth(pick(o.k, 5), pick(o.dim, 20), o.n, o.mean_count, o.seed);
    synth::PmfSynthSpec spec{t.signatures, t.loadings, scheme};
    spec.seed = derive_seed(o.seed, {0xc0});
    g.x = synth::gen_pmf_data(spec).x;
    g.truth["spec"] = {{"scheme", synth::to_string(scheme)},
                       {"perturb_scale", spec.perturb_scale},
                       {"exposure", spec.exposure},
                       {"dispersion", spec.dispersion},
                       {"k", t.signatures.rows()}};
    g.truth["signatures"] = to_json(t.signatures);
    g.truth["loadings"] = to_json(t.loadings);
  } else if (o.preset == "fa") {
    const synth::FaData d = synth::gen_fa_data(pick(o.k, 3), pick(o.dim, 8), o.n, o.noise_sd, o.seed);
    g.x = d.x;
    g.truth["labels"] = d.labels;
    g.truth["spec"] = {{"noise_sd", o.noise_sd}, {"k", d.truth.k()}};
    g.truth["signatures"] = to_json(d.truth.signatures);
    g.truth["loadings"] = to_json(d.truth.loadings);
    g.truth["offset"] = to_json(d.truth.offset);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown preset: " + o.preset);
  }
  return g;
}

} // namespace

void cmd_generate(const GenerateOptions &o) {
  GeneratedSet g = generate_preset(o);
  json truth = {{"schema", "acdc.truth"},
                {"schema_version", kSchemaVersion},
                {"preset", o.preset},
                {"n", o.n},
                {"dim", g.x.cols()},
                {"seed", o.seed},
                {"labels", nullptr}};
  truth.update(g.truth);
  io::write_files_atomically({{out_path(o.output_dir, "data.csv"), io::format_matrix_csv(g.x)},
                              {out_path(o.output_dir, "truth.json"), dump(truth)}});
}

void cmd_select(const SelectOptions &o) {
  AcdcConfig cfg = fit_config(o);
  if (o.divergence) {
    cfg.divergence.emplace();
    cfg.divergence->kind = parse_divergence_kind(*o.divergence);
  }
  cfg.rho_mode = parse_rho_mode(o.rho_mode);
  cfg.weighting = parse_loss_weighting(o.loss_weighting);
  require(o.rho >= 0.0, ErrorCode::InvalidArgument, "--rho must be nonnegative");
  cfg.rho = o.rho;
  require(!o.delta_min || *o.delta_min > 0.0, ErrorCode::InvalidArgument, "--delta-min must be positive");
  require(!o.lambda || *o.lambda > 0.0, ErrorCode::InvalidArgument, "--lambda must be positive");
  cfg.auto_rho.delta_min = o.delta_min;
  cfg.auto_rho.delta_min_fraction = o.delta_min_fraction;
  cfg.auto_rho.lambda = o.lambda;

  const DataMatrix x = io::read_matrix_csv(o.input, o.header);
  std::optional<double> calibrated;
  if (cfg.rho_mode == RhoMode::Supervised) {
    require(!o.calibration.empty(), ErrorCode::EmptyCalibrationSet,
            "supervised mode needs at least one --calibration dataset");
    std::vector<CalibrationRun> runs;
    for (const auto &path : o.calibration) {
      const DataMatrix labeled = io::read_matrix_csv(path, o.header);
      require(labeled.cols() >= 2, ErrorCode::DimensionMismatch,
              path + ": calibration data needs features plus a label column");
      const DataMatrix features = labeled.leftCols(labeled.cols() - 1);
      const auto fits = std::make_shared<std::vector<FittedModel>>(fit_models(features, cfg));
      CalibrationRun run;
      run.curves = build_loss_curves(discrepancy_table(*fits, features, cfg), cfg.weighting);
      run.truth = labels_from(labeled.rightCols(1), path);
      const int k_min = cfg.k_min;
      run.labels_for_k = [fits, k_min](int k) { return (*fits)[static_cast<std::size_t>(k - k_min)].labels; };
      runs.push_back(std::move(run));
    }
    calibrated = calibrate_rho_supervised(runs);
    cfg.rho = *calibrated;
  }
  const AcdcRun run = run_acdc(x, cfg);
  const SelectionResult &s = run.selection;

  json config = fit_echo(o);
  config["divergence"] = std::string(to_string(resolved_divergence(cfg, x.cols()).kind));
  config["rho_mode"] = std::string(to_string(cfg.rho_mode));
  config["rho"] = o.rho;
  config["delta_min"] = o.delta_min ? json(*o.delta_min) : json(nullptr);
  config["delta_min_fraction"] = o.delta_min_fraction;
  config["lambda"] = o.lambda ? json(*o.lambda) : json(nullptr);
  config["loss_weighting"] = std::string(to_string(cfg.weighting));
  config["calibration"] = o.calibration;

  json intervals = json::array();
  for (const auto &iv : s.intervals)
    intervals.push_back({{"k", iv.k}, {"start", iv.start}, {"end", bound(iv.end)}});
  json report = {
      {"schema", "acdc.selection"},
      {"schema_version", kSchemaVersion},
      {"config", config},
      {"n", x.rows()},
      {"dim", x.cols()},
      {"k_hat", s.k_hat},
      {"rho_used", s.rho_used},
      {"mode", std::string(to_string(s.mode))},
      {"calibrated_rho", calibrated ? json(*calibrated) : json(nullptr)},
      {"lambda", s.lambda},
      {"delta_min", s.delta_min},
      {"rho_grid_max", s.rho_grid_max},
      {"no_stable_interval", s.no_stable_interval},
      {"stability_interval",
       s.stability_interval ? json{s.stability_interval->first, bound(s.stability_interval->second)}
                            : json(nullptr)},
      {"intervals", intervals},
      {"diagnostics", s.diagnostics},
      {"per_k", component_table(run, s.rho_used, cfg.weighting)}};
  io::write_files_atomically({{out_path(o.output_dir, "selection.json"), dump(report)},
                              {out_path(o.output_dir, "loss_curves.csv"),
                               loss_curve_csv(run.curves, s.lambda)}});
}

void cmd_baselines(const BaselinesOptions &o) {
  static const std::set<std::string> known{"bic", "elbow", "silhouette", "gap", "parallel-analysis"};
  require(!o.methods.empty(), ErrorCode::InvalidArgument, "no baseline methods given");
  for (const auto &m : o.methods)
    require(known.count(m) > 0, ErrorCode::InvalidArgument,
            "unknown method '" + m + "' (expected bic, elbow, silhouette, gap, parallel-analysis)");
  const AcdcConfig cfg = fit_config(o);
  const DataMatrix x = io::read_matrix_csv(o.input, o.header);

  const bool needs_fits = std::any_of(o.methods.begin(), o.methods.end(),
                                      [](const std::string &m) { return m != "parallel-analysis"; });
  std::vector<FittedModel> fits;
  if (needs_fits)
    fits = fit_models(x, cfg);
  std::map<int, LabelVector> labelings;
  for (const auto &f : fits)
    labelings[f.k] = f.labels;

  json results = json::array();
  for (const auto &m : o.methods) {
    baselines::BaselineResult r;
    if (m == "bic") {
      std::map<int, double> scores;
      for (const auto &f : fits)
        scores[f.k] = cfg.model == ModelKind::PoissonNmf
                          ? baselines::bic_pmf(f.loglik, f.k, x.rows())
                          : baselines::bic_mixture(f.loglik, f.n_free_params, x.rows());
      r = baselines::bic_select(scores, cfg.model == ModelKind::PoissonNmf ? "bic-pmf" : "bic");
    } else if (m == "elbow") {
      std::map<int, double> w;
      for (const auto &[k, l] : labelings)
        w[k] = baselines::wcss(x, l);
      r = baselines::elbow_select(w);
    } else if (m == "silhouette") {
      r = baselines::silhouette_select(x, labelings);
    } else if (m == "gap") {
      r = baselines::gap_select(x, labelings, o.gap_refs, derive_seed(o.seed, {0x9a9}));
    } else {
      r = baselines::parallel_analysis(x, o.pa_permutations, o.pa_quantile, derive_seed(o.seed, {0x9a}));
    }
    json scores = json::array();
    for (const auto &[k, v] : r.per_k_scores)
      scores.push_back({{"k", k}, {"score", bound(v)}});
    results.push_back({{"method", r.method}, {"k_hat", r.k_hat}, {"per_k_scores", scores}, {"aux", r.aux}});
  }
  json config = fit_echo(o);
  config["methods"] = o.methods;
  config["gap_refs"] = o.gap_refs;
  config["pa_permutations"] = o.pa_permutations;
  config["pa_quantile"] = o.pa_quantile;
  const json report = {{"schema", "acdc.baselines"},
                       {"schema_version", kSchemaVersion},
                       {"config", config},
                       {"n", x.rows()},
                       {"dim", x.cols()},
                       {"results", results}};
  io::write_files_atomically({{out_path(o.output_dir, "baselines.json"), dump(report)}});
}

void cmd_report(const ReportOptions &o) {
  require(!o.results.empty() || !o.truth_labels.empty(), ErrorCode::InvalidArgument,
          "nothing to report: give --results and/or --truth-labels with --pred-labels");
  json methods = json::array();
  std::string csv = "method,n,mae,zero_one,median_dev\n";
  for (const auto &path : o.results) {
    const DataMatrix t = io::read_matrix_csv(path, o.header);
    require(t.cols() == 2, ErrorCode::DimensionMismatch, path + ": expected columns k_hat,k_true");
    const LabelVector est = labels_from(t.col(0), path), truth = labels_from(t.col(1), path);
    const metrics::SelectionAccuracy a = metrics::selection_accuracy(est, truth);
    const std::string name = fs::path(path).stem().string();
    methods.push_back({{"method", name}, {"n", est.size()}, {"mae", a.mae},
                       {"zero_one", a.zero_one}, {"median_dev", a.median_dev}});
    csv += name + "," + std::to_string(est.size()) + "," + io::format_number(a.mae) + "," +
           io::format_number(a.zero_one) + "," + io::format_number(a.median_dev) + "\n";
  }
  json clustering = nullptr;
  if (!o.truth_labels.empty() || !o.pred_labels.empty()) {
    require(!o.truth_labels.empty() && !o.pred_labels.empty(), ErrorCode::InvalidArgument,
            "--truth-labels and --pred-labels go together");
    const DataMatrix tl = io::read_matrix_csv(o.truth_labels, o.header);
    const DataMatrix pl = io::read_matrix_csv(o.pred_labels, o.header);
    const LabelVector truth = labels_from(tl.col(0), o.truth_labels);
    const LabelVector pred = labels_from(pl.col(0), o.pred_labels);
    require(truth.size() == pred.size(), ErrorCode::LengthMismatch,
            "label files differ in length (" + std::to_string(truth.size()) + " vs " +
                std::to_string(pred.size()) + ")");
    clustering = {{"f_measure", metrics::f_measure(truth, pred)},
                  {"ari", metrics::ari(truth, pred)},
                  {"ami", metrics::ami(truth, pred)}};
  }
  const json report = {{"schema", "acdc.report"},
                       {"schema_version", kSchemaVersion},
                       {"selection", methods},
                       {"clustering", clustering}};
  io::write_files_atomically({{out_path(o.output_dir, "report.json"), dump(report)},
                              {out_path(o.output_dir, "report.csv"), csv}});
}

} // namespace acdc::cli
