#include "acdc/cli.hpp"
#include "acdc/common.hpp"
#include "commands.hpp"

#include <CLI11.hpp>

#include <ostream>

namespace acdc::cli {

namespace {

void add_fit_options(CLI::App &cmd, FitOptions &o) {
  cmd.add_option("--input", o.input, "Numeric CSV, one observation per row")->required();
  cmd.add_flag("--header", o.header, "Skip the first CSV line");
  cmd.add_option("--output-dir", o.output_dir, "Existing directory for the outputs")->required();
  cmd.add_option("--model", o.model, "Model family")
      ->check(CLI::IsMember({"gmm", "pnmf", "gfa"}))
      ->capture_default_str();
  cmd.add_option("--kmin", o.kmin)->capture_default_str();
  cmd.add_option("--kmax", o.kmax)->capture_default_str();
  cmd.add_option("--restarts", o.restarts, "EM / NMF restarts per K")->capture_default_str();
  cmd.add_option("--seed", o.seed)->capture_default_str();
}

int exit_code(const Error &e) {
  switch (e.kind()) {
  case ErrorKind::Usage: return 2;
  case ErrorKind::Data: return 3;
  case ErrorKind::Numerical: return 4;
  }
  return 4;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Select the number of mixture or factorization components with the "
               "accumulated cutoff discrepancy criterion"};
  app.name("acdc");
  app.set_config("--config", "", "TOML or INI file with option values; sections name the command");
  app.require_subcommand(1);

  GenerateOptions gen;
  auto *g = app.add_subcommand("generate", "Write a synthetic dataset and its ground truth");
  g->add_option("--preset", gen.preset,
                "skew-different, skew-benchmark, gmm, pmf-well-specified, pmf-perturbed, "
                "pmf-contaminated, pmf-overdispersed, fa")
      ->required();
  g->add_option("--output-dir", gen.output_dir)->required();
  g->add_option("--n", gen.n)->capture_default_str();
  g->add_option("--k", gen.k, "True number of components (preset default when 0)");
  g->add_option("--dim", gen.dim, "Dimension (preset default when 0)");
  g->add_option("--alpha", gen.alpha, "skew-benchmark scale factor")->capture_default_str();
  g->add_option("--separation", gen.separation, "gmm mean spacing")->capture_default_str();
  g->add_option("--noise-sd", gen.noise_sd, "fa noise level")->capture_default_str();
  g->add_option("--mean-count", gen.mean_count, "pmf expected total count per sample")
      ->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();

  SelectOptions sel;
  auto *s = app.add_subcommand("select", "Fit K = kmin..kmax and select K");
  add_fit_options(*s, sel);
  s->add_option("--divergence", sel.divergence)
      ->check(CLI::IsMember({"kl-knn", "kl-knn-percoord", "mmd", "sinkhorn"}));
  s->add_option("--rho-mode", sel.rho_mode)
      ->check(CLI::IsMember({"fixed", "auto", "supervised"}))
      ->capture_default_str();
  s->add_option("--rho", sel.rho, "Cutoff for fixed mode")->capture_default_str();
  s->add_option("--delta-min", sel.delta_min, "Minimum stability interval width");
  s->add_option("--delta-min-fraction", sel.delta_min_fraction,
                "Default minimum width as a fraction of the discrepancy range")
      ->capture_default_str();
  s->add_option("--lambda", sel.lambda, "Per-component penalty in auto mode");
  s->add_option("--loss-weighting", sel.loss_weighting)
      ->check(CLI::IsMember({"unweighted", "counts"}))
      ->capture_default_str();
  s->add_option("--calibration", sel.calibration,
                "Labeled CSV (last column = label) for supervised mode; repeatable");

  BaselinesOptions base;
  auto *b = app.add_subcommand("baselines", "Run competing selection rules");
  add_fit_options(*b, base);
  b->add_option("--methods", base.methods, "bic, elbow, silhouette, gap, parallel-analysis")
      ->delimiter(',')
      ->capture_default_str();
  b->add_option("--gap-refs", base.gap_refs)->capture_default_str();
  b->add_option("--pa-permutations", base.pa_permutations)->capture_default_str();
  b->add_option("--pa-quantile", base.pa_quantile)->capture_default_str();

  ReportOptions rep;
  auto *r = app.add_subcommand("report", "Selection accuracy and clustering agreement tables");
  r->add_option("--results", rep.results, "CSV with columns k_hat,k_true; repeatable");
  r->add_option("--truth-labels", rep.truth_labels);
  r->add_option("--pred-labels", rep.pred_labels);
  r->add_flag("--header", rep.header);
  r->add_option("--output-dir", rep.output_dir)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (g->parsed())
      cmd_generate(gen);
    else if (s->parsed())
      cmd_select(sel);
    else if (b->parsed())
      cmd_baselines(base);
    else
      cmd_report(rep);
  } catch (const Error &e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

} // namespace acdc::cli
