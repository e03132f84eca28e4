#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace acdc::cli {

struct GenerateOptions {
  std::string preset;
  std::string output_dir;
  long long n = 1000;
  /// Zero picks the preset's default.
  int k = 0;
  int dim = 0;
  double alpha = 0.1;
  double separation = 8.0;
  double noise_sd = 1.0;
  double mean_count = 1000.0;
  std::uint64_t seed = 0;
};

struct FitOptions {
  std::string input;
  bool header = false;
  std::string output_dir;
  std::string model = "gmm";
  int kmin = 1;
  int kmax = 6;
  int restarts = 5;
  std::uint64_t seed = 0;
};

struct SelectOptions : FitOptions {
  std::optional<std::string> divergence;
  std::string rho_mode = "auto";
  double rho = 0.0;
  std::optional<double> delta_min;
  double delta_min_fraction = 0.1;
  std::optional<double> lambda;
  std::string loss_weighting = "unweighted";
  /// Labeled datasets for supervised mode; the last column holds the true label.
  std::vector<std::string> calibration;
};

struct BaselinesOptions : FitOptions {
  std::vector<std::string> methods{"bic", "elbow", "silhouette", "gap", "parallel-analysis"};
  int gap_refs = 10;
  int pa_permutations = 20;
  double pa_quantile = 0.95;
};

struct ReportOptions {
  /// CSV files with columns k_hat,k_true; the file stem names the method.
  std::vector<std::string> results;
  std::string truth_labels;
  std::string pred_labels;
  bool header = false;
  std::string output_dir;
};

void cmd_generate(const GenerateOptions &o);
void cmd_select(const SelectOptions &o);
void cmd_baselines(const BaselinesOptions &o);
void cmd_report(const ReportOptions &o);

} // namespace acdc::cli
