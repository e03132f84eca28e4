#pragma once

#include "acdc/discrepancy.hpp"

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

/// The accumulated cutoff loss, its exact piecewise-linear curves in rho, and
/// the rules that turn curves into a selected number of components.
namespace acdc {

enum class LossWeighting { Unweighted, Counts };

[[nodiscard]] std::string_view to_string(LossWeighting w) noexcept;
/// Accepts unweighted, counts.
[[nodiscard]] LossWeighting parse_loss_weighting(std::string_view name);

/// One row of K discrepancies per candidate K = k_min, k_min + 1, ...
struct DiscrepancyTable {
  int k_min = 1;
  std::vector<DiscrepancyRow> rows;

  [[nodiscard]] int k_max() const noexcept { return k_min + static_cast<int>(rows.size()) - 1; }
  [[nodiscard]] const DiscrepancyRow &at(int k) const;
};

/// sum_k w_k max(0, d_k - rho), w_k = 1 or N_k.
[[nodiscard]] double acdc_loss(std::span<const double> d, double rho, LossWeighting weighting,
                               std::span<const long long> counts = {});
/// Row version: empty components are skipped, infinite ones make the loss infinite.
[[nodiscard]] double acdc_loss(const DiscrepancyRow &row, double rho, LossWeighting weighting);

/// Smallest K among the minimizers.
[[nodiscard]] int select_k(const std::map<int, double> &losses);

/// rho -> loss for one K on rho >= 0, stored exactly.
struct LossCurve {
  int k = 0;
  /// Some component is flagged infinite: the loss is +inf everywhere.
  bool infinite = false;
  /// 0 followed by the distinct positive discrepancies, ascending.
  std::vector<double> points;
  /// Loss at each point, evaluated directly.
  std::vector<double> values;
  /// slopes[i] holds on [points[i], points[i+1]); the last one is 0.
  std::vector<double> slopes;
  /// Finite discrepancies entering the curve (may be negative).
  std::vector<double> discrepancies;

  [[nodiscard]] double evaluate(double rho) const;
  /// Loss at rho and the slope just to its right.
  [[nodiscard]] std::pair<double, double> piece_at(double rho) const;
};

[[nodiscard]] LossCurve build_loss_curve(int k, const DiscrepancyRow &row, LossWeighting weighting);
[[nodiscard]] std::vector<LossCurve> build_loss_curves(const DiscrepancyTable &table,
                                                       LossWeighting weighting);

/// A maximal rho range [start, end) on which K alone attains the minimum.
struct MinimizerInterval {
  int k = 0;
  double start = 0.0;
  double end = 0.0; // +inf for the last one
};

/// Exact partition of [0, inf) by the minimizer of loss(K, rho) + penalty * K.
/// Ranges where several curves tie are omitted.
[[nodiscard]] std::vector<MinimizerInterval>
minimizer_intervals(const std::vector<LossCurve> &curves, double penalty);

struct AutoRhoConfig {
  /// Default delta_min_fraction * range of the observed finite discrepancies,
  /// with negative estimates clipped to zero.
  std::optional<double> delta_min;
  double delta_min_fraction = 0.1;
  /// Default 0.01 * largest finite discrepancy.
  std::optional<double> lambda;
  /// Default: the largest finite discrepancy.
  std::optional<double> rho_grid_max;
};

enum class RhoMode { Fixed, Auto, Supervised };

[[nodiscard]] std::string_view to_string(RhoMode mode) noexcept;
/// Accepts fixed, auto, supervised.
[[nodiscard]] RhoMode parse_rho_mode(std::string_view name);

struct SelectionResult {
  int k_hat = 0;
  double rho_used = 0.0;
  RhoMode mode = RhoMode::Fixed;
  /// Unpenalized losses at rho_used.
  std::map<int, double> per_k_losses;
  std::optional<std::pair<double, double>> stability_interval;
  /// Auto mode: no interval reached delta_min; the widest one was used.
  bool no_stable_interval = false;
  double lambda = 0.0;
  double delta_min = 0.0;
  double rho_grid_max = 0.0;
  std::vector<MinimizerInterval> intervals;
  std::string diagnostics;
};

/// Minimizer of the unpenalized losses at a given rho.
[[nodiscard]] SelectionResult select_at_rho(const std::vector<LossCurve> &curves, double rho,
                                            RhoMode mode = RhoMode::Fixed);

/// Walks the penalized minimizer intervals from rho = 0 and takes the first
/// one at least delta_min wide.
[[nodiscard]] SelectionResult auto_select_rho(const std::vector<LossCurve> &curves,
                                              const AutoRhoConfig &cfg);

struct CalibrationRun {
  std::vector<LossCurve> curves;
  LabelVector truth;
  /// Labels produced by the fitted model with K components.
  std::function<LabelVector(int)> labels_for_k;
};

/// Smallest rho maximizing the F-measure of the rho-selected labeling,
/// averaged over runs.
[[nodiscard]] double calibrate_rho_supervised(const std::vector<CalibrationRun> &runs);

/// All rho where some curve has a knot or two curves (penalized by penalty * K) cross.
[[nodiscard]] std::vector<double> breakpoints(const std::vector<LossCurve> &curves, double penalty);

} // namespace acdc
