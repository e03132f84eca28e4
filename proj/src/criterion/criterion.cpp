#include "acdc/criterion.hpp"
#include "acdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace acdc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_rho(double rho) {
  require(rho >= 0.0, ErrorCode::InvalidArgument,
          "rho must be nonnegative (got " + std::to_string(rho) + ")");
}

bool is_tie(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

/// Finite curves evaluated at rho plus the penalty.
std::vector<std::pair<int, double>> penalized_at(const std::vector<LossCurve> &curves, double rho,
                                                 double penalty) {
  std::vector<std::pair<int, double>> out;
  for (const auto &c : curves)
    if (!c.infinite)
      out.emplace_back(c.k, c.evaluate(rho) + penalty * c.k);
  return out;
}

struct Extent {
  double lo = kInf, hi = -kInf;
};

Extent discrepancy_extent(const std::vector<LossCurve> &curves) {
  Extent e;
  for (const auto &c : curves)
    for (double d : c.discrepancies) {
      e.lo = std::min(e.lo, d);
      e.hi = std::max(e.hi, d);
    }
  return e;
}

std::map<int, double> losses_at(const std::vector<LossCurve> &curves, double rho) {
  std::map<int, double> losses;
  for (const auto &c : curves)
    losses[c.k] = c.evaluate(rho);
  return losses;
}

} // namespace

std::string_view to_string(LossWeighting w) noexcept {
  return w == LossWeighting::Unweighted ? "unweighted" : "counts";
}

LossWeighting parse_loss_weighting(std::string_view name) {
  for (auto w : {LossWeighting::Unweighted, LossWeighting::Counts})
    if (to_string(w) == name)
      return w;
  throw Error(ErrorCode::InvalidArgument, "unknown loss weighting '" + std::string(name) + "'");
}

std::string_view to_string(RhoMode mode) noexcept {
  switch (mode) {
  case RhoMode::Fixed: return "fixed";
  case RhoMode::Auto: return "auto";
  case RhoMode::Supervised: return "supervised";
  }
  return "fixed";
}

RhoMode parse_rho_mode(std::string_view name) {
  for (auto m : {RhoMode::Fixed, RhoMode::Auto, RhoMode::Supervised})
    if (to_string(m) == name)
      return m;
  throw Error(ErrorCode::InvalidArgument, "unknown rho mode '" + std::string(name) + "'");
}

const DiscrepancyRow &DiscrepancyTable::at(int k) const {
  require(k >= k_min && k <= k_max(), ErrorCode::InvalidArgument,
          "K=" + std::to_string(k) + " is outside the table");
  return rows[static_cast<std::size_t>(k - k_min)];
}

double acdc_loss(std::span<const double> d, double rho, LossWeighting weighting,
                 std::span<const long long> counts) {
  require_rho(rho);
  const bool weighted = weighting == LossWeighting::Counts;
  require(!weighted || counts.size() == d.size(), ErrorCode::MissingCounts,
          "count-weighted loss needs one count per component");
  double loss = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] == kInf)
      return kInf;
    const double excess = std::max(0.0, d[k] - rho);
    loss += weighted ? static_cast<double>(counts[k]) * excess : excess;
  }
  return loss;
}

double acdc_loss(const DiscrepancyRow &row, double rho, LossWeighting weighting) {
  std::vector<double> d;
  std::vector<long long> n;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row.flags[k] == ComponentFlag::Empty)
      continue;
    if (row.flags[k] == ComponentFlag::Infinite)
      return kInf;
    d.push_back(row.values[k]);
    n.push_back(k < row.counts.size() ? row.counts[k] : 0);
  }
  require(weighting == LossWeighting::Unweighted || row.counts.size() == row.size(),
          ErrorCode::MissingCounts, "count-weighted loss needs usage counts");
  return acdc_loss(d, rho, weighting, n);
}

int select_k(const std::map<int, double> &losses) {
  require(!losses.empty(), ErrorCode::EmptyInput, "no losses to select from");
  auto best = losses.begin();
  for (auto it = losses.begin(); it != losses.end(); ++it)
    if (it->second < best->second)
      best = it;
  return best->first;
}

double LossCurve::evaluate(double rho) const { return piece_at(rho).first; }

std::pair<double, double> LossCurve::piece_at(double rho) const {
  require_rho(rho);
  if (infinite)
    return {kInf, 0.0};
  const auto it = std::upper_bound(points.begin(), points.end(), rho);
  const auto i = static_cast<std::size_t>(it - points.begin()) - 1;
  return {values[i] + slopes[i] * (rho - points[i]), slopes[i]};
}

LossCurve build_loss_curve(int k, const DiscrepancyRow &row, LossWeighting weighting) {
  require(weighting == LossWeighting::Unweighted || row.counts.size() == row.size(),
          ErrorCode::MissingCounts, "count-weighted loss needs usage counts");
  LossCurve c;
  c.k = k;
  std::vector<double> w;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row.flags[j] == ComponentFlag::Empty)
      continue;
    if (row.flags[j] == ComponentFlag::Infinite || !std::isfinite(row.values[j])) {
      c.infinite = true;
      continue;
    }
    c.discrepancies.push_back(row.values[j]);
    w.push_back(weighting == LossWeighting::Counts ? static_cast<double>(row.counts[j]) : 1.0);
  }
  if (c.infinite) {
    c.points = {0.0};
    c.values = {kInf};
    c.slopes = {0.0};
    return c;
  }
  c.points.push_back(0.0);
  std::vector<double> knots;
  for (double d : c.discrepancies)
    if (d > 0.0)
      knots.push_back(d);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  c.points.insert(c.points.end(), knots.begin(), knots.end());
  for (double p : c.points) {
    double value = 0.0, slope = 0.0;
    for (std::size_t j = 0; j < c.discrepancies.size(); ++j) {
      value += w[j] * std::max(0.0, c.discrepancies[j] - p);
      if (c.discrepancies[j] > p)
        slope -= w[j];
    }
    c.values.push_back(value);
    c.slopes.push_back(slope);
  }
  return c;
}

std::vector<LossCurve> build_loss_curves(const DiscrepancyTable &table, LossWeighting weighting) {
  std::vector<LossCurve> curves;
  for (int k = table.k_min; k <= table.k_max(); ++k)
    curves.push_back(build_loss_curve(k, table.at(k), weighting));
  return curves;
}

std::vector<double> breakpoints(const std::vector<LossCurve> &curves, double penalty) {
  std::vector<double> base{0.0};
  for (const auto &c : curves)
    if (!c.infinite)
      base.insert(base.end(), c.points.begin(), c.points.end());
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end()), base.end());

  std::vector<double> out = base;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double lo = base[i];
    const double hi = i + 1 < base.size() ? base[i + 1] : kInf;
    // every curve is a single line on [lo, hi)
    std::vector<std::pair<double, double>> lines;
    for (const auto &c : curves) {
      if (c.infinite)
        continue;
      const auto [v, s] = c.piece_at(lo);
      lines.emplace_back(v + penalty * c.k, s);
    }
    for (std::size_t a = 0; a < lines.size(); ++a)
      for (std::size_t b = a + 1; b < lines.size(); ++b) {
        if (lines[a].second == lines[b].second)
          continue;
        const double t = lo + (lines[b].first - lines[a].first) / (lines[a].second - lines[b].second);
        if (t > lo && t < hi)
          out.push_back(t);
      }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MinimizerInterval> minimizer_intervals(const std::vector<LossCurve> &curves,
                                                   double penalty) {
  const std::vector<double> bps = breakpoints(curves, penalty);
  std::vector<MinimizerInterval> out;
  bool extends_previous = false;
  for (std::size_t i = 0; i < bps.size(); ++i) {
    const double start = bps[i];
    const double end = i + 1 < bps.size() ? bps[i + 1] : kInf;
    const double probe = end == kInf ? start + 1.0 : 0.5 * (start + end);
    const auto vals = penalized_at(curves, probe, penalty);
    if (vals.empty())
      return out;
    auto best = vals.begin();
    for (auto it = vals.begin(); it != vals.end(); ++it)
      if (it->second < best->second)
        best = it;
    bool strict = true;
    for (auto it = vals.begin(); it != vals.end(); ++it)
      if (it != best && is_tie(it->second, best->second))
        strict = false;
    if (!strict) {
      extends_previous = false;
      continue;
    }
    if (extends_previous && out.back().k == best->first)
      out.back().end = end;
    else
      out.push_back({best->first, start, end});
    extends_previous = true;
  }
  return out;
}

SelectionResult select_at_rho(const std::vector<LossCurve> &curves, double rho, RhoMode mode) {
  require_rho(rho);
  require(!curves.empty(), ErrorCode::EmptyInput, "no loss curves");
  SelectionResult res;
  res.mode = mode;
  res.rho_used = rho;
  res.per_k_losses = losses_at(curves, rho);
  res.k_hat = select_k(res.per_k_losses);
  if (std::isinf(res.per_k_losses.at(res.k_hat)))
    res.diagnostics = "every K has an infinite loss; reporting the smallest K";
  return res;
}

SelectionResult auto_select_rho(const std::vector<LossCurve> &curves, const AutoRhoConfig &cfg) {
  require(!curves.empty(), ErrorCode::EmptyInput, "no loss curves");
  const Extent ext = discrepancy_extent(curves);
  const bool any_finite = ext.lo <= ext.hi;
  const double top = any_finite ? std::max(ext.hi, 0.0) : 0.0;

  SelectionResult res;
  res.mode = RhoMode::Auto;
  res.lambda = cfg.lambda.value_or(top > 0.0 ? 0.01 * top : 1.0);
  // the curves only see max(d, 0), so the default width ignores negative estimates
  res.delta_min = cfg.delta_min.value_or(
      any_finite ? cfg.delta_min_fraction * (top - std::clamp(ext.lo, 0.0, top)) : 0.0);
  res.rho_grid_max = cfg.rho_grid_max.value_or(top);
  require(res.lambda > 0.0, ErrorCode::InvalidArgument, "lambda must be positive");
  require(cfg.delta_min_fraction > 0.0 && (!cfg.delta_min || *cfg.delta_min > 0.0),
          ErrorCode::InvalidArgument, "delta_min must be positive");
  require(res.rho_grid_max >= 0.0, ErrorCode::InvalidArgument, "rho_grid_max must be nonnegative");

  res.intervals = minimizer_intervals(curves, res.lambda);
  const auto finish = [&](const MinimizerInterval &iv) {
    res.k_hat = iv.k;
    res.rho_used = iv.start;
    res.stability_interval = std::make_pair(iv.start, iv.end);
    res.per_k_losses = losses_at(curves, iv.start);
    return res;
  };

  if (res.intervals.empty()) {
    res.no_stable_interval = true;
    res.k_hat = curves.front().k;
    res.per_k_losses = losses_at(curves, 0.0);
    res.diagnostics = any_finite ? "penalized curves tie everywhere; reporting the smallest K"
                                 : "every K has an infinite loss; reporting the smallest K";
    return res;
  }
  if (res.intervals.size() == 1) {
    res.diagnostics = "a single K minimizes the penalized loss for every rho";
    return finish(res.intervals.front());
  }

  const MinimizerInterval *widest = nullptr;
  double widest_width = -1.0;
  for (const auto &iv : res.intervals) {
    if (iv.start >= res.rho_grid_max && iv.start > 0.0)
      break;
    const double width = std::min(iv.end, res.rho_grid_max) - iv.start;
    if (width >= res.delta_min && width > 0.0)
      return finish(iv);
    if (width > widest_width) {
      widest_width = width;
      widest = &iv;
    }
  }
  if (widest == nullptr)
    widest = &res.intervals.front();
  res.no_stable_interval = true;
  res.diagnostics = "no stability interval of width >= delta_min below rho_grid_max; "
                    "using the widest one";
  return finish(*widest);
}

double calibrate_rho_supervised(const std::vector<CalibrationRun> &runs) {
  require(!runs.empty(), ErrorCode::EmptyCalibrationSet, "no calibration runs");
  std::vector<double> grid;
  for (const auto &run : runs) {
    require(!run.curves.empty() && run.labels_for_k, ErrorCode::InvalidArgument,
            "calibration run without curves or labels");
    const auto bps = breakpoints(run.curves, 0.0);
    grid.insert(grid.end(), bps.begin(), bps.end());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  // K_hat is constant between breakpoints, so one interior probe per gap suffices
  std::vector<double> candidates;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    candidates.push_back(grid[i]);
    candidates.push_back(i + 1 < grid.size() ? 0.5 * (grid[i] + grid[i + 1]) : grid[i] + 1.0);
  }

  std::vector<std::map<int, double>> cache(runs.size());
  double best_score = -kInf, best_rho = 0.0;
  for (double rho : candidates) {
    double score = 0.0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const int k = select_k(losses_at(runs[r].curves, rho));
      auto it = cache[r].find(k);
      if (it == cache[r].end())
        it = cache[r].emplace(k, metrics::f_measure(runs[r].truth, runs[r].labels_for_k(k))).first;
      score += it->second;
    }
    score /= static_cast<double>(runs.size());
    if (score > best_score + 1e-12) {
      best_score = score;
      best_rho = rho;
    }
  }
  return best_rho;
}

} // namespace acdc
