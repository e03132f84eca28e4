#include "acdc/baselines.hpp"
#include "acdc/parallel.hpp"
#include "acdc/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace acdc::baselines {

namespace {

/// Relabels arbitrary ids to 0..k-1 in order of first appearance.
LabelVector compact(const LabelVector &labels, int &k) {
  std::map<int, int> ids;
  LabelVector out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it = ids.emplace(labels[i], static_cast<int>(ids.size())).first;
    out[i] = it->second;
  }
  k = static_cast<int>(ids.size());
  return out;
}

void require_labels(const DataMatrix &data, const LabelVector &labels) {
  require(static_cast<Eigen::Index>(labels.size()) == data.rows(), ErrorCode::LengthMismatch,
          "labels (" + std::to_string(labels.size()) + ") do not match the data rows (" +
              std::to_string(data.rows()) + ")");
}

/// Type-7 sample quantile of a sorted vector.
double quantile_sorted(const std::vector<double> &v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Vector descending_cov_eigenvalues(const DataMatrix &x) {
  const Matrix centred = x.rowwise() - x.colwise().mean();
  const Matrix cov = centred.transpose() * centred / static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

KMeansResult lloyd(const DataMatrix &data, int k, Rng &rng, int max_iters) {
  const Eigen::Index n = data.rows();
  // k-means++ seeding
  Matrix c(k, data.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  c.row(0) = data.row(pick(rng));
  Vector d2 = (data.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = d2.sum();
    Eigen::Index next = pick(rng);
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= d2(i);
        if (u <= 0.0) {
          next = i;
          break;
        }
      }
    }
    c.row(j) = data.row(next);
    d2 = d2.cwiseMin((data.rowwise() - c.row(j)).rowwise().squaredNorm());
  }

  KMeansResult res;
  res.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      (c.rowwise() - data.row(i)).rowwise().squaredNorm().minCoeff(&arg);
      if (res.labels[static_cast<std::size_t>(i)] != static_cast<int>(arg)) {
        res.labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
        changed = true;
      }
    }
    if (!changed)
      break;
    const Matrix updated = centroids(data, res.labels, k);
    // an emptied cluster keeps its previous centre
    std::vector<long long> sizes(static_cast<std::size_t>(k), 0);
    for (int l : res.labels)
      ++sizes[static_cast<std::size_t>(l)];
    for (int j = 0; j < k; ++j)
      if (sizes[static_cast<std::size_t>(j)] > 0)
        c.row(j) = updated.row(j);
  }
  res.centroids = c;
  res.wcss = wcss(data, res.labels, c);
  return res;
}

} // namespace

double bic_mixture(double loglik, long long n_free_params, long long n) {
  require(n >= 1, ErrorCode::InvalidArgument, "BIC needs N >= 1");
  return static_cast<double>(n_free_params) * std::log(static_cast<double>(n)) - 2.0 * loglik;
}

double bic_pmf(double cond_loglik, int k, long long n) {
  require(n >= 1 && k >= 1, ErrorCode::InvalidArgument, "BIC needs N, K >= 1");
  return k * std::log(static_cast<double>(n)) - 2.0 * cond_loglik + 2.0 * std::lgamma(k + 1.0);
}

BaselineResult bic_select(const std::map<int, double> &bic, std::string method) {
  require(!bic.empty(), ErrorCode::EmptyInput, "no BIC scores");
  BaselineResult r;
  r.method = std::move(method);
  r.per_k_scores = bic;
  r.k_hat = bic.begin()->first;
  for (const auto &[k, v] : bic)
    if (v < bic.at(r.k_hat))
      r.k_hat = k;
  return r;
}

Matrix centroids(const DataMatrix &data, const LabelVector &labels, int k) {
  require_labels(data, labels);
  Matrix c = Matrix::Zero(k, data.cols());
  std::vector<long long> sizes(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    require(l >= 0 && l < k, ErrorCode::InvalidArgument,
            "label " + std::to_string(l) + " is outside 0.." + std::to_string(k - 1));
    c.row(l) += data.row(static_cast<Eigen::Index>(i));
    ++sizes[static_cast<std::size_t>(l)];
  }
  for (int j = 0; j < k; ++j)
    if (sizes[static_cast<std::size_t>(j)] > 0)
      c.row(j) /= static_cast<double>(sizes[static_cast<std::size_t>(j)]);
  return c;
}

double wcss(const DataMatrix &data, const LabelVector &labels, const Matrix &cents) {
  require_labels(data, labels);
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < cents.rows(), ErrorCode::InvalidArgument,
            "label " + std::to_string(labels[i]) + " has no centroid");
    s += (data.row(static_cast<Eigen::Index>(i)) - cents.row(labels[i])).squaredNorm();
  }
  return s;
}

double wcss(const DataMatrix &data, const LabelVector &labels) {
  int k = 0;
  const LabelVector l = compact(labels, k);
  return wcss(data, l, centroids(data, l, k));
}

BaselineResult elbow_select(const std::map<int, double> &wcss_per_k) {
  BaselineResult r;
  r.method = "elbow";
  for (const auto &[k, w] : wcss_per_k) {
    const auto prev = wcss_per_k.find(k - 1), next = wcss_per_k.find(k + 1);
    if (prev != wcss_per_k.end() && next != wcss_per_k.end())
      r.per_k_scores[k] = prev->second - 2.0 * w + next->second;
  }
  require(!r.per_k_scores.empty(), ErrorCode::TooFewPoints,
          "elbow rule needs WCSS at three consecutive K");
  r.k_hat = r.per_k_scores.begin()->first;
  for (const auto &[k, v] : r.per_k_scores)
    if (v > r.per_k_scores.at(r.k_hat))
      r.k_hat = k;
  r.aux["wcss"] = {};
  for (const auto &[k, w] : wcss_per_k)
    r.aux["wcss"].push_back(w);
  return r;
}

double silhouette_score(const DataMatrix &data, const LabelVector &labels) {
  require_labels(data, labels);
  int k = 0;
  const LabelVector l = compact(labels, k);
  const Eigen::Index n = data.rows();
  if (n == 0)
    return 0.0;
  std::vector<long long> sizes(static_cast<std::size_t>(k), 0);
  for (int v : l)
    ++sizes[static_cast<std::size_t>(v)];
  std::vector<double> s(static_cast<std::size_t>(n), 0.0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    const int own = l[i];
    if (k < 2 || sizes[static_cast<std::size_t>(own)] < 2)
      return;
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    const auto row = data.row(static_cast<Eigen::Index>(i));
    for (Eigen::Index j = 0; j < n; ++j)
      sum[static_cast<std::size_t>(l[static_cast<std::size_t>(j)])] += (data.row(j) - row).norm();
    const double a = sum[static_cast<std::size_t>(own)] /
                     static_cast<double>(sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c)
      if (c != own)
        b = std::min(b, sum[static_cast<std::size_t>(c)] / static_cast<double>(sizes[static_cast<std::size_t>(c)]));
    const double m = std::max(a, b);
    s[i] = m > 0.0 ? (b - a) / m : 0.0;
  });
  return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
}

BaselineResult silhouette_select(const DataMatrix &data,
                                 const std::map<int, LabelVector> &labelings) {
  require(!labelings.empty(), ErrorCode::EmptyInput, "no labelings");
  BaselineResult r;
  r.method = "silhouette";
  for (const auto &[k, labels] : labelings)
    if (k >= 2)
      r.per_k_scores[k] = silhouette_score(data, labels);
  require(!r.per_k_scores.empty(), ErrorCode::InvalidArgument, "silhouette needs some K >= 2");
  r.k_hat = r.per_k_scores.begin()->first;
  for (const auto &[k, v] : r.per_k_scores)
    if (v > r.per_k_scores.at(r.k_hat))
      r.k_hat = k;
  return r;
}

KMeansResult kmeans(const DataMatrix &data, int k, std::uint64_t seed, int n_starts, int max_iters) {
  require(k >= 1 && data.rows() >= k, ErrorCode::TooFewSamples, "k-means needs N >= K >= 1");
  require(n_starts >= 1 && max_iters >= 1, ErrorCode::InvalidArgument, "invalid k-means settings");
  KMeansResult best;
  best.wcss = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_starts; ++s) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(s)});
    KMeansResult r = lloyd(data, k, rng, max_iters);
    if (r.wcss < best.wcss)
      best = std::move(r);
  }
  return best;
}

BaselineResult gap_select(const DataMatrix &data, const std::map<int, LabelVector> &labelings,
                          int b, std::uint64_t seed, GapRule rule) {
  require(b >= 1, ErrorCode::InvalidArgument, "gap statistic needs B >= 1");
  require(!labelings.empty(), ErrorCode::EmptyInput, "no labelings");
  const double tiny = std::numeric_limits<double>::min();
  const Eigen::RowVectorXd lo = data.colwise().minCoeff(), hi = data.colwise().maxCoeff();

  std::vector<int> ks;
  for (const auto &entry : labelings)
    ks.push_back(entry.first);
  // log W_b(K) for every reference and K
  std::vector<std::vector<double>> log_w(static_cast<std::size_t>(b));
  parallel_for(static_cast<std::size_t>(b), [&](std::size_t r) {
    Rng rng = make_rng(seed, {0x9a9, r});
    DataMatrix ref(data.rows(), data.cols());
    for (Eigen::Index i = 0; i < ref.rows(); ++i)
      for (Eigen::Index d = 0; d < ref.cols(); ++d)
        ref(i, d) = std::uniform_real_distribution<double>(lo(d), hi(d))(rng);
    for (int k : ks) {
      const double w = kmeans(ref, k, derive_seed(seed, {0x9a9, r, static_cast<std::uint64_t>(k)})).wcss;
      log_w[r].push_back(std::log(std::max(w, tiny)));
    }
  });

  BaselineResult res;
  res.method = "gap";
  std::vector<double> gap, sk;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    double mean = 0.0;
    for (const auto &row : log_w)
      mean += row[j];
    mean /= b;
    double var = 0.0;
    for (const auto &row : log_w)
      var += (row[j] - mean) * (row[j] - mean);
    var /= b;
    const double g = mean - std::log(std::max(wcss(data, labelings.at(ks[j])), tiny));
    gap.push_back(g);
    sk.push_back(std::sqrt(var) * std::sqrt(1.0 + 1.0 / b));
    res.per_k_scores[ks[j]] = g;
  }
  res.aux["s_k"] = sk;

  if (rule == GapRule::Argmax) {
    res.k_hat = ks[static_cast<std::size_t>(std::max_element(gap.begin(), gap.end()) - gap.begin())];
    return res;
  }
  res.k_hat = ks.back();
  for (std::size_t j = 0; j + 1 < ks.size(); ++j)
    if (ks[j + 1] == ks[j] + 1 && gap[j] >= gap[j + 1] - sk[j + 1]) {
      res.k_hat = ks[j];
      break;
    }
  return res;
}

BaselineResult parallel_analysis(const DataMatrix &x, int n_perm, double quantile,
                                 std::uint64_t seed) {
  require(n_perm >= 1, ErrorCode::InvalidArgument, "parallel analysis needs n_perm >= 1");
  require(quantile > 0.0 && quantile < 1.0, ErrorCode::InvalidArgument,
          "quantile must lie in (0, 1)");
  require(x.rows() >= 2 && x.cols() >= 1, ErrorCode::TooFewSamples,
          "parallel analysis needs at least two observations");
  const Vector data_eig = descending_cov_eigenvalues(x);
  // shuffling sorted columns makes the replicates independent of the row order
  DataMatrix sorted = x;
  for (Eigen::Index d = 0; d < x.cols(); ++d)
    std::sort(sorted.col(d).begin(), sorted.col(d).end());
  std::vector<Vector> perm_eig(static_cast<std::size_t>(n_perm));
  parallel_for(perm_eig.size(), [&](std::size_t r) {
    Rng rng = make_rng(seed, {0x9a, r});
    DataMatrix p(x.rows(), x.cols());
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index d = 0; d < x.cols(); ++d) {
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        p(i, d) = sorted(idx[static_cast<std::size_t>(i)], d);
    }
    perm_eig[r] = descending_cov_eigenvalues(p);
  });

  BaselineResult res;
  res.method = "parallel-analysis";
  res.k_hat = 0;
  std::vector<double> thresholds;
  for (Eigen::Index j = 0; j < data_eig.size(); ++j) {
    std::vector<double> v;
    for (const auto &e : perm_eig)
      v.push_back(e(j));
    std::sort(v.begin(), v.end());
    const double t = quantile_sorted(v, quantile);
    thresholds.push_back(t);
    if (data_eig(j) > t)
      ++res.k_hat;
  }
  res.aux["eigenvalues"] = std::vector<double>(data_eig.begin(), data_eig.end());
  res.aux["thresholds"] = thresholds;
  for (Eigen::Index j = 0; j < data_eig.size(); ++j)
    res.per_k_scores[static_cast<int>(j) + 1] = data_eig(j) - thresholds[static_cast<std::size_t>(j)];
  return res;
}

} // namespace acdc::baselines
