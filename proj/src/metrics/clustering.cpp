#include "acdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace acdc::metrics {

namespace {

struct Contingency {
  std::vector<std::vector<long long>> table; // rows: truth, cols: pred
  std::vector<long long> a, b;
  long long n = 0;
};

std::vector<int> dense_ids(const LabelVector &labels, int &n_ids) {
  std::map<int, int> ids;
  for (int l : labels)
    ids.emplace(l, 0);
  int next = 0;
  for (auto &[label, id] : ids)
    id = next++;
  n_ids = next;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    out[i] = ids[labels[i]];
  return out;
}

Contingency contingency(const LabelVector &truth, const LabelVector &pred) {
  require(truth.size() == pred.size(), ErrorCode::LengthMismatch,
          "label vectors have lengths " + std::to_string(truth.size()) + " and " +
              std::to_string(pred.size()));
  require(!truth.empty(), ErrorCode::EmptyInput, "label vectors are empty");
  int r = 0, c = 0;
  const auto t = dense_ids(truth, r);
  const auto p = dense_ids(pred, c);
  Contingency ct;
  ct.table.assign(static_cast<std::size_t>(r), std::vector<long long>(static_cast<std::size_t>(c), 0));
  ct.a.assign(static_cast<std::size_t>(r), 0);
  ct.b.assign(static_cast<std::size_t>(c), 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    ++ct.table[static_cast<std::size_t>(t[i])][static_cast<std::size_t>(p[i])];
    ++ct.a[static_cast<std::size_t>(t[i])];
    ++ct.b[static_cast<std::size_t>(p[i])];
  }
  ct.n = static_cast<long long>(t.size());
  return ct;
}

double choose2(long long x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

double entropy(const std::vector<long long> &sizes, long long n) {
  double h = 0.0;
  for (long long s : sizes)
    if (s > 0) {
      const double p = static_cast<double>(s) / static_cast<double>(n);
      h -= p * std::log(p);
    }
  return h;
}

} // namespace

double f_measure(const LabelVector &truth, const LabelVector &pred) {
  const Contingency ct = contingency(truth, pred);
  double f = 0.0;
  for (std::size_t i = 0; i < ct.a.size(); ++i) {
    double best = 0.0;
    for (std::size_t j = 0; j < ct.b.size(); ++j) {
      const auto nij = static_cast<double>(ct.table[i][j]);
      if (nij == 0.0)
        continue;
      const double prec = nij / static_cast<double>(ct.b[j]);
      const double rec = nij / static_cast<double>(ct.a[i]);
      best = std::max(best, 2.0 * prec * rec / (prec + rec));
    }
    f += static_cast<double>(ct.a[i]) / static_cast<double>(ct.n) * best;
  }
  return f;
}

double ari(const LabelVector &truth, const LabelVector &pred) {
  const Contingency ct = contingency(truth, pred);
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto &row : ct.table)
    for (long long v : row)
      sum_ij += choose2(v);
  for (long long v : ct.a)
    sum_a += choose2(v);
  for (long long v : ct.b)
    sum_b += choose2(v);
  const double expected = sum_a * sum_b / choose2(ct.n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected)
    return 1.0; // both partitions trivial in the same way
  return (sum_ij - expected) / (max_index - expected);
}

double ami(const LabelVector &truth, const LabelVector &pred) {
  const Contingency ct = contingency(truth, pred);
  if ((ct.a.size() == 1 && ct.b.size() == 1) ||
      (ct.a.size() == static_cast<std::size_t>(ct.n) && ct.b.size() == static_cast<std::size_t>(ct.n)))
    return 1.0;
  const auto n = static_cast<double>(ct.n);
  double mi = 0.0;
  for (std::size_t i = 0; i < ct.a.size(); ++i)
    for (std::size_t j = 0; j < ct.b.size(); ++j) {
      const auto nij = static_cast<double>(ct.table[i][j]);
      if (nij > 0.0)
        mi += nij / n *
              std::log(n * nij / (static_cast<double>(ct.a[i]) * static_cast<double>(ct.b[j])));
    }
  // expected mutual information under the hypergeometric permutation model
  const double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (long long ai : ct.a)
    for (long long bj : ct.b) {
      const auto a = static_cast<double>(ai), b = static_cast<double>(bj);
      const long long lo = std::max(1LL, ai + bj - ct.n), hi = std::min(ai, bj);
      const double base = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::lgamma(n - a + 1.0) +
                          std::lgamma(n - b + 1.0) - lg_n;
      for (long long nij = lo; nij <= hi; ++nij) {
        const auto v = static_cast<double>(nij);
        const double log_p = base - std::lgamma(v + 1.0) - std::lgamma(a - v + 1.0) -
                             std::lgamma(b - v + 1.0) - std::lgamma(n - a - b + v + 1.0);
        emi += v / n * std::log(n * v / (a * b)) * std::exp(log_p);
      }
    }
  const double norm = std::max(entropy(ct.a, ct.n), entropy(ct.b, ct.n));
  const double denom = norm - emi;
  if (std::abs(denom) < 1e-15)
    return mi - emi >= 0.0 ? 1.0 : 0.0;
  return (mi - emi) / denom;
}

SelectionAccuracy selection_accuracy(const std::vector<int> &estimates,
                                     const std::vector<int> &truths) {
  require(estimates.size() == truths.size(), ErrorCode::LengthMismatch,
          "estimates and truths differ in length");
  require(!estimates.empty(), ErrorCode::EmptyInput, "no selections to score");
  const auto t = static_cast<double>(estimates.size());
  SelectionAccuracy acc;
  std::vector<double> dev(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    dev[i] = static_cast<double>(estimates[i] - truths[i]);
    acc.mae += std::abs(dev[i]);
    acc.zero_one += estimates[i] != truths[i] ? 1.0 : 0.0;
  }
  acc.mae /= t;
  acc.zero_one /= t;
  std::sort(dev.begin(), dev.end());
  const std::size_t mid = dev.size() / 2;
  acc.median_dev = dev.size() % 2 == 1 ? dev[mid] : 0.5 * (dev[mid - 1] + dev[mid]);
  return acc;
}

} // namespace acdc::metrics
