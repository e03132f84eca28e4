#include "acdc/divergence.hpp"
#include "acdc/parallel.hpp"
#include "acdc/random.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace acdc::divergence {

SampleSet::SampleSet(RowMajorMatrix points) : points_(std::move(points)) {}

SampleSet SampleSet::from_values(std::span<const double> values) {
  RowMajorMatrix m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i)
    m(static_cast<Eigen::Index>(i), 0) = values[i];
  return SampleSet(std::move(m));
}

namespace {

constexpr Eigen::Index kMaxTreeDim = 16;
constexpr Eigen::Index kLeafSize = 16;

inline double sq_dist(const double *a, const double *b, Eigen::Index dim) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < dim; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

/// Static k-d tree over row indices; median split on the widest coordinate.
class KdTree {
public:
  explicit KdTree(const RowMajorMatrix &pts) : pts_(pts), dim_(pts.cols()) {
    idx_.resize(static_cast<std::size_t>(pts.rows()));
    std::iota(idx_.begin(), idx_.end(), Eigen::Index{0});
    nodes_.reserve(2 * idx_.size() / kLeafSize + 2);
    build(0, static_cast<Eigen::Index>(idx_.size()));
  }

  /// Squared distance to the k-th nearest point other than `self`.
  [[nodiscard]] double kth_sq_dist(Eigen::Index self, int k) const {
    std::priority_queue<double> heap; // max-heap of the k best
    search(0, pts_.data() + self * dim_, self, static_cast<std::size_t>(k), heap);
    return heap.top();
  }

private:
  struct Node {
    Eigen::Index begin, end;
    int split_dim = -1; // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(Eigen::Index begin, Eigen::Index end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize)
      return id;

    int best_dim = 0;
    double best_spread = -1.0;
    for (Eigen::Index d = 0; d < dim_; ++d) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (Eigen::Index i = begin; i < end; ++i) {
        const double v = pts_(idx_[static_cast<std::size_t>(i)], d);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = static_cast<int>(d);
      }
    }
    if (best_spread <= 0.0)
      return id; // all points coincide

    const Eigen::Index mid = begin + (end - begin) / 2;
    auto first = idx_.begin() + begin;
    std::nth_element(first, idx_.begin() + mid, idx_.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) {
                       return pts_(a, best_dim) < pts_(b, best_dim);
                     });
    const double split = pts_(idx_[static_cast<std::size_t>(mid)], best_dim);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    Node &node = nodes_[static_cast<std::size_t>(id)];
    node.split_dim = best_dim;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void search(int id, const double *q, Eigen::Index self, std::size_t k,
              std::priority_queue<double> &heap) const {
    const Node &node = nodes_[static_cast<std::size_t>(id)];
    if (node.split_dim < 0) {
      for (Eigen::Index i = node.begin; i < node.end; ++i) {
        const Eigen::Index j = idx_[static_cast<std::size_t>(i)];
        if (j == self)
          continue;
        const double d2 = sq_dist(q, pts_.data() + j * dim_, dim_);
        if (heap.size() < k) {
          heap.push(d2);
        } else if (d2 < heap.top()) {
          heap.pop();
          heap.push(d2);
        }
      }
      return;
    }
    const double diff = q[node.split_dim] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, q, self, k, heap);
    if (heap.size() < k || diff * diff <= heap.top())
      search(far, q, self, k, heap);
  }

  const RowMajorMatrix &pts_;
  Eigen::Index dim_;
  std::vector<Eigen::Index> idx_;
  std::vector<Node> nodes_;
};

} // namespace

std::vector<double> kth_neighbor_distances(const SampleSet &samples, int k,
                                           bool use_tree) {
  const Eigen::Index n = samples.size();
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  require(n > k, ErrorCode::TooFewSamples,
          "need more than k=" + std::to_string(k) + " samples, got " +
              std::to_string(n));
  const auto &pts = samples.points();
  const Eigen::Index dim = samples.dim();
  std::vector<double> out(static_cast<std::size_t>(n));

  if (use_tree && dim <= kMaxTreeDim) {
    const KdTree tree(pts);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      out[i] = std::sqrt(tree.kth_sq_dist(static_cast<Eigen::Index>(i), k));
    });
    return out;
  }

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(n - 1));
    const double *q = pts.data() + static_cast<Eigen::Index>(i) * dim;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != static_cast<Eigen::Index>(i))
        d2.push_back(sq_dist(q, pts.data() + j * dim, dim));
    auto kth = d2.begin() + (k - 1);
    std::nth_element(d2.begin(), kth, d2.end());
    out[i] = std::sqrt(*kth);
  });
  return out;
}

SampleSet jitter_duplicates(const SampleSet &samples, std::uint64_t seed) {
  const Eigen::Index n = samples.size(), dim = samples.dim();
  const auto &pts = samples.points();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index d = 0; d < dim; ++d) {
      if (pts(a, d) != pts(b, d))
        return pts(a, d) < pts(b, d);
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), row_less);

  std::vector<Eigen::Index> dups;
  for (std::size_t i = 1; i < order.size(); ++i)
    if ((pts.row(order[i]).array() == pts.row(order[i - 1]).array()).all())
      dups.push_back(order[i]);
  if (dups.empty())
    return samples;

  const Eigen::RowVectorXd lo = pts.colwise().minCoeff(), hi = pts.colwise().maxCoeff();
  const double range = (hi - lo).maxCoeff();
  const double scale = 1e-10 * range;

  std::sort(dups.begin(), dups.end());
  RowMajorMatrix out = pts;
  Rng rng = make_rng(seed, {0x6a177e5ULL});
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  // the jittered point is kept inside the data's bounding box so it never
  // leaves a bounded support such as the unit cube
  for (Eigen::Index i : dups)
    for (Eigen::Index d = 0; d < dim; ++d) {
      const double delta = scale * unif(rng);
      double v = pts(i, d) + delta;
      if (v < lo(d) || v > hi(d))
        v = pts(i, d) - delta;
      if (v >= lo(d) && v <= hi(d))
        out(i, d) = v;
    }
  return SampleSet(std::move(out));
}

} // namespace acdc::divergence
