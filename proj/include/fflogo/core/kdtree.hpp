#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fflogo/core/point_cloud.hpp"

namespace fflogo {

/**
 * @brief Static kd-tree over a point cloud.
 *
 * Query results are defined to match an exhaustive linear scan ordered by
 * (squared distance, index): ties at equal distance always resolve to the
 * lower point index. Radius queries are inclusive (d <= r). The tree owns a
 * copy of the points and is safe for concurrent read-only queries.
 */
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud) : pts_(cloud.points) {
    if (pts_.empty()) throw std::invalid_argument("KdTree: empty cloud");
    order_.resize(pts_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(pts_.size()));
  }

  std::size_t size() const { return pts_.size(); }
  const Eigen::Vector3d& point(int i) const { return pts_[i]; }

  /// Indices of the k nearest points, sorted by (distance, index).
  std::vector<int> knn(const Eigen::Vector3d& query, int k,
                       std::vector<double>* sq_dists = nullptr) const {
    if (k <= 0) throw std::invalid_argument("knn: k must be positive");
    k = std::min<int>(k, static_cast<int>(pts_.size()));
    KnnHeap heap(k);
    search_knn(root_, query, heap);
    auto entries = heap.sorted();
    std::vector<int> idx(entries.size());
    if (sq_dists) sq_dists->resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      idx[i] = entries[i].index;
      if (sq_dists) (*sq_dists)[i] = entries[i].d2;
    }
    return idx;
  }

  /// All indices with distance <= radius, sorted by (distance, index).
  std::vector<int> radius(const Eigen::Vector3d& query, double r) const {
    if (r < 0.0) throw std::invalid_argument("radius: negative radius");
    std::vector<Entry> found;
    search_radius(root_, query, r * r, found);
    std::sort(found.begin(), found.end(), [](const Entry& a, const Entry& b) {
      return a.d2 != b.d2 ? a.d2 < b.d2 : a.index < b.index;
    });
    std::vector<int> idx(found.size());
    for (std::size_t i = 0; i < found.size(); ++i) idx[i] = found[i].index;
    return idx;
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Entry {
    double d2;
    int index;
    bool worse_than(const Entry& o) const {
      return d2 != o.d2 ? d2 > o.d2 : index > o.index;
    }
  };

  // Bounded max-heap keyed by (d2, index); the top is the current worst.
  class KnnHeap {
   public:
    explicit KnnHeap(int k) : k_(k) { heap_.reserve(k); }

    bool full() const { return static_cast<int>(heap_.size()) == k_; }
    double worst_d2() const { return heap_.front().d2; }

    void offer(const Entry& e) {
      if (!full()) {
        heap_.push_back(e);
        std::push_heap(heap_.begin(), heap_.end(), cmp);
      } else if (heap_.front().worse_than(e)) {
        std::pop_heap(heap_.begin(), heap_.end(), cmp);
        heap_.back() = e;
        std::push_heap(heap_.begin(), heap_.end(), cmp);
      }
    }

    std::vector<Entry> sorted() {
      std::sort(heap_.begin(), heap_.end(), [](const Entry& a, const Entry& b) {
        return a.d2 != b.d2 ? a.d2 < b.d2 : a.index < b.index;
      });
      return heap_;
    }

   private:
    static bool cmp(const Entry& a, const Entry& b) { return b.worse_than(a); }
    int k_;
    std::vector<Entry> heap_;
  };

  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  int build(int begin, int end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Eigen::Vector3d lo = pts_[order_[begin]], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(pts_[order_[i]]);
      hi = hi.cwiseMax(pts_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                       const double ca = pts_[a][axis], cb = pts_[b][axis];
                       return ca != cb ? ca < cb : a < b;
                     });
    node.axis = axis;
    node.split = pts_[order_[mid]][axis];
    nodes_.push_back(node);
    const int self = static_cast<int>(nodes_.size()) - 1;
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void search_knn(int ni, const Eigen::Vector3d& q, KnnHeap& heap) const {
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        heap.offer({(pts_[idx] - q).squaredNorm(), idx});
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search_knn(near, q, heap);
    // Visit the far side on exact ties too: an equidistant point there may
    // carry a lower index.
    if (!heap.full() || diff * diff <= heap.worst_d2()) search_knn(far, q, heap);
  }

  void search_radius(int ni, const Eigen::Vector3d& q, double r2,
                     std::vector<Entry>& out) const {
    const Node& node = nodes_[ni];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (pts_[idx] - q).squaredNorm();
        if (d2 <= r2) out.push_back({d2, idx});
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search_radius(near, q, r2, out);
    if (diff * diff <= r2) search_radius(far, q, r2, out);
  }

  std::vector<Eigen::Vector3d> pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = 0;
};

}  // namespace fflogo
