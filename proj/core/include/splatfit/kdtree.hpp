#pragma once

// Median-split 3D k-d tree for nearest-neighbor queries over point clouds.
// Distances are plain squared Euclidean sums, so results match an O(n^2)
// scan exactly.

#include <algorithm>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "splatfit/vec.hpp"

namespace splatfit {

class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Vec3>& points) : points_(points) {
    if (points_.empty()) throw std::invalid_argument("KdTree3 on empty cloud");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(points_.size());
    root_ = build(0, static_cast<int>(points_.size()));
  }

  struct Hit {
    int index = -1;
    Real dist2 = 0;
  };

  Hit nearest(const Vec3& q) const {
    Hit best{-1, std::numeric_limits<Real>::infinity()};
    search(root_, q, best);
    return best;
  }

  /// k nearest neighbors, closest first.
  std::vector<Hit> knearest(const Vec3& q, int k) const {
    std::priority_queue<std::pair<Real, int>> heap;  // max-heap on dist2
    search_k(root_, q, k, heap);
    std::vector<Hit> out(heap.size());
    for (size_t i = heap.size(); i-- > 0;) {
      out[i] = {heap.top().second, heap.top().first};
      heap.pop();
    }
    return out;
  }

  static Real dist2(const Vec3& a, const Vec3& b) {
    const Real dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
  }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1, right = -1;
  };

  int build(int lo, int hi) {
    if (lo >= hi) return -1;
    // Split along the widest extent.
    Vec3 mn = points_[order_[lo]], mx = mn;
    for (int i = lo + 1; i < hi; ++i) {
      const Vec3& p = points_[order_[i]];
      mn = {std::min(mn.x, p.x), std::min(mn.y, p.y), std::min(mn.z, p.z)};
      mx = {std::max(mx.x, p.x), std::max(mx.y, p.y), std::max(mx.z, p.z)};
    }
    const Vec3 ext = mx - mn;
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid,
                     order_.begin() + hi, [&](int a, int b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    Node node;
    node.point = order_[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(lo, mid);
    const int right = build(mid + 1, hi);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int node_id, const Vec3& q, Hit& best) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    const Real d2 = dist2(q, points_[node.point]);
    if (d2 < best.dist2) best = {node.point, d2};
    const Real delta = q[node.axis] - points_[node.point][node.axis];
    const int first = delta < 0 ? node.left : node.right;
    const int second = delta < 0 ? node.right : node.left;
    search(first, q, best);
    if (delta * delta < best.dist2) search(second, q, best);
  }

  void search_k(int node_id, const Vec3& q, int k,
                std::priority_queue<std::pair<Real, int>>& heap) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    const Real d2 = dist2(q, points_[node.point]);
    if (static_cast<int>(heap.size()) < k)
      heap.emplace(d2, node.point);
    else if (d2 < heap.top().first) {
      heap.pop();
      heap.emplace(d2, node.point);
    }
    const Real delta = q[node.axis] - points_[node.point][node.axis];
    const int first = delta < 0 ? node.left : node.right;
    const int second = delta < 0 ? node.right : node.left;
    search_k(first, q, k, heap);
    if (static_cast<int>(heap.size()) < k || delta * delta < heap.top().first)
      search_k(second, q, k, heap);
  }

  std::vector<Vec3> points_;  // owned copy; queries stay valid on their own
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace splatfit
