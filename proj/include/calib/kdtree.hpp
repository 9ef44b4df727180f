#ifndef CALIB_KDTREE_HPP
#define CALIB_KDTREE_HPP

#include <algorithm>
#include <vector>

#include <Eigen/Core>

namespace calib {

// Static 2-D k-d tree for exact nearest-neighbor squared distances.
//
// Per-pair distances are computed as dx*dx + dy*dy exactly as a brute-force
// scan would, and the far subtree is only pruned when no point in it can
// strictly improve the current best, so the returned minimum is the same
// double a brute-force scan produces.
class KdTree2d {
 public:
  KdTree2d() = default;

  explicit KdTree2d(std::vector<Eigen::Vector2d> points)
      : points_(std::move(points)) {
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      root_ = build(0, static_cast<int>(points_.size()), 0);
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  // Squared distance from q to the nearest stored point. Undefined on an
  // empty tree (callers guard).
  double nearest_squared(const Eigen::Vector2d& q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };

  int build(int begin, int end, int depth) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    const int axis = depth & 1;
    const int mid = begin + (end - begin) / 2;
    std::nth_element(points_.begin() + begin, points_.begin() + mid,
                     points_.begin() + end,
                     [axis](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
                       return a[axis] < b[axis];
                     });
    node.axis = axis;
    node.split = points_[mid][axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(int index, const Eigen::Vector2d& q, double& best) const {
    const Node& node = nodes_[index];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const double dx = points_[i].x() - q.x();
        const double dy = points_[i].y() - q.y();
        const double d = dx * dx + dy * dy;
        if (d < best) best = d;
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, best);
    if (delta * delta < best) search(far, q, best);
  }

  std::vector<Eigen::Vector2d> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace calib

#endif  // CALIB_KDTREE_HPP
