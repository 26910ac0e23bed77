#include "smc/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace smc::bundles {

KdTree::KdTree(std::vector<Eigen::Vector3d> points, int leaf_size)
    : points_(std::move(points)), leaf_size_(std::max(1, leaf_size)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, int(points_.size()));
  }
}

int KdTree::build(int begin, int end) {
  const int id = int(nodes_.size());
  nodes_.emplace_back();
  Eigen::Vector3d lo = points_[order_[begin]], hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::radius_query(const Eigen::Vector3d& x, double r, std::vector<std::size_t>& out) const {
  if (!(r > 0) || nodes_.empty()) return;
  const double r2 = r * r;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    // squared distance from x to the node's bounding box
    const Eigen::Vector3d d = (node.lo - x).cwiseMax(x - node.hi).cwiseMax(0.0);
    if (d.squaredNorm() >= r2) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const std::size_t id = order_[i];
        if ((points_[id] - x).squaredNorm() < r2) out.push_back(id);
      }
      continue;
    }
    if (top + 2 > 128) throw std::logic_error("kd-tree: traversal stack overflow");
    stack[top++] = node.left;
    stack[top++] = node.right;
  }
}

std::vector<std::size_t> KdTree::radius_query(const Eigen::Vector3d& x, double r) const {
  std::vector<std::size_t> out;
  radius_query(x, r, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace smc::bundles
