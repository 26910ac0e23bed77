#pragma once

// Static kd-tree over 3D points for fixed-radius neighbor queries.

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace smc::bundles {

class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Eigen::Vector3d> points, int leaf_size = 8);

  /// Ids i with |points[i] - x| < r, ascending. r <= 0 gives an empty set.
  std::vector<std::size_t> radius_query(const Eigen::Vector3d& x, double r) const;
  /// Same, appending to `out` (not cleared, not sorted).
  void radius_query(const Eigen::Vector3d& x, double r, std::vector<std::size_t>& out) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    int left = -1;
    int right = -1;
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
  };

  int build(int begin, int end);

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int leaf_size_ = 8;
};

}  // namespace smc::bundles
