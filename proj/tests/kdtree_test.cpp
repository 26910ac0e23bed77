#include "smc/kdtree.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using smc::bundles::KdTree;
using Eigen::Vector3d;

namespace {

std::vector<std::size_t> brute_force(const std::vector<Vector3d>& pts, const Vector3d& x, double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if ((pts[i] - x).norm() < r) out.push_back(i);
  return out;
}

}  // namespace

TEST_SUITE("kdtree") {

TEST_CASE("radius queries equal an exhaustive scan") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.05);
  int nonempty = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vector3d> pts(1000);
    const bool clustered = trial % 3 == 0;
    for (auto& p : pts) {
      p = clustered ? Vector3d(0.5 + g(rng), 0.5 + g(rng), 0.1 * u(rng)) : Vector3d(u(rng), u(rng), u(rng));
    }
    const KdTree tree(pts, 1 + trial % 16);
    for (int q = 0; q < 100; ++q) {
      const Vector3d x(u(rng) * 1.2 - 0.1, u(rng) * 1.2 - 0.1, u(rng) * 1.2 - 0.1);
      const double r = 0.02 + 0.2 * u(rng);
      const auto got = tree.radius_query(x, r);
      const auto want = brute_force(pts, x, r);
      CHECK(got == want);
      nonempty += !want.empty();
    }
  }
  CHECK(nonempty > 1000);
}

TEST_CASE("edge cases") {
  const std::vector<Vector3d> pts = {Vector3d(0, 0, 0), Vector3d(1, 0, 0), Vector3d(1, 0, 0),
                                     Vector3d(1, 0, 0), Vector3d(2, 0, 0)};
  const KdTree tree(pts, 1);
  CHECK(tree.radius_query(Vector3d(1, 0, 0), 0.0).empty());
  CHECK(tree.radius_query(Vector3d(1, 0, 0), -1.0).empty());
  CHECK(tree.radius_query(Vector3d(1, 0, 0), 0.5) == std::vector<std::size_t>{1, 2, 3});
  // strict inequality at the boundary
  CHECK(tree.radius_query(Vector3d(0, 0, 0), 1.0) == std::vector<std::size_t>{0});
  CHECK(tree.radius_query(Vector3d(0, 0, 0), 1.0 + 1e-12) == std::vector<std::size_t>{0, 1, 2, 3});
  const KdTree empty(std::vector<Vector3d>{});
  CHECK(empty.radius_query(Vector3d::Zero(), 10.0).empty());
  std::vector<std::size_t> acc = {99};
  tree.radius_query(Vector3d(2, 0, 0), 0.1, acc);
  CHECK(acc == std::vector<std::size_t>{99, 4});
}

}
