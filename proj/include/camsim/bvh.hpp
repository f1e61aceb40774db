#pragma once

#include <functional>
#include <vector>

#include "camsim/geometry.hpp"

namespace camsim {

/// Binary BVH over caller-supplied primitive bounds. Median split on the
/// widest centroid axis; fully deterministic for a given input order.
class Bvh {
 public:
  Bvh() = default;
  explicit Bvh(const std::vector<Aabb>& primitive_bounds);

  bool empty() const { return nodes_.empty(); }

  /// Walk the tree front-to-back-ish. `test(prim, t_max)` intersects one
  /// primitive and returns the hit distance (or a negative value for a
  /// miss); traversal shrinks t_max as hits are found. Returns the index
  /// of the closest-hit primitive, or -1.
  int intersect(const Vec3& origin, const Vec3& direction, double t_max,
                const std::function<double(int, double)>& test) const;

  /// Early-out occlusion query: true when any primitive reports a hit
  /// closer than t_max.
  bool occluded(const Vec3& origin, const Vec3& direction, double t_max,
                const std::function<double(int, double)>& test) const;

 private:
  struct Node {
    Aabb bounds;
    int left = -1;    // internal: left child (right = left+1)
    int first = 0;    // leaf: first primitive index
    int count = 0;    // leaf: primitive count (0 for internal nodes)
  };

  int build(std::vector<int>& prims, int begin, int end,
            const std::vector<Aabb>& bounds);

  std::vector<Node> nodes_;
  std::vector<int> order_;  // primitive indices in leaf order
};

}  // namespace camsim
