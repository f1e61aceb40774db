#include "camsim/bvh.hpp"

#include <algorithm>
#include <numeric>

namespace camsim {

namespace {
constexpr int kLeafSize = 4;
}

Bvh::Bvh(const std::vector<Aabb>& primitive_bounds) {
  if (primitive_bounds.empty()) return;
  order_.resize(primitive_bounds.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * primitive_bounds.size());
  build(order_, 0, int(order_.size()), primitive_bounds);
}

int Bvh::build(std::vector<int>& prims, int begin, int end,
               const std::vector<Aabb>& bounds) {
  const int node_index = int(nodes_.size());
  nodes_.push_back(Node{});
  Aabb box;
  for (int i = begin; i < end; ++i) box.expand(bounds[prims[i]]);
  nodes_[node_index].bounds = box;

  const int count = end - begin;
  if (count <= kLeafSize) {
    nodes_[node_index].first = begin;
    nodes_[node_index].count = count;
    return node_index;
  }

  Aabb centroids;
  for (int i = begin; i < end; ++i) centroids.expand(bounds[prims[i]].center());
  int axis = 0;
  const Vec3 ext = centroids.extent();
  if (ext.y() > ext.x()) axis = 1;
  if (ext.z() > ext[axis]) axis = 2;
  const int mid = begin + count / 2;
  std::nth_element(prims.begin() + begin, prims.begin() + mid,
                   prims.begin() + end, [&](int a, int b) {
                     const double ca = bounds[a].center()[axis];
                     const double cb = bounds[b].center()[axis];
                     if (ca != cb) return ca < cb;
                     return a < b;  // stable tie-break for determinism
                   });

  const int left = build(prims, begin, mid, bounds);
  const int right = build(prims, mid, end, bounds);
  (void)right;  // right == left subtree size dependent; stored below
  nodes_[node_index].left = left;
  // Children are laid out depth-first; right child index is recorded via
  // the left child's subtree extent, so store it explicitly instead.
  nodes_[node_index].first = right;
  nodes_[node_index].count = 0;
  return node_index;
}

int Bvh::intersect(const Vec3& origin, const Vec3& direction, double t_max,
                   const std::function<double(int, double)>& test) const {
  if (nodes_.empty()) return -1;
  const Vec3 inv_dir = direction.cwiseInverse();
  int best = -1;
  int stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (!node.bounds.hit(origin, inv_dir, 1e-12, t_max)) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int prim = order_[i];
        const double t = test(prim, t_max);
        if (t > 0 && t < t_max) {
          t_max = t;
          best = prim;
        }
      }
    } else {
      stack[sp++] = node.first;  // right child
      stack[sp++] = node.left;
    }
  }
  return best;
}

bool Bvh::occluded(const Vec3& origin, const Vec3& direction, double t_max,
                   const std::function<double(int, double)>& test) const {
  if (nodes_.empty()) return false;
  const Vec3 inv_dir = direction.cwiseInverse();
  int stack[64];
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (!node.bounds.hit(origin, inv_dir, 1e-12, t_max)) continue;
    if (node.count > 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const double t = test(order_[i], t_max);
        if (t > 0 && t < t_max) return true;
      }
    } else {
      stack[sp++] = node.first;
      stack[sp++] = node.left;
    }
  }
  return false;
}

}  // namespace camsim
