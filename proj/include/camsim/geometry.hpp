#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "camsim/error.hpp"
#include "camsim/transform.hpp"

namespace camsim {

struct TriangleMesh {
  std::vector<Vec3> vertices;                 // meters
  std::vector<std::array<int, 3>> triangles;  // indices into vertices
  std::vector<Vec3> normals;                  // optional, per vertex

  /// Index bounds and degenerate-triangle (repeated index) checks.
  void validate() const;
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return lo.x() > hi.x(); }
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }

  /// Slab test against [t_min, t_max]; inv_dir is the component-wise
  /// reciprocal of the ray direction (infinities are fine).
  bool hit(const Vec3& origin, const Vec3& inv_dir, double t_min,
           double t_max) const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length in world space
};

struct TriangleHit {
  double t = 0;    // distance along the ray (meters)
  double u = 0, v = 0;  // barycentric coordinates of the hit
};

/// Moller-Trumbore; returns nullopt for misses, parallels and t <= t_min.
std::optional<TriangleHit> intersect_triangle(const Vec3& origin,
                                              const Vec3& dir, const Vec3& a,
                                              const Vec3& b, const Vec3& c,
                                              double t_min = 1e-9);

Aabb mesh_bounds(const TriangleMesh& mesh);

}  // namespace camsim
