#include "camsim/geometry.hpp"

#include <string>

namespace camsim {

void TriangleMesh::validate() const {
  const int n = int(vertices.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= n)
        throw ValidationError("triangle " + std::to_string(t) +
                              ": index out of range (" +
                              std::to_string(tri[k]) + " of " +
                              std::to_string(n) + " vertices)");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw ValidationError("triangle " + std::to_string(t) +
                            ": degenerate (repeated index)");
  }
  if (!normals.empty() && normals.size() != vertices.size())
    throw ValidationError("per-vertex normal count does not match vertices");
}

bool Aabb::hit(const Vec3& origin, const Vec3& inv_dir, double t_min,
               double t_max) const {
  for (int i = 0; i < 3; ++i) {
    double t0 = (lo[i] - origin[i]) * inv_dir[i];
    double t1 = (hi[i] - origin[i]) * inv_dir[i];
    if (t0 > t1) std::swap(t0, t1);
    t_min = t0 > t_min ? t0 : t_min;
    t_max = t1 < t_max ? t1 : t_max;
    if (t_max < t_min) return false;
  }
  return true;
}

std::optional<TriangleHit> intersect_triangle(const Vec3& origin,
                                              const Vec3& dir, const Vec3& a,
                                              const Vec3& b, const Vec3& c,
                                              double t_min) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-15) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(q) * inv_det;
  if (t <= t_min) return std::nullopt;
  return TriangleHit{t, u, v};
}

Aabb mesh_bounds(const TriangleMesh& mesh) {
  Aabb box;
  for (const auto& v : mesh.vertices) box.expand(v);
  return box;
}

}  // namespace camsim
