#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "camsim/error.hpp"

namespace camsim {

using Vec3 = Eigen::Vector3d;

/// Translation + rotation + uniform scale. This is the only transform the
/// recipe schema can express, which keeps interpolation well defined
/// (shear never reaches the renderer).
struct RigidTransform {
  Vec3 translation = Vec3::Zero();
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  double scale = 1.0;

  Vec3 apply_point(const Vec3& p) const {
    return rotation * (p * scale) + translation;
  }
  Vec3 apply_vector(const Vec3& v) const { return rotation * (v * scale); }
  /// Normals transform by rotation only (uniform scale drops out after
  /// normalization).
  Vec3 apply_normal(const Vec3& n) const { return rotation * n; }

  Eigen::Affine3d to_affine() const {
    Eigen::Affine3d a = Eigen::Affine3d::Identity();
    a.translate(translation).rotate(rotation).scale(scale);
    return a;
  }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.scale = 1.0 / scale;
    inv.rotation = rotation.conjugate();
    inv.translation = -(inv.rotation * translation) * inv.scale;
    return inv;
  }

  static RigidTransform translate(const Vec3& t) {
    RigidTransform x;
    x.translation = t;
    return x;
  }
  static RigidTransform yaw_deg(double deg);

  bool approx_equal(const RigidTransform& o, double tol = 1e-12) const;
};

/// Component-wise interpolation at u in [0,1]: linear on translation and
/// scale, spherical-linear on rotation. u=0 gives t0 exactly, u=1 gives t1.
RigidTransform interpolate_transform(const RigidTransform& t0,
                                     const RigidTransform& t1, double u);

/// Decompose a 4x4 affine matrix into translation/rotation/uniform-scale.
/// Throws ValidationError when the linear part has shear or non-uniform
/// scale (tolerance 1e-9 relative).
RigidTransform decompose_affine(const Eigen::Matrix4d& m);

}  // namespace camsim
