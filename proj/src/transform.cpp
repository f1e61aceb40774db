#include "camsim/transform.hpp"

#include <cmath>
#include <numbers>

namespace camsim {

RigidTransform RigidTransform::yaw_deg(double deg) {
  RigidTransform x;
  x.rotation = Eigen::Quaterniond(
      Eigen::AngleAxisd(deg * std::numbers::pi / 180.0, Vec3::UnitZ()));
  return x;
}

bool RigidTransform::approx_equal(const RigidTransform& o, double tol) const {
  const double rot = 1.0 - std::abs(rotation.dot(o.rotation));
  return (translation - o.translation).norm() <= tol &&
         std::abs(scale - o.scale) <= tol && rot <= tol;
}

RigidTransform interpolate_transform(const RigidTransform& t0,
                                     const RigidTransform& t1, double u) {
  RigidTransform out;
  out.translation = (1.0 - u) * t0.translation + u * t1.translation;
  out.scale = (1.0 - u) * t0.scale + u * t1.scale;
  out.rotation = t0.rotation.slerp(u, t1.rotation);
  return out;
}

RigidTransform decompose_affine(const Eigen::Matrix4d& m) {
  if (std::abs(m(3, 0)) > 1e-12 || std::abs(m(3, 1)) > 1e-12 ||
      std::abs(m(3, 2)) > 1e-12 || std::abs(m(3, 3) - 1.0) > 1e-12)
    throw ValidationError("matrix is not affine");
  const Eigen::Matrix3d lin = m.topLeftCorner<3, 3>();
  const double det = lin.determinant();
  if (det <= 0)
    throw ValidationError("transform must preserve orientation (det > 0)");
  const double scale = std::cbrt(det);
  const Eigen::Matrix3d rot = lin / scale;
  // Rotation check: R^T R == I rules out shear and non-uniform scale.
  const double err = (rot.transpose() * rot - Eigen::Matrix3d::Identity())
                         .cwiseAbs()
                         .maxCoeff();
  if (err > 1e-9)
    throw ValidationError(
        "transform has shear or non-uniform scale; only "
        "translation+rotation+uniform scale is supported");
  RigidTransform out;
  out.translation = m.topRightCorner<3, 1>();
  out.rotation = Eigen::Quaterniond(rot).normalized();
  out.scale = scale;
  return out;
}

}  // namespace camsim
