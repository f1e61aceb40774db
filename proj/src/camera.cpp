#include "camsim/camera.hpp"

#include <cmath>
#include <numbers>

namespace camsim {

CameraFrame CameraFrame::from_config(const CameraConfig& cfg) {
  CameraFrame f;
  f.position = cfg.position;
  f.forward = (cfg.look_at - cfg.position);
  if (f.forward.norm() < 1e-12)
    throw ValidationError("camera look_at coincides with position");
  f.forward.normalize();
  Vec3 up_hint = cfg.up;
  if (std::abs(up_hint.normalized().dot(f.forward)) > 1.0 - 1e-9)
    throw ValidationError("camera up vector is parallel to the view direction");
  f.right = f.forward.cross(up_hint).normalized();
  f.up = f.right.cross(f.forward).normalized();
  return f;
}

std::optional<Eigen::Vector2d> pinhole_project(const Vec3& p, double fov_deg) {
  if (p.z() <= 1e-12) return std::nullopt;
  const double f = 0.5 / std::tan(fov_deg * std::numbers::pi / 360.0);
  return Eigen::Vector2d(f * p.x() / p.z(), f * p.y() / p.z());
}

std::optional<Eigen::Vector2d> fisheye_project(const Vec3& p, double fov_deg) {
  const double norm = p.norm();
  if (norm < 1e-12) return std::nullopt;
  const double fov_rad = fov_deg * std::numbers::pi / 180.0;
  const double theta = std::acos(std::clamp(p.z() / norm, -1.0, 1.0));
  const double rxy = std::hypot(p.x(), p.y());
  const double f = 1.0 / fov_rad;
  if (rxy < 1e-15) return Eigen::Vector2d(0.0, 0.0);
  const double r = f * theta;
  return Eigen::Vector2d(r * p.x() / rxy, r * p.y() / rxy);
}

Camera::Camera(const CameraConfig& cfg, int film_px_w, int film_px_h,
               std::shared_ptr<const LensPrescription> lens)
    : cfg_(cfg),
      frame_(CameraFrame::from_config(cfg)),
      width_(film_px_w),
      height_(film_px_h),
      lens_(std::move(lens)) {
  if (width_ < 1 || height_ < 1)
    throw ValidationError("film must be at least 1x1 pixels");
  if (cfg_.model == CameraModel::lens && !lens_)
    throw ValidationError("lens camera requires a prescription");
  if (cfg_.model != CameraModel::lens && !(cfg_.fov_deg > 0 && cfg_.fov_deg < 180.0) &&
      cfg_.model == CameraModel::pinhole)
    throw ValidationError("pinhole fov_deg must lie in (0, 180)");
}

Eigen::Vector2d Camera::pixel_to_normalized(double px, double py) const {
  // x in [-0.5, 0.5] across the film width; y scaled for square pixels.
  const double x = px / width_ - 0.5;
  const double y = (0.5 - py / height_) * (double(height_) / width_);
  return Eigen::Vector2d(x, y);
}

std::optional<Ray> Camera::lens_ray(double px, double py, double lambda_nm,
                                    const Eigen::Vector2d& rear_sample,
                                    Rng* rng) const {
  // The lens forms an inverted image; negate film coordinates so rendered
  // images come out upright.
  const double fx = -(px / width_ - 0.5) * cfg_.film_width_mm;
  const double fy = -(0.5 - py / height_) * cfg_.film_height_mm;
  Rng dummy(0);
  auto traced = trace_through_lens(Eigen::Vector2d(fx, fy), rear_sample,
                                   lambda_nm, *lens_, rng ? *rng : dummy,
                                   nullptr, rng != nullptr);
  if (!traced) return std::nullopt;
  Ray out;
  const double front_z = lens_->front_vertex_z();
  const Vec3 local = traced->origin - Vec3(0, 0, front_z);
  out.origin = frame_.position + frame_.to_world_dir(local * 1e-3);
  out.direction = frame_.to_world_dir(traced->direction).normalized();
  return out;
}

CameraRaySample Camera::generate_ray(double px, double py, double lambda_nm,
                                     Rng& rng) const {
  CameraRaySample out;
  if (cfg_.model == CameraModel::lens) {
    // Uniform sample on the rear element disk.
    const double ra = lens_->rear_semi_aperture_mm();
    const double r = ra * std::sqrt(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const Eigen::Vector2d rear(r * std::cos(phi), r * std::sin(phi));
    // Geometric weight: rear-disk solid angle seen from the film point,
    // with the usual cos^4 falloff. Proportional radiometry; the sensor
    // gain absorbs the absolute constant.
    const double fx = (px / width_ - 0.5) * cfg_.film_width_mm;
    const double fy = (0.5 - py / height_) * cfg_.film_height_mm;
    const double z = lens_->film_distance_mm;
    const double cos_theta =
        z / std::sqrt(fx * fx + fy * fy + z * z);
    const double area = std::numbers::pi * ra * ra;
    const double weight =
        area * cos_theta * cos_theta * cos_theta * cos_theta / (z * z);
    auto ray = lens_ray(px, py, lambda_nm, rear, &rng);
    if (!ray) return out;  // vignetted, weight 0
    out.ray = *ray;
    out.weight = weight;
    return out;
  }

  const Eigen::Vector2d n = pixel_to_normalized(px, py);
  Vec3 dir_cam;
  if (cfg_.model == CameraModel::pinhole) {
    const double f = 0.5 / std::tan(cfg_.fov_deg * std::numbers::pi / 360.0);
    dir_cam = Vec3(n.x(), n.y(), f).normalized();
  } else {  // equidistant fisheye
    const double fov_rad = cfg_.fov_deg * std::numbers::pi / 180.0;
    const double r = n.norm();
    const double theta = r * fov_rad;
    if (theta >= std::numbers::pi) return out;  // outside the mapping
    if (r < 1e-15) {
      dir_cam = Vec3(0, 0, 1);
    } else {
      const double s = std::sin(theta);
      dir_cam = Vec3(s * n.x() / r, s * n.y() / r, std::cos(theta));
    }
  }
  out.ray.origin = frame_.position;
  out.ray.direction = frame_.to_world_dir(dir_cam).normalized();
  out.weight = kAnalyticIrradianceFactor;
  return out;
}

std::optional<Ray> Camera::central_ray(double px, double py) const {
  if (cfg_.model == CameraModel::lens) {
    // Center-band wavelength, rear vertex center, no diffraction.
    const double lambda = 550.0;
    return lens_ray(px, py, lambda, Eigen::Vector2d::Zero(), nullptr);
  }
  Rng none(0);
  CameraRaySample s = generate_ray(px, py, 550.0, none);
  if (s.weight <= 0) return std::nullopt;
  return s.ray;
}

std::optional<Eigen::Vector2d> Camera::project(const Vec3& world_point) const {
  const Vec3 p = frame_.to_camera_point(world_point);
  std::optional<Eigen::Vector2d> n;
  if (cfg_.model == CameraModel::pinhole)
    n = pinhole_project(p, cfg_.fov_deg);
  else if (cfg_.model == CameraModel::fisheye)
    n = fisheye_project(p, cfg_.fov_deg);
  else
    return std::nullopt;  // no single projection through a thick lens
  if (!n) return std::nullopt;
  const double px = (n->x() + 0.5) * width_;
  const double py = (0.5 - n->y() * (double(width_) / height_)) * height_;
  return Eigen::Vector2d(px, py);
}

}  // namespace camsim
