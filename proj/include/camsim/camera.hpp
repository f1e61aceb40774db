#pragma once

#include <memory>
#include <optional>

#include "camsim/geometry.hpp"
#include "camsim/lens.hpp"
#include "camsim/recipe.hpp"

namespace camsim {

/// Right-handed camera basis built from position / look_at / up.
struct CameraFrame {
  Vec3 position = Vec3::Zero();
  Vec3 right = Vec3::UnitY();
  Vec3 up = Vec3::UnitZ();
  Vec3 forward = Vec3::UnitX();

  static CameraFrame from_config(const CameraConfig& cfg);
  Vec3 to_world_dir(const Vec3& cam) const {
    return cam.x() * right + cam.y() * up + cam.z() * forward;
  }
  Vec3 to_camera_point(const Vec3& world) const {
    const Vec3 d = world - position;
    return Vec3(d.dot(right), d.dot(up), d.dot(forward));
  }
};

/// Pinhole projection of a camera-frame point onto normalized film
/// coordinates (x in [-0.5, 0.5] across the horizontal field of view).
/// Returns nullopt for points at or behind the camera plane.
std::optional<Eigen::Vector2d> pinhole_project(const Vec3& camera_point,
                                               double fov_deg);

/// Equidistant fisheye: film radius = f * theta with f = 1/fov_rad so the
/// horizontal field of view spans the unit film width.
std::optional<Eigen::Vector2d> fisheye_project(const Vec3& camera_point,
                                               double fov_deg);

struct CameraRaySample {
  Ray ray;            // world space, meters
  double weight = 0;  // irradiance estimator weight (0 = vignetted)
};

/// Generates primary rays for all three camera models. Pixel coordinates
/// are continuous with (0,0) the top-left corner of the top-left pixel;
/// +x right, +y down.
class Camera {
 public:
  Camera(const CameraConfig& cfg, int film_px_w, int film_px_h,
         std::shared_ptr<const LensPrescription> lens = nullptr);

  /// True when primary-ray geometry depends on wavelength (lens model).
  bool chromatic() const { return cfg_.model == CameraModel::lens; }

  /// Sample a primary ray through continuous pixel position (px, py).
  /// Lens model: samples the rear element disk and traces with diffraction;
  /// weight carries the rear-pupil solid-angle factor.
  /// Analytic models: weight = pi (documented irradiance factor).
  CameraRaySample generate_ray(double px, double py, double lambda_nm,
                               Rng& rng) const;

  /// Deterministic ray for metadata: pixel center, no jitter, no
  /// diffraction; lens model traces through the rear vertex center.
  std::optional<Ray> central_ray(double px, double py) const;

  /// World point -> continuous pixel coordinates (analytic models only).
  std::optional<Eigen::Vector2d> project(const Vec3& world_point) const;

  const CameraFrame& frame() const { return frame_; }

 private:
  Eigen::Vector2d pixel_to_normalized(double px, double py) const;
  std::optional<Ray> lens_ray(double px, double py, double lambda_nm,
                              const Eigen::Vector2d& rear_sample, Rng* rng) const;

  CameraConfig cfg_;
  CameraFrame frame_;
  int width_ = 0, height_ = 0;
  std::shared_ptr<const LensPrescription> lens_;
};

/// Documented irradiance factor for analytic camera models: pixel
/// irradiance = kAnalyticIrradianceFactor * mean sampled radiance.
constexpr double kAnalyticIrradianceFactor = 3.14159265358979323846;

}  // namespace camsim
