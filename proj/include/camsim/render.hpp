#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "camsim/camera.hpp"
#include "camsim/scene.hpp"

namespace camsim {

struct RenderConfig {
  int width = 64;
  int height = 64;
  int samples_per_pixel = 16;
  int max_path_depth = 4;
  std::uint64_t seed = 0;
  bool metadata = true;
  WavelengthGrid grid = WavelengthGrid::standard();
  /// Overrides the recipe's shutter when set (open_s, close_s).
  std::optional<std::pair<double, double>> shutter_override;
  int threads = 1;

  void validate() const;
};

struct RenderStats {
  std::int64_t camera_rays = 0;
  std::int64_t vignetted_camera_rays = 0;
  double seconds = 0.0;
  bool all_vignetted = false;  // zero-weight image warning flag

  double vignetted_fraction() const {
    return camera_rays ? double(vignetted_camera_rays) / camera_rays : 0.0;
  }
};

struct RenderResult {
  SpectralImage image;
  RenderStats stats;
};

struct ScatterSample {
  Vec3 direction;              // world space, unit
  Eigen::ArrayXd throughput;   // per band
};

/// Material scattering. Diffuse: cosine-weighted hemisphere around the
/// normal. Retroreflective: with probability retro_fraction a Gaussian
/// lobe of width sigma_retro around the reversed incident direction
/// (mirrored back above the surface if it dips below), otherwise
/// Lambertian. Throughput is the per-band reflectance either way.
/// omega_in points toward the surface; normal faces the incident side.
ScatterSample scatter(const MaterialSpec& material, const Vec3& omega_in,
                      const Vec3& normal, Rng& rng);

/// Cosine-weighted hemisphere sample around `normal` (exposed for tests).
Vec3 cosine_sample_hemisphere(const Vec3& normal, Rng& rng);

/// Monte Carlo spectral render of a recipe-built scene. Deterministic for
/// fixed (seed, spp, resolution): per-pixel RNG streams are keyed by
/// (seed, pixel index, sample index), so thread count cannot change the
/// output. Metadata comes from the shutter-open central ray of each pixel.
RenderResult render(const Scene& scene, const RenderConfig& cfg);

}  // namespace camsim
