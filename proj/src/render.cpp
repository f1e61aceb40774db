#include "camsim/render.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <thread>

namespace camsim {

void RenderConfig::validate() const {
  if (width < 1 || height < 1)
    throw ValidationError("render resolution must be at least 1x1");
  if (samples_per_pixel < 1)
    throw ValidationError("samples_per_pixel must be >= 1");
  if (max_path_depth < 1) throw ValidationError("max_path_depth must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (shutter_override && !(shutter_override->first < shutter_override->second))
    throw ValidationError("shutter override must satisfy open < close");
}

namespace {

void orthonormal_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
  const Vec3 helper = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  t1 = n.cross(helper).normalized();
  t2 = n.cross(t1);
}

}  // namespace

Vec3 cosine_sample_hemisphere(const Vec3& normal, Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double r = std::sqrt(u1);
  const double phi = 2.0 * std::numbers::pi * u2;
  Vec3 t1, t2;
  orthonormal_basis(normal, t1, t2);
  const double z = std::sqrt(std::max(0.0, 1.0 - u1));
  return (r * std::cos(phi) * t1 + r * std::sin(phi) * t2 + z * normal)
      .normalized();
}

ScatterSample scatter(const MaterialSpec& material, const Vec3& omega_in,
                      const Vec3& normal, Rng& rng) {
  ScatterSample out;
  out.throughput = material.spectrum.values;
  if (material.kind == MaterialKind::retroreflective &&
      rng.uniform() < material.retro_fraction) {
    const Vec3 back = -omega_in.normalized();
    Vec3 t1, t2;
    orthonormal_basis(back, t1, t2);
    const double a1 = rng.normal(0.0, material.sigma_retro_rad);
    const double a2 = rng.normal(0.0, material.sigma_retro_rad);
    Vec3 dir = (back + a1 * t1 + a2 * t2).normalized();
    const double below = dir.dot(normal);
    if (below < 0.0) dir = (dir - 2.0 * below * normal).normalized();
    out.direction = dir;
    return out;
  }
  out.direction = cosine_sample_hemisphere(normal, rng);
  return out;
}

namespace {

constexpr double kRayEpsilon = 1e-6;  // meters; offset against self-hits

Eigen::ArrayXd trace_path(const Scene& scene, Ray ray,
                          const Scene::TimeSlice& slice, int max_depth,
                          Rng& rng) {
  const int n_bands = scene.grid().n_bands;
  Eigen::ArrayXd radiance = Eigen::ArrayXd::Zero(n_bands);
  Eigen::ArrayXd throughput = Eigen::ArrayXd::Ones(n_bands);
  // The environment is sampled by next-event estimation at diffuse
  // vertices, so rays leaving such a vertex must not collect it again on a
  // miss. Primary rays and retro-scattered rays do collect it.
  bool env_on_miss = true;

  for (int depth = 0; depth <= max_depth; ++depth) {
    auto hit = scene.intersect(ray.origin, ray.direction, slice);
    if (!hit) {
      if (env_on_miss)
        radiance += throughput * scene.environment().radiance(ray.direction);
      break;
    }
    const MaterialSpec& mat = scene.materials()[hit->material];
    if (mat.kind == MaterialKind::emissive) {
      radiance += throughput * mat.spectrum.values;
      break;
    }
    if (depth == max_depth) break;

    Vec3 n = hit->normal;
    if (n.dot(ray.direction) > 0) n = -n;  // face the incident side
    const Vec3 shade_point = hit->position + kRayEpsilon * n;

    if (mat.kind == MaterialKind::diffuse) {
      // Next-event estimation toward the environment: with a cosine pdf
      // the estimator reduces to reflectance * env radiance.
      const Vec3 light_dir = cosine_sample_hemisphere(n, rng);
      if (!scene.occluded(shade_point, light_dir, slice))
        radiance += throughput * mat.spectrum.values *
                    scene.environment().radiance(light_dir);
      const Vec3 next_dir = cosine_sample_hemisphere(n, rng);
      throughput *= mat.spectrum.values;
      ray.origin = shade_point;
      ray.direction = next_dir;
      env_on_miss = false;
    } else {  // retroreflective
      const ScatterSample s = scatter(mat, ray.direction, n, rng);
      throughput *= s.throughput;
      ray.origin = shade_point;
      ray.direction = s.direction;
      env_on_miss = true;
    }
    if ((throughput <= 0.0).all()) break;
  }
  return radiance;
}

}  // namespace

RenderResult render(const Scene& scene, const RenderConfig& cfg) {
  cfg.validate();
  const auto t_begin = std::chrono::steady_clock::now();

  const SceneRecipe& recipe = scene.recipe();
  const double shutter_open =
      cfg.shutter_override ? cfg.shutter_override->first : recipe.shutter_open_s;
  const double shutter_close = cfg.shutter_override
                                   ? cfg.shutter_override->second
                                   : recipe.shutter_close_s;
  if (!(shutter_open < shutter_close))
    throw ValidationError("shutter must satisfy open < close");

  Camera camera(recipe.camera, cfg.width, cfg.height, scene.lens());
  const int n_bands = cfg.grid.n_bands;
  if (!(scene.grid() == cfg.grid))
    throw GridMismatchError("scene was built on a different wavelength grid");

  RenderResult out;
  out.image = SpectralImage(cfg.width, cfg.height, cfg.grid, cfg.metadata);

  const Scene::TimeSlice open_slice = scene.transforms_at(0.0);
  std::atomic<std::int64_t> vignetted{0};
  std::atomic<int> next_row{0};

  auto worker = [&]() {
    std::int64_t local_vignetted = 0;
    for (;;) {
      const int y = next_row.fetch_add(1);
      if (y >= cfg.height) break;
      for (int x = 0; x < cfg.width; ++x) {
        const std::uint64_t pixel_index =
            std::uint64_t(y) * cfg.width + x;

        Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(n_bands);
        Eigen::ArrayXd weight_count = Eigen::ArrayXd::Zero(n_bands);
        for (int s = 0; s < cfg.samples_per_pixel; ++s) {
          Rng rng = make_stream(cfg.seed, pixel_index, std::uint64_t(s));
          // Stratified shutter time: every 1/spp sub-interval gets a sample.
          const double u_time =
              (s + rng.uniform()) / cfg.samples_per_pixel;
          const double jx = rng.uniform();
          const double jy = rng.uniform();
          const double px = x + jx;
          const double py = y + jy;

          int band = -1;  // -1: achromatic sample covering all bands
          double lambda = 550.0;
          if (camera.chromatic()) {
            band = s % n_bands;
            lambda = cfg.grid.center_nm(band);
          }

          const CameraRaySample cam = camera.generate_ray(px, py, lambda, rng);
          if (band < 0)
            weight_count += 1.0;
          else
            weight_count[band] += 1.0;
          if (cam.weight <= 0) {
            ++local_vignetted;
            continue;
          }

          // transform_start/_end sit at shutter open/close, so the uniform
          // draw u_time is the interpolation parameter directly.
          const Scene::TimeSlice slice = scene.transforms_at(u_time);
          const Eigen::ArrayXd L =
              trace_path(scene, cam.ray, slice, cfg.max_path_depth, rng);
          if (band < 0)
            sum += L * cam.weight;
          else
            sum[band] += L[band] * cam.weight;
        }
        for (int b = 0; b < n_bands; ++b) {
          const double v =
              weight_count[b] > 0 ? sum[b] / weight_count[b] : 0.0;
          out.image.at(x, y, b) = float(v);
        }

        if (cfg.metadata) {
          const std::size_t i = out.image.plane_index(x, y);
          auto central = camera.central_ray(x + 0.5, y + 0.5);
          if (central) {
            auto hit = scene.intersect(central->origin, central->direction,
                                       open_slice);
            if (hit) {
              out.image.depth[i] = float(hit->t);
              out.image.class_id[i] = hit->class_id;
              out.image.instance_id[i] = hit->instance_id;
            }
          }
        }
      }
    }
    vignetted += local_vignetted;
  };

  if (cfg.threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min(cfg.threads, cfg.height);
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  out.stats.camera_rays =
      std::int64_t(cfg.width) * cfg.height * cfg.samples_per_pixel;
  out.stats.vignetted_camera_rays = vignetted.load();
  out.stats.all_vignetted =
      out.stats.vignetted_camera_rays == out.stats.camera_rays;
  out.stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin)
          .count();
  return out;
}

}  // namespace camsim
