#include "camsim/scene.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "camsim/spectral_image_io.hpp"

namespace camsim {

EnvironmentLight EnvironmentLight::uniform(const Spectrum& radiance) {
  EnvironmentLight e;
  e.uniform_ = radiance;
  return e;
}

EnvironmentLight EnvironmentLight::from_map(SpectralImage map, double scale,
                                            const WavelengthGrid& grid) {
  if (!(map.grid == grid)) {
    // Resample every pixel spectrum onto the render grid once, up front.
    SpectralImage resampled(map.width, map.height, grid);
    for (int y = 0; y < map.height; ++y)
      for (int x = 0; x < map.width; ++x) {
        const Spectrum s = resample(map.pixel_spectrum(x, y), grid);
        for (int b = 0; b < grid.n_bands; ++b)
          resampled.at(x, y, b) = float(s.values[b]);
      }
    map = std::move(resampled);
  }
  EnvironmentLight e;
  e.map_ = std::move(map);
  e.scale_ = scale;
  e.uniform_ = Spectrum::zero(grid);
  return e;
}

Eigen::ArrayXd EnvironmentLight::radiance(const Vec3& dir) const {
  if (!map_) return uniform_.values;
  // Equirectangular lookup, world z up: v spans polar angle, u azimuth.
  const double theta = std::acos(std::clamp(dir.z(), -1.0, 1.0));
  const double phi = std::atan2(dir.y(), dir.x());
  const double u = (phi + std::numbers::pi) / (2.0 * std::numbers::pi);
  const double v = theta / std::numbers::pi;
  int x = int(u * map_->width);
  int y = int(v * map_->height);
  x = std::clamp(x, 0, map_->width - 1);
  y = std::clamp(y, 0, map_->height - 1);
  Eigen::ArrayXd out(map_->grid.n_bands);
  for (int b = 0; b < map_->grid.n_bands; ++b)
    out[b] = map_->at(x, y, b) * scale_;
  return out;
}

void Scene::add_object(const AssetDescription& asset, const RigidTransform& t0,
                       const RigidTransform& t1, int instance_id) {
  Object obj;
  obj.t_start = t0;
  obj.t_end = t1;
  obj.is_static = t0.approx_equal(t1);
  const int object_index = int(objects_.size());
  objects_.push_back(obj);

  const int class_id = class_label_id(asset.class_label);
  for (const auto& [mesh, material_name] : asset.meshes) {
    MaterialSpec mat = asset.materials.at(material_name);
    mat.spectrum = resample(mat.spectrum, grid_);
    const int material_index = int(materials_.size());
    materials_.push_back(std::move(mat));
    for (const auto& tri : mesh.triangles) {
      Prim p;
      p.object = object_index;
      p.material = material_index;
      p.class_id = class_id;
      p.instance_id = instance_id;
      if (obj.is_static) {
        p.a = t0.apply_point(mesh.vertices[tri[0]]);
        p.b = t0.apply_point(mesh.vertices[tri[1]]);
        p.c = t0.apply_point(mesh.vertices[tri[2]]);
        Aabb box;
        box.expand(p.a);
        box.expand(p.b);
        box.expand(p.c);
        prim_bounds_.push_back(box);
      } else {
        p.a = mesh.vertices[tri[0]];
        p.b = mesh.vertices[tri[1]];
        p.c = mesh.vertices[tri[2]];
        // Conservative swept bounds: union over interpolation samples,
        // padded by the largest vertex step between adjacent samples
        // (covers the arc bulge of rotational motion).
        Aabb box;
        double pad = 0.0;
        Vec3 prev[3];
        constexpr int kSamples = 9;
        for (int s = 0; s < kSamples; ++s) {
          const double u = double(s) / (kSamples - 1);
          const RigidTransform xf = interpolate_transform(t0, t1, u);
          const Vec3 w[3] = {xf.apply_point(p.a), xf.apply_point(p.b),
                             xf.apply_point(p.c)};
          for (int k = 0; k < 3; ++k) {
            box.expand(w[k]);
            if (s > 0) pad = std::max(pad, (w[k] - prev[k]).norm());
            prev[k] = w[k];
          }
        }
        box.lo -= Vec3::Constant(pad);
        box.hi += Vec3::Constant(pad);
        prim_bounds_.push_back(box);
      }
      prims_.push_back(p);
    }
  }
}

void Scene::finalize() { bvh_ = Bvh(prim_bounds_); }

Scene Scene::build(const SceneRecipe& recipe, const WavelengthGrid& grid,
                   const std::string& base_dir) {
  namespace fs = std::filesystem;
  auto resolve = [&](const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute() || base_dir.empty()) return p;
    return (fs::path(base_dir) / p).string();
  };

  Scene scene;
  scene.grid_ = grid;
  scene.recipe_ = recipe;

  const AssetStore store(resolve(recipe.asset_store_path));
  recipe.validate(store);

  if (recipe.lighting.type == "uniform") {
    scene.env_ = EnvironmentLight::uniform(
        Spectrum::constant(grid, recipe.lighting.level));
  } else {
    SpectralImage map =
        read_spectral_image(resolve(recipe.lighting.envmap_path));
    scene.env_ = EnvironmentLight::from_map(std::move(map),
                                            recipe.lighting.scale, grid);
  }

  if (recipe.camera.model == CameraModel::lens) {
    scene.lens_ = std::make_shared<LensPrescription>(
        load_lens(resolve(recipe.camera.lens_file), grid));
  }

  for (const auto& obj : recipe.objects)
    scene.add_object(store.load(obj.asset_id), obj.transform_start,
                     obj.transform_end, obj.instance_id);
  scene.finalize();
  return scene;
}

Scene::TimeSlice Scene::transforms_at(double u) const {
  TimeSlice slice;
  slice.world_from_object.reserve(objects_.size());
  slice.object_from_world.reserve(objects_.size());
  for (const auto& obj : objects_) {
    if (obj.is_static) {
      slice.world_from_object.push_back(obj.t_start);
      slice.object_from_world.push_back(obj.t_start.inverse());
    } else {
      const RigidTransform xf =
          interpolate_transform(obj.t_start, obj.t_end, u);
      slice.world_from_object.push_back(xf);
      slice.object_from_world.push_back(xf.inverse());
    }
  }
  return slice;
}

double Scene::test_prim(int prim, const Vec3& origin, const Vec3& dir,
                        const TimeSlice& slice, Vec3* normal_out) const {
  const Prim& p = prims_[prim];
  const Object& obj = objects_[p.object];
  if (obj.is_static) {
    auto hit = intersect_triangle(origin, dir, p.a, p.b, p.c);
    if (!hit) return -1.0;
    if (normal_out) *normal_out = (p.b - p.a).cross(p.c - p.a).normalized();
    return hit->t;
  }
  // Transform the ray into object space without renormalizing the
  // direction, so the hit parameter t matches world distance.
  const RigidTransform& inv = slice.object_from_world[p.object];
  const Vec3 o = inv.apply_point(origin);
  const Vec3 d = inv.apply_vector(dir);
  auto hit = intersect_triangle(o, d, p.a, p.b, p.c);
  if (!hit) return -1.0;
  if (normal_out) {
    const RigidTransform& fwd = slice.world_from_object[p.object];
    *normal_out =
        fwd.apply_normal((p.b - p.a).cross(p.c - p.a)).normalized();
  }
  return hit->t;
}

std::optional<SceneHit> Scene::intersect(const Vec3& origin, const Vec3& dir,
                                         const TimeSlice& slice,
                                         double t_max) const {
  Vec3 best_normal = Vec3::UnitZ();
  const int best = bvh_.intersect(
      origin, dir, t_max, [&](int prim, double current_max) {
        Vec3 n;
        const double t = test_prim(prim, origin, dir, slice, &n);
        if (t > 0 && t < current_max) best_normal = n;
        return t;
      });
  if (best < 0) return std::nullopt;
  // best_normal holds the normal of the last improving hit == the best one.
  const Prim& p = prims_[best];
  SceneHit hit;
  hit.t = test_prim(best, origin, dir, slice, &best_normal);
  hit.position = origin + hit.t * dir;
  hit.normal = best_normal;
  hit.material = p.material;
  hit.class_id = p.class_id;
  hit.instance_id = p.instance_id;
  return hit;
}

bool Scene::occluded(const Vec3& origin, const Vec3& dir,
                     const TimeSlice& slice, double t_max) const {
  return bvh_.occluded(origin, dir, t_max, [&](int prim, double) {
    return test_prim(prim, origin, dir, slice, nullptr);
  });
}

std::optional<SceneHit> Scene::intersect_brute_force(
    const Vec3& origin, const Vec3& dir, const TimeSlice& slice) const {
  double best_t = 1e30;
  int best = -1;
  for (std::size_t i = 0; i < prims_.size(); ++i) {
    const double t = test_prim(int(i), origin, dir, slice, nullptr);
    if (t > 0 && t < best_t) {
      best_t = t;
      best = int(i);
    }
  }
  if (best < 0) return std::nullopt;
  Vec3 normal;
  test_prim(best, origin, dir, slice, &normal);
  const Prim& p = prims_[best];
  SceneHit hit;
  hit.t = best_t;
  hit.position = origin + best_t * dir;
  hit.normal = normal;
  hit.material = p.material;
  hit.class_id = p.class_id;
  hit.instance_id = p.instance_id;
  return hit;
}

}  // namespace camsim
