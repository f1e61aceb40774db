#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camsim/asset.hpp"
#include "camsim/bvh.hpp"
#include "camsim/lens.hpp"
#include "camsim/recipe.hpp"
#include "camsim/spectral.hpp"

namespace camsim {

/// Sky illumination: either a flat radiance spectrum or an equirectangular
/// spectral map (a SPIM container indexed by direction, world z up).
class EnvironmentLight {
 public:
  static EnvironmentLight uniform(const Spectrum& radiance);
  static EnvironmentLight from_map(SpectralImage map, double scale,
                                   const WavelengthGrid& grid);

  /// Radiance spectrum arriving from world direction `dir` (unit).
  Eigen::ArrayXd radiance(const Vec3& dir) const;
  bool is_uniform() const { return !map_.has_value(); }

 private:
  Spectrum uniform_;
  std::optional<SpectralImage> map_;
  double scale_ = 1.0;
};

struct SceneHit {
  double t = 0;          // meters along the ray
  Vec3 position;
  Vec3 normal;           // geometric, unit, not yet face-forwarded
  int material = -1;     // index into Scene::materials
  int class_id = 0;
  int instance_id = 0;
};

/// Recipe + asset store flattened into renderer-ready world geometry.
/// Static objects are baked into world space; mobile objects keep their
/// object-space triangles and get a per-sample interpolated transform.
class Scene {
 public:
  struct Object {
    RigidTransform t_start, t_end;
    bool is_static = true;
  };
  struct Prim {
    Vec3 a, b, c;      // world space for static prims, object space otherwise
    int object = -1;
    int material = -1;
    int class_id = 0;
    int instance_id = 0;
  };

  /// base_dir resolves the recipe's lens/envmap paths when they are
  /// relative; the asset store is opened from recipe.asset_store_path
  /// (also resolved against base_dir).
  static Scene build(const SceneRecipe& recipe, const WavelengthGrid& grid,
                     const std::string& base_dir = "");

  /// Interpolated world transforms of all mobile objects at shutter
  /// fraction u; pass the result to intersect/occluded so one camera
  /// sample sees one consistent scene time.
  struct TimeSlice {
    std::vector<RigidTransform> world_from_object;
    std::vector<RigidTransform> object_from_world;
  };
  TimeSlice transforms_at(double u) const;

  std::optional<SceneHit> intersect(const Vec3& origin, const Vec3& dir,
                                    const TimeSlice& slice,
                                    double t_max = 1e30) const;
  bool occluded(const Vec3& origin, const Vec3& dir, const TimeSlice& slice,
                double t_max = 1e30) const;

  /// Brute-force nearest hit over every primitive; test oracle for the BVH.
  std::optional<SceneHit> intersect_brute_force(const Vec3& origin,
                                                const Vec3& dir,
                                                const TimeSlice& slice) const;

  const SceneRecipe& recipe() const { return recipe_; }
  const EnvironmentLight& environment() const { return env_; }
  const std::vector<MaterialSpec>& materials() const { return materials_; }
  const std::shared_ptr<const LensPrescription>& lens() const { return lens_; }
  const WavelengthGrid& grid() const { return grid_; }
  std::size_t primitive_count() const { return prims_.size(); }

  /// Test scenes are assembled directly; build() uses this too.
  void add_object(const AssetDescription& asset, const RigidTransform& t0,
                  const RigidTransform& t1, int instance_id);
  void set_environment(EnvironmentLight env) { env_ = std::move(env); }
  void set_recipe(SceneRecipe r) { recipe_ = std::move(r); }
  void set_grid(const WavelengthGrid& g) { grid_ = g; }
  void set_lens(std::shared_ptr<const LensPrescription> lens) {
    lens_ = std::move(lens);
  }
  void finalize();  // builds the BVH; call after the last add_object

 private:
  double test_prim(int prim, const Vec3& origin, const Vec3& dir,
                   const TimeSlice& slice, Vec3* normal_out) const;

  SceneRecipe recipe_;
  WavelengthGrid grid_;
  EnvironmentLight env_ = EnvironmentLight::uniform(Spectrum());
  std::vector<Object> objects_;
  std::vector<Prim> prims_;
  std::vector<MaterialSpec> materials_;
  std::vector<Aabb> prim_bounds_;
  Bvh bvh_;
  std::shared_ptr<const LensPrescription> lens_;
};

}  // namespace camsim
