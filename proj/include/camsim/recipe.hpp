#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camsim/asset.hpp"
#include "camsim/transform.hpp"

namespace camsim {

enum class CameraModel { pinhole, fisheye, lens };

struct CameraConfig {
  CameraModel model = CameraModel::pinhole;
  Vec3 position = Vec3::Zero();
  Vec3 look_at = Vec3::UnitX();
  Vec3 up = Vec3::UnitZ();
  double fov_deg = 90.0;        // pinhole/fisheye: horizontal field of view
  std::string lens_file;        // lens model only
  double film_width_mm = 4.51;  // lens model only
  double film_height_mm = 2.88; // lens model only
  double exposure_s = 0.01;
};

struct LightingConfig {
  /// "uniform": flat sky radiance of `level` W·m⁻²·sr⁻¹·nm⁻¹ in every band.
  /// "envmap": equirectangular spectral radiance map in a .spim container.
  std::string type = "uniform";
  double level = 0.01;
  std::string envmap_path;
  double scale = 1.0;
};

struct PlacedObject {
  std::string asset_id;
  ClassLabel class_label = ClassLabel::other;
  int instance_id = 0;  // unique within a recipe, > 0
  RigidTransform transform_start;
  RigidTransform transform_end;
  double speed_mps = 0.0;
};

/// Complete declarative description of one scene instance. Everything the
/// renderer needs is either here or reachable through asset_store_path.
struct SceneRecipe {
  std::string recipe_version = "1";
  std::uint64_t seed = 0;
  std::string asset_store_path;
  CameraConfig camera;
  LightingConfig lighting;
  double shutter_open_s = 0.0;
  double shutter_close_s = 0.01;
  std::vector<PlacedObject> objects;

  /// Structural checks that need no asset store: shutter order, positive
  /// exposure, unique instance ids, version.
  void validate_structure() const;

  /// Full validation including asset resolution against the store.
  void validate(const AssetStore& store) const;
};

SceneRecipe parse_recipe(const std::string& json_text);
SceneRecipe read_recipe(const std::string& path);
std::string serialize_recipe(const SceneRecipe& recipe);
void write_recipe(const SceneRecipe& recipe, const std::string& path);

}  // namespace camsim
