#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "camsim/geometry.hpp"
#include "camsim/spectral.hpp"

namespace camsim {

enum class ClassLabel {
  car,
  pedestrian,
  cyclist,
  building,
  tree,
  sign,
  traffic_light,
  other,
};

ClassLabel class_label_from_string(const std::string& s);
const char* to_string(ClassLabel c);
/// Stable numeric ids for metadata planes (car=1 ... other=8; 0 = none).
int class_label_id(ClassLabel c);
ClassLabel class_label_from_id(int id);

enum class MaterialKind { diffuse, retroreflective, emissive };

struct MaterialSpec {
  MaterialKind kind = MaterialKind::diffuse;
  /// Reflectance for diffuse/retroreflective ([0,1] per band),
  /// radiance (W·m⁻²·sr⁻¹·nm⁻¹) for emissive.
  Spectrum spectrum;
  double retro_fraction = 0.0;   // p in [0,1], retroreflective only
  double sigma_retro_rad = 0.0;  // lobe width, retroreflective only

  void validate(const std::string& name) const;
};

struct AssetDescription {
  std::string asset_id;
  ClassLabel class_label = ClassLabel::other;
  /// Meshes in asset space (transforms from the description file are baked
  /// into the vertices at parse time), each bound to a named material.
  std::vector<std::pair<TriangleMesh, std::string>> meshes;
  std::map<std::string, MaterialSpec> materials;
  Aabb bounding_box;  // meters, asset space
  Vec3 up_axis = Vec3::UnitZ();
  Vec3 forward_axis = Vec3::UnitX();

  void validate() const;
};

/// On-disk asset database: a directory of <asset_id>.asset files in the
/// documented grammar. Listing order is lexicographic by asset_id, which is
/// what makes seeded sampling reproducible.
class AssetStore {
 public:
  explicit AssetStore(std::string root_dir);

  const std::string& root() const { return root_; }
  const std::vector<std::string>& asset_ids() const { return ids_; }
  std::vector<std::string> ids_of_class(ClassLabel c) const;
  bool contains(const std::string& asset_id) const;

  /// Parse on first use, then serve from cache.
  const AssetDescription& load(const std::string& asset_id) const;

 private:
  std::string root_;
  std::vector<std::string> ids_;
  mutable std::map<std::string, std::shared_ptr<const AssetDescription>> cache_;
};

}  // namespace camsim
