#include "camsim/asset.hpp"

#include <algorithm>
#include <filesystem>

#include "camsim/asset_parser.hpp"

namespace camsim {

namespace {
constexpr const char* kClassNames[] = {"car",  "pedestrian", "cyclist",
                                       "building", "tree", "sign",
                                       "traffic_light", "other"};
}

ClassLabel class_label_from_string(const std::string& s) {
  for (int i = 0; i < 8; ++i)
    if (s == kClassNames[i]) return ClassLabel(i);
  throw ValidationError("unknown class label '" + s + "'");
}

const char* to_string(ClassLabel c) { return kClassNames[int(c)]; }

int class_label_id(ClassLabel c) { return int(c) + 1; }

ClassLabel class_label_from_id(int id) {
  if (id < 1 || id > 8)
    throw ValidationError("class id out of range: " + std::to_string(id));
  return ClassLabel(id - 1);
}

void MaterialSpec::validate(const std::string& name) const {
  if (kind != MaterialKind::emissive) {
    if ((spectrum.values < 0.0).any() || (spectrum.values > 1.0).any())
      throw ValidationError("material '" + name +
                            "': reflectance must lie in [0,1] per band");
  } else {
    if ((spectrum.values < 0.0).any())
      throw ValidationError("material '" + name +
                            "': emission must be non-negative");
  }
  if (kind == MaterialKind::retroreflective) {
    if (retro_fraction < 0.0 || retro_fraction > 1.0)
      throw ValidationError("material '" + name +
                            "': retro_fraction must lie in [0,1]");
    if (sigma_retro_rad <= 0.0)
      throw ValidationError("material '" + name +
                            "': sigma_retro must be positive");
  }
}

void AssetDescription::validate() const {
  if (asset_id.empty()) throw ValidationError("asset_id must not be empty");
  for (const auto& [mesh, material] : meshes) {
    mesh.validate();
    if (!materials.count(material))
      throw ValidationError("asset '" + asset_id +
                            "': mesh references undefined material '" +
                            material + "'");
  }
  for (const auto& [name, mat] : materials) mat.validate(name);
  for (const auto& [mesh, material] : meshes)
    for (const auto& v : mesh.vertices)
      if (!bounding_box.contains(v))
        throw ValidationError("asset '" + asset_id +
                              "': bounding box does not contain all vertices");
}

AssetStore::AssetStore(std::string root_dir) : root_(std::move(root_dir)) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root_))
    throw IoError("asset store is not a directory: " + root_);
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_regular_file() && entry.path().extension() == ".asset")
      ids_.push_back(entry.path().stem().string());
  }
  std::sort(ids_.begin(), ids_.end());
}

std::vector<std::string> AssetStore::ids_of_class(ClassLabel c) const {
  std::vector<std::string> out;
  for (const auto& id : ids_)
    if (load(id).class_label == c) out.push_back(id);
  return out;
}

bool AssetStore::contains(const std::string& asset_id) const {
  return std::binary_search(ids_.begin(), ids_.end(), asset_id);
}

const AssetDescription& AssetStore::load(const std::string& asset_id) const {
  auto it = cache_.find(asset_id);
  if (it != cache_.end()) return *it->second;
  if (!contains(asset_id))
    throw ValidationError("asset '" + asset_id + "' not found in store " +
                          root_);
  auto asset = std::make_shared<AssetDescription>(
      load_asset(root_ + "/" + asset_id + ".asset"));
  if (asset->asset_id != asset_id)
    throw ValidationError("asset file " + asset_id +
                          ".asset declares mismatching id '" +
                          asset->asset_id + "'");
  auto [pos, inserted] = cache_.emplace(asset_id, std::move(asset));
  return *pos->second;
}

}  // namespace camsim
