#include "camsim/recipe.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

namespace camsim {

using Json = nlohmann::ordered_json;

namespace {

Json vec3_to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const Json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3)
    throw ValidationError("field '" + field + "' must be a [x,y,z] array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Json transform_to_json(const RigidTransform& t) {
  Eigen::AngleAxisd aa(t.rotation);
  Vec3 axis = aa.axis();
  double angle_deg = aa.angle() * 180.0 / std::numbers::pi;
  if (std::abs(aa.angle()) < 1e-15) {
    axis = Vec3::UnitZ();
    angle_deg = 0.0;
  }
  Json j;
  j["translation"] = vec3_to_json(t.translation);
  j["rotation_axis"] = vec3_to_json(axis);
  j["rotation_angle_deg"] = angle_deg;
  j["scale"] = t.scale;
  return j;
}

RigidTransform transform_from_json(const Json& j, const std::string& path) {
  for (const char* k :
       {"translation", "rotation_axis", "rotation_angle_deg", "scale"})
    if (!j.contains(k))
      throw ValidationError("missing field '" + path + "." + k + "'");
  RigidTransform t;
  t.translation = vec3_from_json(j["translation"], path + ".translation");
  const Vec3 axis = vec3_from_json(j["rotation_axis"], path + ".rotation_axis");
  const double angle =
      j["rotation_angle_deg"].get<double>() * std::numbers::pi / 180.0;
  if (axis.norm() < 1e-12) {
    if (std::abs(angle) > 1e-12)
      throw ValidationError("field '" + path +
                            ".rotation_axis' must be nonzero");
    t.rotation = Eigen::Quaterniond::Identity();
  } else {
    t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
  }
  t.scale = j["scale"].get<double>();
  if (t.scale <= 0)
    throw ValidationError("field '" + path + ".scale' must be positive");
  return t;
}

const Json& require(const Json& j, const std::string& key,
                    const std::string& path) {
  if (!j.contains(key))
    throw ValidationError("missing field '" + path + key + "'");
  return j[key];
}

}  // namespace

void SceneRecipe::validate_structure() const {
  if (recipe_version != "1")
    throw ValidationError("unknown recipe_version '" + recipe_version +
                          "' (this reader understands version \"1\")");
  if (!(shutter_open_s < shutter_close_s))
    throw ValidationError("shutter.open_s must be < shutter.close_s");
  if (!(camera.exposure_s > 0))
    throw ValidationError("camera.exposure_s must be positive");
  if (camera.model == CameraModel::lens && camera.lens_file.empty())
    throw ValidationError("camera.model 'lens' requires camera.lens_file");
  if (lighting.type != "uniform" && lighting.type != "envmap")
    throw ValidationError("lighting.type must be 'uniform' or 'envmap'");
  if (lighting.type == "envmap" && lighting.envmap_path.empty())
    throw ValidationError("lighting.type 'envmap' requires lighting.envmap_path");
  if (lighting.level < 0 || lighting.scale < 0)
    throw ValidationError("lighting levels must be non-negative");
  std::set<int> ids;
  for (const auto& obj : objects) {
    if (obj.instance_id <= 0)
      throw ValidationError("object instance_id must be positive (asset '" +
                            obj.asset_id + "')");
    if (!ids.insert(obj.instance_id).second)
      throw ValidationError("duplicate instance_id " +
                            std::to_string(obj.instance_id));
  }
}

void SceneRecipe::validate(const AssetStore& store) const {
  validate_structure();
  for (const auto& obj : objects)
    if (!store.contains(obj.asset_id))
      throw ValidationError("recipe references absent asset '" +
                            obj.asset_id + "'");
}

SceneRecipe parse_recipe(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  SceneRecipe r;
  try {
  r.recipe_version = require(j, "recipe_version", "").get<std::string>();
  if (r.recipe_version != "1")
    throw ValidationError("unknown recipe_version '" + r.recipe_version +
                          "' (this reader understands version \"1\")");
  r.seed = require(j, "seed", "").get<std::uint64_t>();
  r.asset_store_path = require(j, "asset_store_path", "").get<std::string>();

  const Json& cam = require(j, "camera", "");
  const std::string model = require(cam, "model", "camera.").get<std::string>();
  if (model == "pinhole")
    r.camera.model = CameraModel::pinhole;
  else if (model == "fisheye")
    r.camera.model = CameraModel::fisheye;
  else if (model == "lens")
    r.camera.model = CameraModel::lens;
  else
    throw ValidationError("camera.model must be pinhole, fisheye or lens");
  r.camera.position = vec3_from_json(require(cam, "position", "camera."),
                                     "camera.position");
  r.camera.look_at =
      vec3_from_json(require(cam, "look_at", "camera."), "camera.look_at");
  if (cam.contains("up")) r.camera.up = vec3_from_json(cam["up"], "camera.up");
  if (cam.contains("fov_deg")) r.camera.fov_deg = cam["fov_deg"].get<double>();
  if (cam.contains("lens_file"))
    r.camera.lens_file = cam["lens_file"].get<std::string>();
  if (cam.contains("film_width_mm"))
    r.camera.film_width_mm = cam["film_width_mm"].get<double>();
  if (cam.contains("film_height_mm"))
    r.camera.film_height_mm = cam["film_height_mm"].get<double>();
  r.camera.exposure_s =
      require(cam, "exposure_s", "camera.").get<double>();

  const Json& sh = require(j, "shutter", "");
  r.shutter_open_s = require(sh, "open_s", "shutter.").get<double>();
  r.shutter_close_s = require(sh, "close_s", "shutter.").get<double>();

  const Json& light = require(j, "lighting", "");
  r.lighting.type = require(light, "type", "lighting.").get<std::string>();
  if (light.contains("level")) r.lighting.level = light["level"].get<double>();
  if (light.contains("envmap_path"))
    r.lighting.envmap_path = light["envmap_path"].get<std::string>();
  if (light.contains("scale")) r.lighting.scale = light["scale"].get<double>();

  const Json& objs = require(j, "objects", "");
  if (!objs.is_array())
    throw ValidationError("field 'objects' must be an array");
  int index = 0;
  for (const auto& o : objs) {
    const std::string path = "objects[" + std::to_string(index) + "].";
    PlacedObject obj;
    obj.asset_id = require(o, "asset_id", path).get<std::string>();
    obj.class_label =
        class_label_from_string(require(o, "class_label", path).get<std::string>());
    obj.instance_id = require(o, "instance_id", path).get<int>();
    obj.transform_start =
        transform_from_json(require(o, "transform_start", path),
                            path + "transform_start");
    obj.transform_end = transform_from_json(require(o, "transform_end", path),
                                            path + "transform_end");
    obj.speed_mps = require(o, "speed_mps", path).get<double>();
    r.objects.push_back(std::move(obj));
    ++index;
  }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("recipe: ") + e.what());
  }
  r.validate_structure();
  return r;
}

SceneRecipe read_recipe(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open recipe: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_recipe(buf.str());
}

std::string serialize_recipe(const SceneRecipe& r) {
  Json j;
  j["recipe_version"] = r.recipe_version;
  j["seed"] = r.seed;
  j["asset_store_path"] = r.asset_store_path;
  Json cam;
  switch (r.camera.model) {
    case CameraModel::pinhole: cam["model"] = "pinhole"; break;
    case CameraModel::fisheye: cam["model"] = "fisheye"; break;
    case CameraModel::lens: cam["model"] = "lens"; break;
  }
  cam["position"] = vec3_to_json(r.camera.position);
  cam["look_at"] = vec3_to_json(r.camera.look_at);
  cam["up"] = vec3_to_json(r.camera.up);
  cam["fov_deg"] = r.camera.fov_deg;
  if (!r.camera.lens_file.empty()) {
    cam["lens_file"] = r.camera.lens_file;
    cam["film_width_mm"] = r.camera.film_width_mm;
    cam["film_height_mm"] = r.camera.film_height_mm;
  }
  cam["exposure_s"] = r.camera.exposure_s;
  j["camera"] = std::move(cam);
  j["shutter"] = Json{{"open_s", r.shutter_open_s},
                      {"close_s", r.shutter_close_s}};
  Json light;
  light["type"] = r.lighting.type;
  if (r.lighting.type == "uniform") {
    light["level"] = r.lighting.level;
  } else {
    light["envmap_path"] = r.lighting.envmap_path;
    light["scale"] = r.lighting.scale;
  }
  j["lighting"] = std::move(light);
  Json objs = Json::array();
  for (const auto& o : r.objects) {
    Json oj;
    oj["asset_id"] = o.asset_id;
    oj["class_label"] = to_string(o.class_label);
    oj["instance_id"] = o.instance_id;
    oj["transform_start"] = transform_to_json(o.transform_start);
    oj["transform_end"] = transform_to_json(o.transform_end);
    oj["speed_mps"] = o.speed_mps;
    objs.push_back(std::move(oj));
  }
  j["objects"] = std::move(objs);
  return j.dump(2) + "\n";
}

void write_recipe(const SceneRecipe& recipe, const std::string& path) {
  recipe.validate_structure();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write recipe: " + path);
  f << serialize_recipe(recipe);
  if (!f) throw IoError("failed writing recipe: " + path);
}

}  // namespace camsim
