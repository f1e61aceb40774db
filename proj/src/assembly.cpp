#include "camsim/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "camsim/rng.hpp"

namespace camsim {

using Json = nlohmann::ordered_json;

namespace {

const std::uint64_t kTrafficTag = hash_str("traffic");
const std::uint64_t kPedestrianTag = hash_str("pedestrians");
const std::uint64_t kBuildingTag = hash_str("buildings");
const std::uint64_t kTreeTag = hash_str("trees");

RigidTransform heading_transform(const Vec3& position, const Vec3& heading) {
  RigidTransform t;
  t.translation = position;
  const double yaw = std::atan2(heading.y(), heading.x());
  t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  return t;
}

RigidTransform advance(const RigidTransform& t0, const Vec3& heading,
                       double distance) {
  RigidTransform t1 = t0;
  t1.translation += distance * heading;
  return t1;
}

struct Footprint {
  double x0, y0, x1, y1;

  bool overlaps(const Footprint& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
};

Footprint footprint_of(const AssetDescription& asset,
                       const RigidTransform& t) {
  // World-axis-aligned bounds of the rotated bounding-box footprint;
  // conservative for yawed assets.
  const Aabb& b = asset.bounding_box;
  Footprint f{1e30, 1e30, -1e30, -1e30};
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy) {
      const Vec3 corner(cx ? b.hi.x() : b.lo.x(), cy ? b.hi.y() : b.lo.y(),
                        b.lo.z());
      const Vec3 w = t.apply_point(corner);
      f.x0 = std::min(f.x0, w.x());
      f.y0 = std::min(f.y0, w.y());
      f.x1 = std::max(f.x1, w.x());
      f.y1 = std::max(f.y1, w.y());
    }
  return f;
}

std::string pick_asset(const std::vector<std::string>& ids, Rng& rng) {
  return ids[std::size_t(rng.uniform_index(ids.size()))];
}

ClassLabel pick_class(const std::map<ClassLabel, double>& mix, Rng& rng) {
  double total = 0.0;
  for (const auto& [cls, w] : mix) total += w;
  double u = rng.uniform() * total;
  for (const auto& [cls, w] : mix) {
    u -= w;
    if (u <= 0.0) return cls;
  }
  return mix.rbegin()->first;
}

}  // namespace

void RoadNetwork::validate() const {
  if (lanes.empty()) throw ValidationError("road network needs >= 1 lane");
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const auto& lane = lanes[i];
    if (lane.width_m <= 0)
      throw ValidationError("lane " + std::to_string(i) +
                            ": width must be positive");
    if (lane.length_m() <= 0)
      throw ValidationError("lane " + std::to_string(i) + ": zero length");
    if (lane.direction_sign != 1 && lane.direction_sign != -1)
      throw ValidationError("lane " + std::to_string(i) +
                            ": direction_sign must be +1 or -1");
  }
  auto check_band = [&](const SideBand& b, const char* what) {
    if (b.lane < 0 || b.lane >= int(lanes.size()))
      throw ValidationError(std::string(what) + ": lane index out of range");
    if (b.side != 1 && b.side != -1)
      throw ValidationError(std::string(what) + ": side must be +1 or -1");
    if (b.offset_m < 0)
      throw ValidationError(std::string(what) +
                            ": band overlaps the roadway (offset < 0)");
    if (b.width_m <= 0)
      throw ValidationError(std::string(what) + ": width must be positive");
  };
  for (const auto& b : sidewalks) check_band(b, "sidewalk");
  for (const auto& b : building_bands) check_band(b, "building band");
  if (camera_mount.lane < 0 || camera_mount.lane >= int(lanes.size()))
    throw ValidationError("camera mount lane out of range");
}

Vec3 RoadNetwork::lane_side_normal(int lane, int side) const {
  const Vec3 axis = lanes[lane].axis();
  const Vec3 left = Vec3::UnitZ().cross(axis).normalized();
  return double(side) * left;
}

Vec3 RoadNetwork::lane_point(int lane, double s, double lateral,
                             int side) const {
  const LaneSegment& seg = lanes[lane];
  return seg.start + s * seg.axis() +
         (seg.width_m / 2 + lateral) * lane_side_normal(lane, side);
}

void TrafficConfig::validate() const {
  if (vehicle_density_per_m < 0 || pedestrian_density_per_m < 0 ||
      buildings_per_100m < 0 || trees_per_100m < 0)
    throw ValidationError("densities must be >= 0");
  if (min_gap_m <= 0) throw ValidationError("min_gap must be positive");
  for (const auto& [cls, range] : speed_mps)
    if (range.min_mps < 0 || range.max_mps < range.min_mps)
      throw ValidationError(std::string("speed range for ") + to_string(cls) +
                            " must be ordered and non-negative");
  for (const auto& [cls, w] : class_mix)
    if (w < 0) throw ValidationError("class mix weights must be >= 0");
}

TrafficConfig TrafficConfig::defaults() {
  TrafficConfig cfg;
  cfg.vehicle_density_per_m = 0.03;
  cfg.pedestrian_density_per_m = 0.01;
  cfg.min_gap_m = 2.0;
  cfg.class_mix = {{ClassLabel::car, 1.0}};
  cfg.speed_mps = {{ClassLabel::car, {8.0, 14.0}},
                   {ClassLabel::cyclist, {3.0, 6.0}},
                   {ClassLabel::pedestrian, {0.8, 1.8}}};
  cfg.buildings_per_100m = 2.0;
  cfg.trees_per_100m = 4.0;
  return cfg;
}

namespace {

SideBand band_from_json(const Json& j, const char* what) {
  SideBand b;
  b.lane = j.value("lane", 0);
  b.side = j.at("side").get<int>();
  b.offset_m = j.at("offset_m").get<double>();
  b.width_m = j.at("width_m").get<double>();
  (void)what;
  return b;
}

Vec3 vec3_at(const Json& j) {
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

RoadNetwork parse_road_network(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid road JSON: ") + e.what(), 0);
  }
  RoadNetwork road;
  for (const auto& lj : j.at("lanes")) {
    LaneSegment lane;
    lane.start = vec3_at(lj.at("start"));
    lane.end = vec3_at(lj.at("end"));
    lane.width_m = lj.at("width_m").get<double>();
    lane.direction_sign = lj.value("direction_sign", 1);
    road.lanes.push_back(lane);
  }
  if (j.contains("sidewalks"))
    for (const auto& bj : j["sidewalks"])
      road.sidewalks.push_back(band_from_json(bj, "sidewalk"));
  if (j.contains("building_bands"))
    for (const auto& bj : j["building_bands"])
      road.building_bands.push_back(band_from_json(bj, "building band"));
  if (j.contains("camera_mount")) {
    const Json& m = j["camera_mount"];
    road.camera_mount.lane = m.value("lane", 0);
    road.camera_mount.along_m = m.value("along_m", 0.0);
    road.camera_mount.height_m = m.value("height_m", 1.5);
  }
  if (j.contains("fixed_assets")) {
    for (const auto& fj : j["fixed_assets"]) {
      RigidTransform t;
      if (fj.contains("translation")) t.translation = vec3_at(fj["translation"]);
      if (fj.contains("yaw_deg"))
        t.rotation = RigidTransform::yaw_deg(fj["yaw_deg"].get<double>()).rotation;
      if (fj.contains("scale")) t.scale = fj["scale"].get<double>();
      road.fixed_assets.emplace_back(fj.at("asset_id").get<std::string>(), t);
    }
  }
  road.validate();
  return road;
}

RoadNetwork load_road_network(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open road network: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_road_network(buf.str());
}

TrafficConfig parse_traffic_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid traffic JSON: ") + e.what(), 0);
  }
  TrafficConfig cfg = TrafficConfig::defaults();
  if (j.contains("vehicle_density_per_m"))
    cfg.vehicle_density_per_m = j["vehicle_density_per_m"].get<double>();
  if (j.contains("pedestrian_density_per_m"))
    cfg.pedestrian_density_per_m = j["pedestrian_density_per_m"].get<double>();
  if (j.contains("min_gap_m")) cfg.min_gap_m = j["min_gap_m"].get<double>();
  if (j.contains("class_mix")) {
    cfg.class_mix.clear();
    for (auto& [name, w] : j["class_mix"].items())
      cfg.class_mix[class_label_from_string(name)] = w.get<double>();
  }
  if (j.contains("speed_mps")) {
    for (auto& [name, range] : j["speed_mps"].items())
      cfg.speed_mps[class_label_from_string(name)] =
          SpeedRange{range[0].get<double>(), range[1].get<double>()};
  }
  if (j.contains("buildings_per_100m"))
    cfg.buildings_per_100m = j["buildings_per_100m"].get<double>();
  if (j.contains("trees_per_100m"))
    cfg.trees_per_100m = j["trees_per_100m"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

std::string PlacementResult::log_text() const {
  std::ostringstream out;
  for (const auto& e : skipped)
    out << "skipped " << e.asset_id << ": " << e.reason << "\n";
  return out.str();
}

std::string AssemblyResult::log_text() const {
  std::ostringstream out;
  for (const auto& e : skipped)
    out << "skipped " << e.asset_id << ": " << e.reason << "\n";
  return out.str();
}

PlacementResult place_traffic(const RoadNetwork& road,
                              const TrafficConfig& cfg,
                              const AssetStore& store, double shutter_open_s,
                              double shutter_close_s) {
  road.validate();
  cfg.validate();
  const double dt = shutter_close_s - shutter_open_s;
  PlacementResult out;

  auto speed_range = [&](ClassLabel cls) {
    auto it = cfg.speed_mps.find(cls);
    return it != cfg.speed_mps.end() ? it->second : SpeedRange{0.0, 0.0};
  };
  auto assets_for = [&](ClassLabel cls) {
    const auto ids = store.ids_of_class(cls);
    if (ids.empty())
      throw ValidationError(std::string("asset store has no assets of class ") +
                            to_string(cls) + " but its density is nonzero");
    return ids;
  };

  if (cfg.vehicle_density_per_m > 0) {
    const double mean_gap = 1.0 / cfg.vehicle_density_per_m;
    for (std::size_t lane = 0; lane < road.lanes.size(); ++lane) {
      Rng rng = make_stream(cfg.seed, kTrafficTag, lane);
      const LaneSegment& seg = road.lanes[lane];
      double s = 0.0;
      for (;;) {
        double gap = rng.exponential_mean(mean_gap);
        while (gap < cfg.min_gap_m) gap = rng.exponential_mean(mean_gap);
        s += gap;
        if (s >= seg.length_m()) break;
        const ClassLabel cls = cfg.class_mix.empty()
                                   ? ClassLabel::car
                                   : pick_class(cfg.class_mix, rng);
        const auto ids = assets_for(cls);
        PlacedObject obj;
        obj.asset_id = pick_asset(ids, rng);
        obj.class_label = cls;
        const SpeedRange range = speed_range(cls);
        obj.speed_mps = rng.uniform(range.min_mps, range.max_mps);
        const Vec3 heading = seg.heading();
        const Vec3 pos = seg.start + s * seg.axis();
        obj.transform_start = heading_transform(pos, heading);
        obj.transform_end =
            advance(obj.transform_start, heading, obj.speed_mps * dt);
        out.objects.push_back(std::move(obj));
      }
    }
  }

  if (cfg.pedestrian_density_per_m > 0) {
    const double mean_gap = 1.0 / cfg.pedestrian_density_per_m;
    const auto ids = assets_for(ClassLabel::pedestrian);
    for (std::size_t band_index = 0; band_index < road.sidewalks.size();
         ++band_index) {
      Rng rng = make_stream(cfg.seed, kPedestrianTag, band_index);
      const SideBand& band = road.sidewalks[band_index];
      const LaneSegment& seg = road.lanes[band.lane];
      double s = 0.0;
      for (;;) {
        double gap = rng.exponential_mean(mean_gap);
        while (gap < cfg.min_gap_m) gap = rng.exponential_mean(mean_gap);
        s += gap;
        if (s >= seg.length_m()) break;
        PlacedObject obj;
        obj.asset_id = pick_asset(ids, rng);
        obj.class_label = ClassLabel::pedestrian;
        const SpeedRange range = speed_range(ClassLabel::pedestrian);
        obj.speed_mps = rng.uniform(range.min_mps, range.max_mps);
        const double lateral = rng.uniform(0.0, band.width_m);
        const Vec3 pos =
            road.lane_point(band.lane, s, band.offset_m + lateral, band.side);
        const Vec3 heading =
            (rng.uniform() < 0.5 ? 1.0 : -1.0) * seg.axis();
        obj.transform_start = heading_transform(pos, heading);
        obj.transform_end =
            advance(obj.transform_start, heading, obj.speed_mps * dt);
        out.objects.push_back(std::move(obj));
      }
    }
  }
  return out;
}

PlacementResult place_static(const RoadNetwork& road, const TrafficConfig& cfg,
                             const AssetStore& store) {
  road.validate();
  cfg.validate();
  PlacementResult out;
  std::vector<Footprint> taken;
  constexpr int kMaxAttempts = 100;

  auto place_in_bands = [&](const std::vector<SideBand>& bands,
                            double per_100m, ClassLabel cls,
                            std::uint64_t tag, bool face_road) {
    if (per_100m <= 0 || bands.empty()) return;
    const auto ids = store.ids_of_class(cls);
    if (ids.empty())
      throw ValidationError(std::string("asset store has no assets of class ") +
                            to_string(cls) + " but its density is nonzero");
    const double interval = 100.0 / per_100m;
    for (std::size_t band_index = 0; band_index < bands.size(); ++band_index) {
      Rng rng = make_stream(cfg.seed, tag, band_index);
      const SideBand& band = bands[band_index];
      const LaneSegment& seg = road.lanes[band.lane];
      const int slots = int(seg.length_m() / interval);
      for (int k = 0; k < slots; ++k) {
        const std::string asset_id = pick_asset(ids, rng);
        const AssetDescription& asset = store.load(asset_id);
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
          const double jitter = rng.uniform(-0.3, 0.3) * interval;
          const double s = (k + 0.5) * interval + jitter;
          if (s < 0 || s >= seg.length_m()) continue;
          const double lateral = rng.uniform(0.0, band.width_m);
          const Vec3 pos =
              road.lane_point(band.lane, s, band.offset_m + lateral, band.side);
          RigidTransform t;
          if (face_road) {
            const Vec3 facing = -road.lane_side_normal(band.lane, band.side);
            t = heading_transform(pos, facing);
          } else {
            t.translation = pos;
            t.rotation = RigidTransform::yaw_deg(rng.uniform(0.0, 360.0)).rotation;
          }
          const Footprint fp = footprint_of(asset, t);
          bool collides = false;
          for (const auto& other : taken)
            if (fp.overlaps(other)) {
              collides = true;
              break;
            }
          if (collides) continue;
          taken.push_back(fp);
          PlacedObject obj;
          obj.asset_id = asset_id;
          obj.class_label = cls;
          obj.speed_mps = 0.0;
          obj.transform_start = t;
          obj.transform_end = t;
          out.objects.push_back(std::move(obj));
          placed = true;
        }
        if (!placed)
          out.skipped.push_back(PlacementLogEntry{
              asset_id, "no collision-free position after " +
                            std::to_string(kMaxAttempts) + " attempts"});
      }
    }
  };

  place_in_bands(road.building_bands, cfg.buildings_per_100m,
                 ClassLabel::building, kBuildingTag, /*face_road=*/true);
  place_in_bands(road.sidewalks, cfg.trees_per_100m, ClassLabel::tree,
                 kTreeTag, /*face_road=*/false);
  return out;
}

AssemblyResult assemble_recipe(const RoadNetwork& road,
                               const TrafficConfig& cfg,
                               const AssetStore& store,
                               const CameraConfig& camera_template,
                               const LightingConfig& lighting,
                               double shutter_open_s, double shutter_close_s) {
  PlacementResult traffic =
      place_traffic(road, cfg, store, shutter_open_s, shutter_close_s);
  PlacementResult statics = place_static(road, cfg, store);

  AssemblyResult out;
  out.skipped = statics.skipped;
  SceneRecipe& recipe = out.recipe;
  recipe.seed = cfg.seed;
  recipe.asset_store_path = store.root();
  recipe.shutter_open_s = shutter_open_s;
  recipe.shutter_close_s = shutter_close_s;
  recipe.lighting = lighting;

  recipe.camera = camera_template;
  const LaneSegment& ego_lane = road.lanes[road.camera_mount.lane];
  const Vec3 mount = ego_lane.start +
                     road.camera_mount.along_m * ego_lane.axis() +
                     road.camera_mount.height_m * Vec3::UnitZ();
  recipe.camera.position = mount;
  recipe.camera.look_at = mount + ego_lane.heading();

  int next_instance = 1;
  auto append = [&](std::vector<PlacedObject>&& objs) {
    for (auto& obj : objs) {
      obj.instance_id = next_instance++;
      recipe.objects.push_back(std::move(obj));
    }
  };
  append(std::move(traffic.objects));
  append(std::move(statics.objects));
  for (const auto& [asset_id, t] : road.fixed_assets) {
    PlacedObject obj;
    obj.asset_id = asset_id;
    obj.class_label = store.load(asset_id).class_label;
    obj.instance_id = next_instance++;
    obj.transform_start = t;
    obj.transform_end = t;
    obj.speed_mps = 0.0;
    recipe.objects.push_back(std::move(obj));
  }
  recipe.validate(store);
  return out;
}

}  // namespace camsim
