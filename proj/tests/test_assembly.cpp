#include <doctest.h>

#include <set>

#include "camsim/assembly.hpp"
#include "camsim/recipe.hpp"

using namespace camsim;

namespace {

RoadNetwork straight_road(double length = 200.0) {
  RoadNetwork road;
  LaneSegment lane;
  lane.start = Vec3(0, 0, 0);
  lane.end = Vec3(length, 0, 0);
  lane.width_m = 3.5;
  road.lanes.push_back(lane);
  SideBand walk;
  walk.lane = 0;
  walk.side = 1;
  walk.offset_m = 0.5;
  walk.width_m = 2.0;
  road.sidewalks.push_back(walk);
  SideBand strip;
  strip.lane = 0;
  strip.side = 1;
  strip.offset_m = 3.0;
  strip.width_m = 2.0;
  road.building_bands.push_back(strip);
  road.camera_mount = CameraMount{0, 5.0, 1.5};
  return road;
}

TrafficConfig quiet_config() {
  TrafficConfig cfg = TrafficConfig::defaults();
  cfg.vehicle_density_per_m = 0;
  cfg.pedestrian_density_per_m = 0;
  cfg.buildings_per_100m = 0;
  cfg.trees_per_100m = 0;
  cfg.seed = 7;
  return cfg;
}

double along_lane(const PlacedObject& obj) {
  return obj.transform_start.translation.x();
}

}  // namespace

TEST_CASE("zero densities place nothing") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  const TrafficConfig cfg = quiet_config();
  CHECK(place_traffic(road, cfg, store, 0.0, 0.01).objects.empty());
  CHECK(place_static(road, cfg, store).objects.empty());
}

TEST_CASE("same seed reproduces identical placements") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.05;
  cfg.pedestrian_density_per_m = 0.02;
  cfg.buildings_per_100m = 2;
  cfg.trees_per_100m = 3;
  auto run = [&]() {
    PlacementResult t = place_traffic(road, cfg, store, 0.0, 0.01);
    PlacementResult s = place_static(road, cfg, store);
    t.objects.insert(t.objects.end(), s.objects.begin(), s.objects.end());
    return t.objects;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  CHECK(a.size() > 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].asset_id == b[i].asset_id);
    CHECK(a[i].speed_mps == b[i].speed_mps);
    CHECK(a[i].transform_start.translation == b[i].transform_start.translation);
    CHECK(a[i].transform_start.rotation.coeffs() ==
          b[i].transform_start.rotation.coeffs());
    CHECK(a[i].transform_end.translation == b[i].transform_end.translation);
  }
}

TEST_CASE("different seeds change the placement") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.05;
  cfg.seed = 1;
  const auto a = place_traffic(road, cfg, store, 0.0, 0.01).objects;
  cfg.seed = 2;
  const auto b = place_traffic(road, cfg, store, 0.0, 0.01).objects;
  bool differs = a.size() != b.size();
  for (std::size_t i = 0; !differs && i < a.size(); ++i)
    differs = !a[i].transform_start.approx_equal(b[i].transform_start, 1e-12);
  CHECK(differs);
}

TEST_CASE("placement density matches the configured mean over many seeds") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road(200.0);
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.05;  // expect ~10 vehicles on 200 m
  cfg.min_gap_m = 0.5;               // << mean gap of 20 m
  double total = 0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) {
    cfg.seed = std::uint64_t(s);
    total += double(place_traffic(road, cfg, store, 0.0, 0.01).objects.size());
  }
  const double mean = total / seeds;
  CHECK(std::abs(mean - 10.0) / 10.0 < 0.10);
}

TEST_CASE("min gap holds at shutter open across a seed sweep") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.08;
  cfg.min_gap_m = 3.0;
  for (int s = 0; s < 100; ++s) {
    cfg.seed = std::uint64_t(s);
    const auto objects = place_traffic(road, cfg, store, 0.0, 0.01).objects;
    std::vector<double> positions;
    for (const auto& obj : objects)
      if (obj.class_label != ClassLabel::pedestrian)
        positions.push_back(along_lane(obj));
    for (std::size_t i = 1; i < positions.size(); ++i)
      CHECK(positions[i] - positions[i - 1] >= cfg.min_gap_m);
  }
}

TEST_CASE("mobile displacement equals speed times shutter duration") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.05;
  cfg.pedestrian_density_per_m = 0.02;
  const double open = 0.002, close = 0.035;
  const auto objects = place_traffic(road, cfg, store, open, close).objects;
  CHECK(objects.size() > 0);
  for (const auto& obj : objects) {
    const double moved =
        (obj.transform_end.translation - obj.transform_start.translation)
            .norm();
    CHECK(std::abs(moved - obj.speed_mps * (close - open)) < 1e-9);
  }
}

TEST_CASE("traffic with no assets of a requested class fails loudly") {
  const AssetStore store("data/lenses");  // directory without .asset files
  const RoadNetwork road = straight_road();
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.05;
  CHECK_THROWS_AS(place_traffic(road, cfg, store, 0.0, 0.01), ValidationError);
}

TEST_CASE("static overlap resolves by skipping and logging") {
  const AssetStore store("data/assets");
  // Band shorter than two building footprints (>= 10 m each): two slots
  // 4 m apart with +/-1.2 m jitter can never separate far enough, so
  // exactly one survives.
  RoadNetwork road = straight_road(9.0);
  road.building_bands[0].width_m = 2.0;
  TrafficConfig cfg = quiet_config();
  cfg.buildings_per_100m = 25.0;  // interval 4 m -> 2 slots on 9 m
  cfg.seed = 3;
  PlacementResult result = place_static(road, cfg, store);
  int buildings = 0;
  for (const auto& obj : result.objects)
    if (obj.class_label == ClassLabel::building) ++buildings;
  CHECK(buildings == 1);
  CHECK(result.skipped.size() == 1);
  CHECK(result.log_text().find("no collision-free position") !=
        std::string::npos);
}

TEST_CASE("static placements never overlap, across a seed sweep") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  TrafficConfig cfg = quiet_config();
  cfg.buildings_per_100m = 3;
  cfg.trees_per_100m = 6;
  for (int s = 0; s < 50; ++s) {
    cfg.seed = std::uint64_t(s);
    const auto objects = place_static(road, cfg, store).objects;
    struct Rect {
      double x0, y0, x1, y1;
    };
    std::vector<Rect> rects;
    for (const auto& obj : objects) {
      const Aabb& b = store.load(obj.asset_id).bounding_box;
      Rect r{1e30, 1e30, -1e30, -1e30};
      for (int cx = 0; cx < 2; ++cx)
        for (int cy = 0; cy < 2; ++cy) {
          const Vec3 corner(cx ? b.hi.x() : b.lo.x(), cy ? b.hi.y() : b.lo.y(),
                            b.lo.z());
          const Vec3 w = obj.transform_start.apply_point(corner);
          r.x0 = std::min(r.x0, w.x());
          r.y0 = std::min(r.y0, w.y());
          r.x1 = std::max(r.x1, w.x());
          r.y1 = std::max(r.y1, w.y());
        }
      rects.push_back(r);
    }
    for (std::size_t i = 0; i < rects.size(); ++i)
      for (std::size_t j = i + 1; j < rects.size(); ++j) {
        const bool overlap =
            rects[i].x0 < rects[j].x1 && rects[j].x0 < rects[i].x1 &&
            rects[i].y0 < rects[j].y1 && rects[j].y0 < rects[i].y1;
        CHECK_FALSE(overlap);
      }
    for (const auto& obj : objects) {
      CHECK(obj.speed_mps == 0.0);
      CHECK(obj.transform_start.translation == obj.transform_end.translation);
      CHECK(obj.transform_start.rotation.coeffs() ==
            obj.transform_end.rotation.coeffs());
    }
  }
}

TEST_CASE("assemble_recipe: empty densities yield camera and lighting only") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  const TrafficConfig cfg = quiet_config();
  CameraConfig cam;
  cam.exposure_s = 0.01;
  LightingConfig light;
  const AssemblyResult result =
      assemble_recipe(road, cfg, store, cam, light, 0.0, 0.01);
  CHECK(result.recipe.objects.empty());
  CHECK(result.recipe.seed == cfg.seed);
  CHECK(result.recipe.camera.position.isApprox(Vec3(5.0, 0.0, 1.5), 1e-12));
  CHECK((result.recipe.camera.look_at - result.recipe.camera.position)
            .normalized()
            .isApprox(Vec3(1, 0, 0), 1e-12));
}

TEST_CASE("assemble_recipe assigns instance ids in placement order") {
  const AssetStore store("data/assets");
  const RoadNetwork road = straight_road();
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.04;
  cfg.buildings_per_100m = 1.5;
  CameraConfig cam;
  LightingConfig light;
  const AssemblyResult result =
      assemble_recipe(road, cfg, store, cam, light, 0.0, 0.01);
  REQUIRE(result.recipe.objects.size() > 2);
  for (std::size_t i = 0; i < result.recipe.objects.size(); ++i)
    CHECK(result.recipe.objects[i].instance_id == int(i) + 1);
}

TEST_CASE("assemble_recipe is byte-stable for a fixed seed") {
  const AssetStore store("data/assets");
  RoadNetwork road = straight_road();
  road.fixed_assets.emplace_back("ground_asphalt", RigidTransform{});
  TrafficConfig cfg = quiet_config();
  cfg.vehicle_density_per_m = 0.05;
  cfg.pedestrian_density_per_m = 0.02;
  cfg.buildings_per_100m = 2;
  cfg.trees_per_100m = 4;
  cfg.seed = 42;
  CameraConfig cam;
  LightingConfig light;
  const std::string once = serialize_recipe(
      assemble_recipe(road, cfg, store, cam, light, 0.0, 0.01).recipe);
  const std::string twice = serialize_recipe(
      assemble_recipe(road, cfg, store, cam, light, 0.0, 0.01).recipe);
  CHECK(once == twice);
  CHECK(once.find("ground_asphalt") != std::string::npos);
}

TEST_CASE("road and traffic configs parse from JSON") {
  const RoadNetwork road = parse_road_network(R"({
    "lanes": [{"start": [0,0,0], "end": [150,0,0], "width_m": 3.25}],
    "sidewalks": [{"lane": 0, "side": 1, "offset_m": 0.5, "width_m": 2.0}],
    "building_bands": [{"lane": 0, "side": -1, "offset_m": 4.0, "width_m": 10.0}],
    "camera_mount": {"lane": 0, "along_m": 2.0, "height_m": 1.4},
    "fixed_assets": [{"asset_id": "ground_asphalt", "yaw_deg": 0.0}]
  })");
  CHECK(road.lanes.size() == 1);
  CHECK(road.lanes[0].length_m() == doctest::Approx(150.0));
  CHECK(road.fixed_assets.size() == 1);

  const TrafficConfig cfg = parse_traffic_config(R"({
    "vehicle_density_per_m": 0.07,
    "class_mix": {"car": 0.8, "cyclist": 0.2},
    "speed_mps": {"car": [8, 14]},
    "seed": 9
  })");
  CHECK(cfg.vehicle_density_per_m == doctest::Approx(0.07));
  CHECK(cfg.class_mix.at(ClassLabel::cyclist) == doctest::Approx(0.2));
  CHECK(cfg.seed == 9);

  CHECK_THROWS_AS(parse_road_network(R"({"lanes": []})"), ValidationError);
  CHECK_THROWS_AS(parse_traffic_config(R"({"min_gap_m": -1})"),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_road_network(
          R"({"lanes":[{"start":[0,0,0],"end":[10,0,0],"width_m":3.5}],
              "sidewalks":[{"lane":0,"side":1,"offset_m":-2,"width_m":1}]})"),
      ValidationError);
}
