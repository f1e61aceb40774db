#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "camsim/asset.hpp"
#include "camsim/recipe.hpp"

namespace camsim {

/// Straight lane segment. Lanes run along their start->end axis; heading
/// is start->end for direction_sign = +1 and reversed for -1.
struct LaneSegment {
  Vec3 start = Vec3::Zero();  // meters, z = ground
  Vec3 end = Vec3::UnitX();
  double width_m = 3.5;
  int direction_sign = 1;

  double length_m() const { return (end - start).norm(); }
  Vec3 axis() const { return (end - start).normalized(); }
  Vec3 heading() const { return double(direction_sign) * axis(); }
};

/// Side band parallel to a lane (sidewalks, building strips).
/// offset is measured outward from the lane edge; side = +1 places the
/// band to the left of the lane axis, -1 to the right.
struct SideBand {
  int lane = 0;
  int side = 1;
  double offset_m = 0.5;
  double width_m = 2.0;
};

struct CameraMount {
  int lane = 0;
  double along_m = 0.0;
  double height_m = 1.5;
};

struct RoadNetwork {
  std::vector<LaneSegment> lanes;
  std::vector<SideBand> sidewalks;
  std::vector<SideBand> building_bands;
  CameraMount camera_mount;
  /// Scenery placed verbatim in every recipe (ground plane, the road
  /// surface asset, ...): pairs of asset id and transform.
  std::vector<std::pair<std::string, RigidTransform>> fixed_assets;

  void validate() const;
  /// Outward normal of a band's side for a lane (unit, ground plane).
  Vec3 lane_side_normal(int lane, int side) const;
  /// World position at distance s along a lane, lateral offset d toward
  /// `side` from the lane center.
  Vec3 lane_point(int lane, double s, double lateral, int side) const;
};

struct SpeedRange {
  double min_mps = 0.0;
  double max_mps = 0.0;
};

struct TrafficConfig {
  double vehicle_density_per_m = 0.0;     // per meter per lane
  double pedestrian_density_per_m = 0.0;  // per meter of sidewalk
  double min_gap_m = 2.0;
  std::map<ClassLabel, double> class_mix;      // weights over vehicle classes
  std::map<ClassLabel, SpeedRange> speed_mps;  // per-class speed ranges
  double buildings_per_100m = 0.0;
  double trees_per_100m = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  static TrafficConfig defaults();
};

RoadNetwork parse_road_network(const std::string& json_text);
RoadNetwork load_road_network(const std::string& path);
TrafficConfig parse_traffic_config(const std::string& json_text);

struct PlacementLogEntry {
  std::string asset_id;
  std::string reason;
};

struct PlacementResult {
  std::vector<PlacedObject> objects;
  std::vector<PlacementLogEntry> skipped;

  std::string log_text() const;
};

/// Mobile objects: per lane, longitudinal gaps are exponential with mean
/// 1/density (gaps below min_gap are redrawn); speeds uniform per class;
/// heading along the lane. Pedestrians walk sidewalk bands the same way.
/// Deterministic in (cfg.seed, road, store listing order). The shutter
/// interval fixes transform_end = transform_start advanced by
/// speed * (close - open) along the heading.
PlacementResult place_traffic(const RoadNetwork& road,
                              const TrafficConfig& cfg,
                              const AssetStore& store, double shutter_open_s,
                              double shutter_close_s);

/// Static objects: buildings at jittered regular intervals in the building
/// bands, trees on the sidewalk bands; footprint-rectangle rejection with
/// a 100-attempt cap per object (skips are logged). All speeds zero.
PlacementResult place_static(const RoadNetwork& road, const TrafficConfig& cfg,
                             const AssetStore& store);

struct AssemblyResult {
  SceneRecipe recipe;
  std::vector<PlacementLogEntry> skipped;
  std::string log_text() const;
};

/// Traffic + static placements concatenated, instance ids assigned 1..N in
/// placement order, camera at the ego mount looking along its lane.
AssemblyResult assemble_recipe(const RoadNetwork& road,
                               const TrafficConfig& cfg,
                               const AssetStore& store,
                               const CameraConfig& camera_template,
                               const LightingConfig& lighting,
                               double shutter_open_s, double shutter_close_s);

}  // namespace camsim
