#include <doctest.h>

#include <numbers>

#include "camsim/camera.hpp"
#include "camsim/render.hpp"
#include "camsim/scene.hpp"
#include "camsim/transform.hpp"

using namespace camsim;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

AssetDescription quad_asset(const std::string& id, ClassLabel cls,
                            MaterialKind kind, double level, double width,
                            double height, const WavelengthGrid& grid) {
  // Quad in the y-z plane at x = 0, centered on the axis, normal along x.
  AssetDescription asset;
  asset.asset_id = id;
  asset.class_label = cls;
  MaterialSpec mat;
  mat.kind = kind;
  mat.spectrum = Spectrum::constant(grid, level);
  if (kind == MaterialKind::retroreflective) {
    mat.retro_fraction = 0.9;
    mat.sigma_retro_rad = 2.0 * kDeg;
  }
  asset.materials["m"] = mat;
  TriangleMesh mesh;
  const double w = width / 2, h = height / 2;
  mesh.vertices = {Vec3(0, -w, -h), Vec3(0, w, -h), Vec3(0, w, h),
                   Vec3(0, -w, h)};
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  asset.meshes.emplace_back(std::move(mesh), "m");
  for (const auto& [m, name] : asset.meshes)
    for (const auto& v : m.vertices) asset.bounding_box.expand(v);
  return asset;
}

SceneRecipe camera_recipe(double fov_deg = 90.0) {
  SceneRecipe r;
  r.camera.model = CameraModel::pinhole;
  r.camera.position = Vec3(0, 0, 0);
  r.camera.look_at = Vec3(1, 0, 0);
  r.camera.up = Vec3(0, 0, 1);
  r.camera.fov_deg = fov_deg;
  r.camera.exposure_s = 0.01;
  r.shutter_open_s = 0.0;
  r.shutter_close_s = 0.01;
  return r;
}

}  // namespace

TEST_CASE("transform interpolation endpoints and midpoints") {
  RigidTransform t0;
  RigidTransform t1;
  t1.translation = Vec3(2, 0, 0);
  t1.rotation = RigidTransform::yaw_deg(90).rotation;
  t1.scale = 3.0;
  CHECK(interpolate_transform(t0, t1, 0.0).approx_equal(t0, 1e-15));
  CHECK(interpolate_transform(t0, t1, 1.0).approx_equal(t1, 1e-15));
  const RigidTransform mid = interpolate_transform(t0, t1, 0.5);
  CHECK(mid.translation.isApprox(Vec3(1, 0, 0), 1e-12));
  CHECK(mid.scale == doctest::Approx(2.0));
  // Quaternion slerp oracle: halfway between 0 and 90 degrees about z.
  const Eigen::Quaterniond expected(
      Eigen::AngleAxisd(45.0 * kDeg, Vec3::UnitZ()));
  CHECK(std::abs(mid.rotation.angularDistance(expected)) < 1e-9);
}

TEST_CASE("affine decomposition accepts rigid+scale, rejects shear") {
  RigidTransform t;
  t.translation = Vec3(1, 2, 3);
  t.rotation = RigidTransform::yaw_deg(30).rotation;
  t.scale = 2.0;
  const RigidTransform back = decompose_affine(t.to_affine().matrix());
  CHECK(back.approx_equal(t, 1e-9));

  Eigen::Matrix4d shear = Eigen::Matrix4d::Identity();
  shear(0, 1) = 0.3;
  CHECK_THROWS_AS(decompose_affine(shear), ValidationError);
}

TEST_CASE("diffuse scatter is cosine weighted about the normal") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  MaterialSpec mat;
  mat.kind = MaterialKind::diffuse;
  mat.spectrum = Spectrum::constant(grid, 0.5);
  const Vec3 n = Vec3(0.3, -0.2, 0.93).normalized();
  const Vec3 in = Vec3(0.5, 0.5, -0.7).normalized();
  Rng rng(101);
  Vec3 mean = Vec3::Zero();
  double mean_cos = 0.0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const ScatterSample s = scatter(mat, in, n, rng);
    CHECK(s.direction.dot(n) > 0.0);
    mean += s.direction;
    mean_cos += s.direction.dot(n);
  }
  mean /= double(samples);
  mean_cos /= double(samples);
  // Cosine-weighted hemisphere: E[direction] = (2/3) n.
  CHECK((mean.normalized() - n).norm() < 0.01);
  CHECK(mean_cos == doctest::Approx(2.0 / 3.0).epsilon(0.01));
  // Throughput is the reflectance.
  const ScatterSample s = scatter(mat, in, n, rng);
  CHECK(s.throughput[0] == doctest::Approx(0.5));
}

TEST_CASE("zero reflectance kills the throughput") {
  MaterialSpec mat;
  mat.kind = MaterialKind::diffuse;
  mat.spectrum = Spectrum::zero(WavelengthGrid::standard());
  Rng rng(1);
  const ScatterSample s =
      scatter(mat, Vec3(0, 0, -1), Vec3(0, 0, 1), rng);
  CHECK((s.throughput == 0.0).all());
}

TEST_CASE("retroreflective lobe concentrates around the reversed ray") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  MaterialSpec mat;
  mat.kind = MaterialKind::retroreflective;
  mat.spectrum = Spectrum::constant(grid, 0.8);
  mat.retro_fraction = 0.9;
  mat.sigma_retro_rad = 2.0 * kDeg;
  // 45 degree incidence so the 5 degree cone stays inside the hemisphere.
  const Vec3 n = Vec3(0, 0, 1);
  const Vec3 in = Vec3(1, 0, -1).normalized();
  const Vec3 back = -in;
  Rng rng(202);
  int within = 0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) {
    const ScatterSample s = scatter(mat, in, n, rng);
    if (std::acos(std::clamp(s.direction.dot(back), -1.0, 1.0)) < 5.0 * kDeg)
      ++within;
  }
  CHECK(double(within) / samples >= 0.85);
}

TEST_CASE("scene intersection: miss and nearest-of-two-planes") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  Scene scene;
  scene.set_grid(grid);
  const AssetDescription plane =
      quad_asset("p", ClassLabel::building, MaterialKind::diffuse, 0.5, 20,
                 20, grid);
  scene.add_object(plane, RigidTransform::translate(Vec3(5, 0, 0)),
                   RigidTransform::translate(Vec3(5, 0, 0)), 1);
  scene.add_object(plane, RigidTransform::translate(Vec3(10, 0, 0)),
                   RigidTransform::translate(Vec3(10, 0, 0)), 2);
  scene.finalize();
  const Scene::TimeSlice slice = scene.transforms_at(0.0);

  CHECK_FALSE(scene.intersect(Vec3(0, 0, 0), Vec3(-1, 0, 0), slice));
  const auto hit = scene.intersect(Vec3(0, 0, 0), Vec3(1, 0, 0), slice);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(5.0));
  CHECK(hit->instance_id == 1);
  CHECK(scene.occluded(Vec3(0, 0, 0), Vec3(1, 0, 0), slice));
  CHECK_FALSE(scene.occluded(Vec3(0, 0, 0), Vec3(0, 0, 1), slice));
}

TEST_CASE("bvh agrees with the brute-force oracle on random rays") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  Rng rng(303);
  AssetDescription blob;
  blob.asset_id = "blob";
  blob.class_label = ClassLabel::other;
  MaterialSpec mat;
  mat.kind = MaterialKind::diffuse;
  mat.spectrum = Spectrum::constant(grid, 0.5);
  blob.materials["m"] = mat;
  TriangleMesh mesh;
  for (int t = 0; t < 60; ++t) {
    const int base = int(mesh.vertices.size());
    const Vec3 center(rng.uniform(-5, 5), rng.uniform(-5, 5),
                      rng.uniform(-5, 5));
    for (int k = 0; k < 3; ++k)
      mesh.vertices.push_back(center + Vec3(rng.uniform(-1, 1),
                                            rng.uniform(-1, 1),
                                            rng.uniform(-1, 1)));
    mesh.triangles.push_back({base, base + 1, base + 2});
  }
  blob.meshes.emplace_back(std::move(mesh), "m");
  for (const auto& [m, name] : blob.meshes)
    for (const auto& v : m.vertices) blob.bounding_box.expand(v);

  Scene scene;
  scene.set_grid(grid);
  scene.add_object(blob, RigidTransform{}, RigidTransform{}, 1);
  // A moving copy: translation plus a little yaw, exercising the swept
  // bounds and the object-space ray transform.
  RigidTransform t1 = RigidTransform::translate(Vec3(2, 1, 0));
  t1.rotation = RigidTransform::yaw_deg(20).rotation;
  scene.add_object(blob, RigidTransform::translate(Vec3(1, 1, 0)), t1, 2);
  scene.finalize();

  for (int i = 0; i < 10000; ++i) {
    const Scene::TimeSlice slice = scene.transforms_at(rng.uniform());
    const Vec3 origin(rng.uniform(-12, 12), rng.uniform(-12, 12),
                      rng.uniform(-12, 12));
    Vec3 dir(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (dir.norm() < 1e-6) continue;
    dir.normalize();
    const auto fast = scene.intersect(origin, dir, slice);
    const auto slow = scene.intersect_brute_force(origin, dir, slice);
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) {
      CHECK(fast->t == doctest::Approx(slow->t).epsilon(1e-9));
      CHECK(fast->instance_id == slow->instance_id);
    }
  }
}

TEST_CASE("empty scene under uniform sky renders flat pi * L") {
  const WavelengthGrid grid = WavelengthGrid::make(495, 605, 3);
  const double sky = 0.02;
  Scene scene;
  scene.set_grid(grid);
  scene.set_environment(
      EnvironmentLight::uniform(Spectrum::constant(grid, sky)));
  scene.set_recipe(camera_recipe());
  scene.finalize();
  RenderConfig cfg;
  cfg.width = 16;
  cfg.height = 16;
  cfg.samples_per_pixel = 8;
  cfg.grid = grid;
  cfg.seed = 5;
  const RenderResult result = render(scene, cfg);
  const double expected = std::numbers::pi * sky;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int b = 0; b < grid.n_bands; ++b)
        CHECK(result.image.at(x, y, b) ==
              doctest::Approx(expected).epsilon(1e-5));
  // Empty scene: every metadata pixel flags a miss.
  CHECK(result.image.depth[0] == 0.0f);
  CHECK(result.image.class_id[0] == 0);
}

TEST_CASE("fronto-parallel plane: depth equals 10/cos(theta) and labels match") {
  const WavelengthGrid grid = WavelengthGrid::make(495, 605, 2);
  Scene scene;
  scene.set_grid(grid);
  scene.set_environment(
      EnvironmentLight::uniform(Spectrum::constant(grid, 0.01)));
  const AssetDescription plane =
      quad_asset("wall", ClassLabel::car, MaterialKind::diffuse, 0.4, 40, 40,
                 grid);
  scene.add_object(plane, RigidTransform::translate(Vec3(10, 0, 0)),
                   RigidTransform::translate(Vec3(10, 0, 0)), 7);
  scene.set_recipe(camera_recipe(60.0));
  scene.finalize();
  RenderConfig cfg;
  cfg.width = 32;
  cfg.height = 32;
  cfg.samples_per_pixel = 1;
  cfg.grid = grid;
  const RenderResult result = render(scene, cfg);
  Camera camera(scene.recipe().camera, 32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const std::size_t i = result.image.plane_index(x, y);
      REQUIRE(result.image.instance_id[i] == 7);
      CHECK(result.image.class_id[i] == class_label_id(ClassLabel::car));
      const Ray central = *camera.central_ray(x + 0.5, y + 0.5);
      const double cos_theta = central.direction.x();  // axis is +x
      const double expected = 10.0 / cos_theta;
      CHECK(std::abs(result.image.depth[i] - expected) / expected < 0.001);
    }
}

TEST_CASE("render determinism: thread count cannot change the image") {
  const WavelengthGrid grid = WavelengthGrid::make(495, 605, 2);
  Scene scene;
  scene.set_grid(grid);
  scene.set_environment(
      EnvironmentLight::uniform(Spectrum::constant(grid, 0.02)));
  const AssetDescription box =
      quad_asset("wall", ClassLabel::building, MaterialKind::diffuse, 0.6, 8,
                 8, grid);
  scene.add_object(box, RigidTransform::translate(Vec3(6, 0, 0)),
                   RigidTransform::translate(Vec3(6, 0, 0)), 1);
  scene.set_recipe(camera_recipe());
  scene.finalize();
  RenderConfig cfg;
  cfg.width = 24;
  cfg.height = 24;
  cfg.samples_per_pixel = 8;
  cfg.grid = grid;
  cfg.seed = 77;
  cfg.threads = 1;
  const RenderResult a = render(scene, cfg);
  cfg.threads = 4;
  const RenderResult b = render(scene, cfg);
  CHECK(a.image.data == b.image.data);
  CHECK(a.image.depth == b.image.depth);
}

TEST_CASE("static scenes are invariant to shutter duration") {
  const WavelengthGrid grid = WavelengthGrid::make(495, 605, 2);
  Scene scene;
  scene.set_grid(grid);
  scene.set_environment(
      EnvironmentLight::uniform(Spectrum::constant(grid, 0.02)));
  const AssetDescription box =
      quad_asset("wall", ClassLabel::building, MaterialKind::diffuse, 0.6, 8,
                 8, grid);
  scene.add_object(box, RigidTransform::translate(Vec3(6, 0, 0)),
                   RigidTransform::translate(Vec3(6, 0, 0)), 1);
  scene.set_recipe(camera_recipe());
  scene.finalize();
  RenderConfig cfg;
  cfg.width = 16;
  cfg.height = 16;
  cfg.samples_per_pixel = 8;
  cfg.grid = grid;
  cfg.seed = 12;
  cfg.shutter_override = {{0.0, 0.001}};
  const RenderResult a = render(scene, cfg);
  cfg.shutter_override = {{0.0, 0.1}};
  const RenderResult b = render(scene, cfg);
  CHECK(a.image.data == b.image.data);
}

TEST_CASE("motion blur streak length tracks the projected motion") {
  const WavelengthGrid grid = WavelengthGrid::make(495, 605, 1);
  // Emissive bar on a black sky; pinhole 90 deg across 64 px at x = 10 m:
  // a lateral step d_y projects to d_y/10 * 0.5 * 64 px.
  const double motion_px = 10.0;
  const double d_y = motion_px * 10.0 / (0.5 * 64.0);
  // Bar width of exactly two pixel columns, aligned to column boundaries,
  // so end-column coverage is unambiguous.
  const double bar_w = 2.0 * 10.0 / (0.5 * 64.0);
  auto build = [&](double dy) {
    Scene scene;
    scene.set_grid(grid);
    scene.set_environment(
        EnvironmentLight::uniform(Spectrum::zero(grid)));
    const AssetDescription bar = quad_asset(
        "bar", ClassLabel::car, MaterialKind::emissive, 5.0, bar_w, 3.0, grid);
    scene.add_object(bar, RigidTransform::translate(Vec3(10, 0, 0)),
                     RigidTransform::translate(Vec3(10, dy, 0)), 1);
    scene.set_recipe(camera_recipe(90.0));
    scene.finalize();
    return scene;
  };
  RenderConfig cfg;
  cfg.width = 64;
  cfg.height = 64;
  cfg.samples_per_pixel = 64;
  cfg.grid = grid;
  cfg.seed = 9;
  auto extent = [&](const SpectralImage& img) {
    int first = -1, last = -1;
    for (int x = 0; x < img.width; ++x) {
      float peak = 0;
      for (int y = 0; y < img.height; ++y)
        peak = std::max(peak, img.at(x, y, 0));
      if (peak > 1e-6) {
        if (first < 0) first = x;
        last = x;
      }
    }
    REQUIRE(first >= 0);
    return last - first + 1;
  };
  const Scene still = build(0.0);
  const Scene moving = build(d_y);
  const int static_extent = extent(render(still, cfg).image);
  const int moving_extent = extent(render(moving, cfg).image);
  CHECK(std::abs((moving_extent - static_extent) - motion_px) <= 1.0);
}

TEST_CASE("camera projections: pinhole edge and fisheye equidistant") {
  // Point 56 degrees off-axis in the horizontal plane lands on the film
  // edge for a 112 degree horizontal field of view.
  const auto edge = pinhole_project(
      Vec3(std::tan(56.0 * kDeg), 0, 1.0), 112.0);
  REQUIRE(edge.has_value());
  CHECK(edge->x() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pinhole_project(Vec3(0, 0, 1), 112.0)->norm() == 0.0);
  CHECK_FALSE(pinhole_project(Vec3(0, 0, -1), 112.0).has_value());

  // Equidistant: radius = f * theta with f = 1/fov_rad.
  const auto ninety = fisheye_project(Vec3(1, 0, 0), 180.0);
  REQUIRE(ninety.has_value());
  CHECK(ninety->x() ==
        doctest::Approx((1.0 / std::numbers::pi) * (std::numbers::pi / 2)));
  CHECK(fisheye_project(Vec3(0, 0, 1), 180.0)->norm() == 0.0);
}

TEST_CASE("camera ray generation inverts projection") {
  SceneRecipe r = camera_recipe(75.0);
  r.camera.position = Vec3(3, -2, 1);
  r.camera.look_at = Vec3(10, 4, 2);
  for (CameraModel model : {CameraModel::pinhole, CameraModel::fisheye}) {
    r.camera.model = model;
    Camera camera(r.camera, 48, 36);
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
      const double px = rng.uniform(1.0, 47.0);
      const double py = rng.uniform(1.0, 35.0);
      Rng none(0);
      const CameraRaySample s = camera.generate_ray(px, py, 550.0, none);
      REQUIRE(s.weight > 0);
      const Vec3 point = s.ray.origin + 7.3 * s.ray.direction;
      const auto back = camera.project(point);
      REQUIRE(back.has_value());
      CHECK(back->x() == doctest::Approx(px).epsilon(1e-6));
      CHECK(back->y() == doctest::Approx(py).epsilon(1e-6));
    }
  }
}
