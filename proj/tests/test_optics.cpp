#include <doctest.h>

#include <cmath>
#include <numbers>

#include "camsim/lens.hpp"

using namespace camsim;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const char* kBiconvex = R"(
film_distance_mm 99.8
focal_length_mm 100.0
sphere  0.01 1.0 10.0 cauchy 1.5 0.0
sphere -0.01 1.0 10.0 air
stop 0.0 9.0
)";

// Same geometry with dispersive glass: n(450) ~ 1.525 > n(650) ~ 1.512.
const char* kBiconvexDispersive = R"(
film_distance_mm 99.8
sphere  0.01 1.0 10.0 cauchy 1.5 0.005
sphere -0.01 1.0 10.0 air
stop 0.0 9.0
)";

// Independent bisection root finder used as the intersection oracle.
double bisection_hit(const LensSurface& s, double vertex_z, const Vec3& o,
                     const Vec3& d) {
  auto g = [&](double t) {
    const Vec3 p = o + t * d;
    return p.z() - vertex_z - s.sag(p.x(), p.y());
  };
  double t0 = 0.0, t1 = 0.0;
  double prev = g(0.0);
  for (double t = 1e-4; t < 100.0; t += 1e-3) {
    const double cur = g(t);
    if ((prev < 0) != (cur < 0)) {
      t0 = t - 1e-3;
      t1 = t;
      break;
    }
    prev = cur;
  }
  REQUIRE(t1 > 0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (t0 + t1);
    if ((g(t0) < 0) != (g(mid) < 0))
      t1 = mid;
    else
      t0 = mid;
  }
  return 0.5 * (t0 + t1);
}

}  // namespace

TEST_CASE("lens parsing: single stop is a valid pinhole-like prescription") {
  const LensPrescription lens = parse_lens("film_distance_mm 5\nstop 0 0.1\n");
  CHECK(lens.surfaces.size() == 1);
  CHECK(lens.stop_index() == 0);
}

TEST_CASE("lens parsing rejects two stops naming both lines") {
  try {
    parse_lens("stop 1.0 0.5\nsphere 0.01 1 5 air\nstop 0 0.5\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1") != std::string::npos);
    CHECK(msg.find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_lens("sphere 0.01 1 5 air\n"), ParseError);  // no stop
}

TEST_CASE("lens parsing rejects malformed lines and unreal sag") {
  CHECK_THROWS_AS(parse_lens("sphere 0.01 air\n"), ParseError);
  CHECK_THROWS_AS(parse_lens("wobble 1 2 3\n"), ParseError);
  // c = 0.5/mm with semi-aperture 8 mm: c^2 r^2 = 16 > 1.
  CHECK_THROWS_AS(parse_lens("stop 1 1\nsphere 0.5 1 8 air\n"), ParseError);
  CHECK_THROWS_AS(parse_lens("stop 1 1\nsphere 0.01 1 5 water\n"), ParseError);
}

TEST_CASE("biconvex fixture parses with both surfaces spherical") {
  const LensPrescription lens = parse_lens(kBiconvex);
  REQUIRE(lens.surfaces.size() == 3);
  CHECK(lens.surfaces[0].kind == SurfaceKind::spherical);
  CHECK(lens.surfaces[1].kind == SurfaceKind::spherical);
  CHECK(lens.surfaces[2].kind == SurfaceKind::aperture_stop);
  CHECK(lens.surfaces[0].index_at(550.0) == doctest::Approx(1.5));
  CHECK(lens.vertex_z(2) == doctest::Approx(2.0));  // stop plane
}

TEST_CASE("refraction at normal incidence leaves the direction unchanged") {
  const Vec3 d(0, 0, 1);
  for (double n2 : {1.0, 1.5, 1.9}) {
    const auto out = refract(d, Vec3(0, 0, -1), 1.0, n2);
    REQUIRE(out.has_value());
    CHECK((*out - d).norm() < 1e-15);
  }
}

TEST_CASE("refraction matches the closed-form Snell angle") {
  // 30 degrees, air to glass: asin(sin(30)/1.5) = 19.4712 degrees.
  const Vec3 d(std::sin(30 * kDeg), 0, std::cos(30 * kDeg));
  const auto out = refract(d, Vec3(0, 0, -1), 1.0, 1.5);
  REQUIRE(out.has_value());
  const double theta = std::atan2(out->x(), out->z()) / kDeg;
  CHECK(std::abs(theta - 19.4712) < 1e-3);
}

TEST_CASE("total internal reflection past the critical angle") {
  // Glass to air at 60 degrees; the critical angle is 41.81 degrees.
  const Vec3 d(std::sin(60 * kDeg), 0, std::cos(60 * kDeg));
  CHECK_FALSE(refract(d, Vec3(0, 0, -1), 1.5, 1.0).has_value());
  const Vec3 d2(std::sin(41 * kDeg), 0, std::cos(41 * kDeg));
  CHECK(refract(d2, Vec3(0, 0, -1), 1.5, 1.0).has_value());
}

TEST_CASE("refraction reverses exactly") {
  Rng rng(3);
  int tested = 0;
  while (tested < 1000) {
    Vec3 d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 1));
    d.normalize();
    Vec3 n(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), -1);
    n.normalize();
    const double n1 = rng.uniform(1.0, 1.8);
    const double n2 = rng.uniform(1.0, 1.8);
    const auto fwd = refract(d, n, n1, n2);
    if (!fwd) continue;
    const auto back = refract(*fwd, -n, n2, n1);
    REQUIRE(back.has_value());
    CHECK((*back - d).norm() < 1e-9);
    ++tested;
  }
}

TEST_CASE("axial ray hits a spherical surface at the vertex") {
  LensSurface s;
  s.kind = SurfaceKind::spherical;
  s.curvature = 0.02;
  s.semi_aperture_mm = 10.0;
  s.index = Spectrum::constant(WavelengthGrid::standard(), 1.5);
  const auto hit = intersect_surface(Vec3(0, 0, -5), Vec3(0, 0, 1), s, 0.0);
  REQUIRE(hit.has_value());
  CHECK(hit->point.norm() < 1e-12);
  CHECK((hit->normal - Vec3(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("flat surface intersects where the ray crosses the plane") {
  LensSurface s;
  s.kind = SurfaceKind::spherical;
  s.curvature = 0.0;
  s.semi_aperture_mm = 5.0;
  s.index = Spectrum::constant(WavelengthGrid::standard(), 1.5);
  Vec3 d(0.1, 0.0, 1.0);
  d.normalize();
  const auto hit = intersect_surface(Vec3(0.5, 0, -3), d, s, 2.0);
  REQUIRE(hit.has_value());
  CHECK(hit->point.z() == doctest::Approx(2.0));
  // Slope x/z = 0.1 over dz = 5.
  CHECK(hit->point.x() == doctest::Approx(1.0));
}

TEST_CASE("vignetting beyond the semi-aperture") {
  LensSurface s;
  s.kind = SurfaceKind::spherical;
  s.curvature = 0.0;
  s.semi_aperture_mm = 1.0;
  s.index = Spectrum::constant(WavelengthGrid::standard(), 1.0);
  CHECK_FALSE(intersect_surface(Vec3(2.0, 0, -3), Vec3(0, 0, 1), s, 0.0));
}

TEST_CASE("aspheric intersection matches the bisection oracle") {
  LensSurface s;
  s.kind = SurfaceKind::aspheric;
  s.curvature = 0.05;
  s.conic = -0.6;
  s.a4 = 1e-4;
  s.a6 = -2e-6;
  s.semi_aperture_mm = 6.0;
  s.index = Spectrum::constant(WavelengthGrid::standard(), 1.6);
  Rng rng(17);
  int checked = 0;
  for (int i = 0; i < 80; ++i) {
    Vec3 o(rng.uniform(-2, 2), rng.uniform(-2, 2), -8.0);
    Vec3 d(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 1.0);
    d.normalize();
    const auto hit = intersect_surface(o, d, s, 0.0);
    if (!hit) continue;
    const double t_oracle = bisection_hit(s, 0.0, o, d);
    CHECK((hit->point - (o + t_oracle * d)).norm() < 1e-6);
    ++checked;
  }
  CHECK(checked > 40);
}

TEST_CASE("biconic sag gradients agree with finite differences") {
  LensSurface s;
  s.kind = SurfaceKind::biconic;
  s.curvature = 0.04;
  s.curvature_y = 0.025;
  s.conic = -0.3;
  s.conic_y = 0.5;
  s.semi_aperture_mm = 8.0;
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const double x = rng.uniform(-5, 5);
    const double y = rng.uniform(-5, 5);
    const Vec3 g = s.sag_gradient(x, y);
    const double h = 1e-6;
    CHECK(g.x() == doctest::Approx((s.sag(x + h, y) - s.sag(x - h, y)) / (2 * h))
                       .epsilon(1e-5));
    CHECK(g.y() == doctest::Approx((s.sag(x, y + h) - s.sag(x, y - h)) / (2 * h))
                       .epsilon(1e-5));
  }
}

TEST_CASE("biconic intersection matches the bisection oracle") {
  LensSurface s;
  s.kind = SurfaceKind::biconic;
  s.curvature = 0.03;
  s.curvature_y = 0.05;
  s.conic = 0.2;
  s.conic_y = -0.4;
  s.semi_aperture_mm = 6.0;
  s.index = Spectrum::constant(WavelengthGrid::standard(), 1.6);
  Rng rng(29);
  int checked = 0;
  for (int i = 0; i < 80; ++i) {
    Vec3 o(rng.uniform(-2, 2), rng.uniform(-2, 2), -8.0);
    Vec3 d(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 1.0);
    d.normalize();
    const auto hit = intersect_surface(o, d, s, 0.0);
    if (!hit) continue;
    const double t_oracle = bisection_hit(s, 0.0, o, d);
    CHECK((hit->point - (o + t_oracle * d)).norm() < 1e-6);
    ++checked;
  }
  CHECK(checked > 40);
}

TEST_CASE("pinhole-degenerate trace exits collinear with film->stop line") {
  const LensPrescription lens = parse_lens("film_distance_mm 5\nstop 0 2.0\n");
  Rng rng(1);
  const Eigen::Vector2d film(1.2, -0.7);
  const Eigen::Vector2d sample(0.3, 0.4);
  const auto ray = trace_through_lens(film, sample, 550.0, lens, rng, nullptr,
                                      /*diffraction=*/false);
  REQUIRE(ray.has_value());
  CHECK(ray->weight == 1.0);
  const Vec3 expected =
      (Vec3(sample.x(), sample.y(), 0) - Vec3(film.x(), film.y(), -5.0))
          .normalized();
  CHECK((ray->direction - expected).norm() < 1e-12);
}

TEST_CASE("paraxial focus of the thin biconvex sits near 100 mm") {
  const LensPrescription lens = parse_lens(kBiconvex);
  const ParaxialResult p = paraxial_analysis(lens, 550.0);
  CHECK(p.efl_mm == doctest::Approx(100.0).epsilon(0.01));
  // Lensmaker oracle in the thin limit: 1/f = (n-1)(1/R1 - 1/R2).
  const double f_thin = 1.0 / ((1.5 - 1.0) * (1.0 / 100.0 + 1.0 / 100.0));
  CHECK(p.efl_mm == doctest::Approx(f_thin).epsilon(0.01));
  // Parallel axial rays traced for real converge within 1 mm of 100 mm.
  CHECK(std::abs(traced_back_focus_mm(lens, 550.0) - 100.0) < 1.0);
}

TEST_CASE("dispersive glass focuses blue nearer than red") {
  const LensPrescription lens = parse_lens(kBiconvexDispersive);
  CHECK(lens.surfaces[0].index_at(450.0) > lens.surfaces[0].index_at(650.0));
  const double f450 = traced_back_focus_mm(lens, 450.0);
  const double f650 = traced_back_focus_mm(lens, 650.0);
  CHECK(f450 < f650);  // chromatic aberration sign
  CHECK(paraxial_analysis(lens, 450.0).bfd_mm <
        paraxial_analysis(lens, 650.0).bfd_mm);
}

TEST_CASE("traced focal length matches the paraxial matrix for bundled lenses") {
  for (const char* path :
       {"data/lenses/biconvex_f100.lens", "data/lenses/wideangle_112deg.lens"}) {
    const LensPrescription lens = load_lens(path);
    const ParaxialResult p = paraxial_analysis(lens, 550.0);
    const double h = 0.01;
    const Vec3 origin(h, 0.0, lens.front_vertex_z() + 5.0);
    const auto ray = trace_from_scene(origin, Vec3(0, 0, -1), 550.0, lens);
    REQUIRE(ray.has_value());
    const double efl_traced =
        h / std::abs(ray->direction.x() / ray->direction.z());
    CHECK(std::abs(efl_traced - p.efl_mm) / p.efl_mm < 0.005);
  }
}

TEST_CASE("hurb perturbation statistics match sigma = lambda/(2 pi d)") {
  const double lambda = 550.0;
  const double d_mm = 1.0;
  const double sigma = 550e-6 / (2.0 * std::numbers::pi * d_mm);
  CHECK(sigma == doctest::Approx(8.754e-5).epsilon(1e-3));
  Rng rng(77);
  const Vec3 dir = Vec3(0.2, -0.1, 1.0).normalized();
  const int n = 100000;
  double sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec3 out = hurb_perturb(dir, d_mm, lambda, rng);
    const double angle = std::acos(std::clamp(out.dot(dir), -1.0, 1.0));
    sum2 += angle * angle;
  }
  // Two independent tangent axes: E[angle^2] = 2 sigma^2.
  const double sigma_axis = std::sqrt(sum2 / (2.0 * n));
  CHECK(std::abs(sigma_axis - sigma) / sigma < 0.02);
}

TEST_CASE("hurb perturbation vanishes with wavelength") {
  Rng rng(5);
  const Vec3 dir = Vec3(0, 0, 1);
  CHECK((hurb_perturb(dir, 1.0, 0.0, rng) - dir).norm() == 0.0);
}

TEST_CASE("wide-angle lens: edge spot is worse than the center spot") {
  const LensPrescription lens = load_lens("data/lenses/wideangle_112deg.lens");
  // Parallel bundles from the scene, traced onto the film plane.
  auto rms_spot = [&](double field_deg) {
    const Vec3 dir =
        Vec3(std::sin(field_deg * kDeg), 0, -std::cos(field_deg * kDeg));
    std::vector<Eigen::Vector2d> hits;
    const double film_z = -lens.film_distance_mm;
    const double front_z = lens.front_vertex_z();
    // The entrance window shifts laterally with field angle; scan a wide
    // grid and keep whatever the apertures admit.
    for (double px = -8.0; px <= 8.001; px += 0.2)
      for (double py = -2.0; py <= 2.001; py += 0.4) {
        const Vec3 origin = Vec3(px, py, front_z + 1.0) - 10.0 * dir;
        const auto ray = trace_from_scene(origin, dir, 550.0, lens);
        if (!ray) continue;
        const double t = (film_z - ray->origin.z()) / ray->direction.z();
        if (t <= 0) continue;
        const Vec3 p = ray->origin + t * ray->direction;
        hits.push_back(Eigen::Vector2d(p.x(), p.y()));
      }
    REQUIRE(hits.size() >= 5);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& h : hits) mean += h;
    mean /= double(hits.size());
    double rms = 0.0;
    for (const auto& h : hits) rms += (h - mean).squaredNorm();
    return std::sqrt(rms / hits.size());
  };
  CHECK(rms_spot(30.0) > rms_spot(0.0));
}
