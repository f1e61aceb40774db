#include "camsim/lens.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace camsim {

namespace {

bool solve_quadratic(double a, double b, double c, double& t0, double& t1) {
  const double disc = b * b - 4 * a * c;
  if (disc < 0) return false;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = b < 0 ? -0.5 * (b - sq) : -0.5 * (b + sq);
  t0 = q / a;
  t1 = std::abs(q) > 0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  return true;
}

}  // namespace

double LensSurface::sag(double x, double y) const {
  if (kind == SurfaceKind::aperture_stop) return 0.0;
  if (kind == SurfaceKind::biconic) {
    const double num = curvature * x * x + curvature_y * y * y;
    const double under = 1.0 - (1.0 + conic) * curvature * curvature * x * x -
                         (1.0 + conic_y) * curvature_y * curvature_y * y * y;
    return num / (1.0 + std::sqrt(std::max(0.0, under)));
  }
  const double r2 = x * x + y * y;
  const double under = 1.0 - (1.0 + conic) * curvature * curvature * r2;
  double s = curvature * r2 / (1.0 + std::sqrt(std::max(0.0, under)));
  if (kind == SurfaceKind::aspheric) {
    const double r4 = r2 * r2;
    s += a4 * r4 + a6 * r4 * r2 + a8 * r4 * r4;
  }
  return s;
}

Vec3 LensSurface::sag_gradient(double x, double y) const {
  if (kind == SurfaceKind::aperture_stop) return Vec3::Zero();
  if (kind == SurfaceKind::biconic) {
    const double cx = curvature, cy = curvature_y;
    const double kx = conic, ky = conic_y;
    const double num = cx * x * x + cy * y * y;
    const double under = 1.0 - (1.0 + kx) * cx * cx * x * x -
                         (1.0 + ky) * cy * cy * y * y;
    const double q = std::sqrt(std::max(1e-12, under));
    const double denom = 1.0 + q;
    // d/dx of num/denom with q(x,y) inside denom.
    const double dq_dx = -(1.0 + kx) * cx * cx * x / q;
    const double dq_dy = -(1.0 + ky) * cy * cy * y / q;
    const double gx = (2.0 * cx * x * denom - num * dq_dx) / (denom * denom);
    const double gy = (2.0 * cy * y * denom - num * dq_dy) / (denom * denom);
    return Vec3(gx, gy, 0.0);
  }
  const double r2 = x * x + y * y;
  const double c = curvature, k = conic;
  const double under = 1.0 - (1.0 + k) * c * c * r2;
  const double q = std::sqrt(std::max(1e-12, under));
  const double denom = 1.0 + q;
  // ds/d(r^2) for the conic part.
  double ds_dr2 = c / denom + c * r2 * (1.0 + k) * c * c / (2.0 * q * denom * denom);
  if (kind == SurfaceKind::aspheric) {
    const double r4 = r2 * r2;
    ds_dr2 += 2.0 * a4 * r2 + 3.0 * a6 * r4 + 4.0 * a8 * r4 * r2;
  }
  return Vec3(2.0 * x * ds_dr2, 2.0 * y * ds_dr2, 0.0);
}

int LensPrescription::stop_index() const {
  for (std::size_t i = 0; i < surfaces.size(); ++i)
    if (surfaces[i].kind == SurfaceKind::aperture_stop) return int(i);
  return -1;
}

double LensPrescription::vertex_z(int surface) const {
  double z = 0.0;
  for (int i = 0; i < surface; ++i) z += surfaces[i].thickness_mm;
  return z;
}

void LensPrescription::validate() const {
  if (surfaces.empty()) throw ValidationError("lens has no surfaces");
  int stops = 0;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const LensSurface& s = surfaces[i];
    if (s.kind == SurfaceKind::aperture_stop) ++stops;
    if (s.semi_aperture_mm <= 0)
      throw ValidationError("surface " + std::to_string(i) +
                            ": semi-aperture must be positive");
    if (s.thickness_mm < 0)
      throw ValidationError("surface " + std::to_string(i) +
                            ": thickness must be >= 0");
    if (s.kind != SurfaceKind::aperture_stop &&
        (s.index.values < 1.0).any())
      throw ValidationError("surface " + std::to_string(i) +
                            ": refractive index must be >= 1 in every band");
    // Real sag over the full clear aperture.
    const double sa2 = s.semi_aperture_mm * s.semi_aperture_mm;
    double worst = 0.0;
    if (s.kind == SurfaceKind::biconic) {
      worst = std::max((1.0 + s.conic) * s.curvature * s.curvature,
                       (1.0 + s.conic_y) * s.curvature_y * s.curvature_y) * sa2;
    } else if (s.kind != SurfaceKind::aperture_stop) {
      worst = (1.0 + s.conic) * s.curvature * s.curvature * sa2;
    }
    if (worst >= 1.0)
      throw ValidationError("surface " + std::to_string(i) +
                            ": sag is not real over the semi-aperture");
  }
  if (stops != 1)
    throw ValidationError("prescription must contain exactly one aperture "
                          "stop, found " + std::to_string(stops));
  if (film_distance_mm < 0)
    throw ValidationError("film_distance_mm must be >= 0");
}

namespace {

Spectrum air_index(const WavelengthGrid& grid) {
  return Spectrum::constant(grid, 1.0);
}

Spectrum cauchy_index(double a, double b_um2, const WavelengthGrid& grid) {
  Eigen::ArrayXd v(grid.n_bands);
  for (int i = 0; i < grid.n_bands; ++i) {
    const double um = grid.center_nm(i) * 1e-3;
    v[i] = a + b_um2 / (um * um);
  }
  return Spectrum(grid, std::move(v));
}

}  // namespace

LensPrescription parse_lens(const std::string& text,
                            const WavelengthGrid& grid) {
  LensPrescription lens;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<int> stop_lines;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;

    auto need = [&](double& v, const char* what) {
      if (!(ls >> v))
        throw ParseError(std::string("expected ") + what, lineno);
    };
    auto read_medium = [&](LensSurface& s) {
      std::string medium;
      if (!(ls >> medium))
        throw ParseError("expected medium (air | cauchy A B)", lineno);
      if (medium == "air") {
        s.index = air_index(grid);
      } else if (medium == "cauchy") {
        double a, b;
        need(a, "cauchy A");
        need(b, "cauchy B (um^2)");
        s.index = cauchy_index(a, b, grid);
      } else {
        throw ParseError("unknown medium '" + medium + "'", lineno);
      }
    };

    if (word == "film_distance_mm") {
      need(lens.film_distance_mm, "film distance value");
    } else if (word == "focal_length_mm") {
      need(lens.focal_length_label_mm, "focal length value");
    } else if (word == "sphere") {
      LensSurface s;
      s.kind = SurfaceKind::spherical;
      need(s.curvature, "curvature");
      need(s.thickness_mm, "thickness");
      need(s.semi_aperture_mm, "semi-aperture");
      read_medium(s);
      lens.surfaces.push_back(std::move(s));
    } else if (word == "asphere") {
      LensSurface s;
      s.kind = SurfaceKind::aspheric;
      need(s.curvature, "curvature");
      need(s.conic, "conic constant");
      need(s.a4, "a4");
      need(s.a6, "a6");
      need(s.a8, "a8");
      need(s.thickness_mm, "thickness");
      need(s.semi_aperture_mm, "semi-aperture");
      read_medium(s);
      lens.surfaces.push_back(std::move(s));
    } else if (word == "biconic") {
      LensSurface s;
      s.kind = SurfaceKind::biconic;
      need(s.curvature, "cx");
      need(s.curvature_y, "cy");
      need(s.conic, "kx");
      need(s.conic_y, "ky");
      need(s.thickness_mm, "thickness");
      need(s.semi_aperture_mm, "semi-aperture");
      read_medium(s);
      lens.surfaces.push_back(std::move(s));
    } else if (word == "stop") {
      LensSurface s;
      s.kind = SurfaceKind::aperture_stop;
      need(s.thickness_mm, "thickness");
      need(s.semi_aperture_mm, "semi-aperture");
      s.index = air_index(grid);
      lens.surfaces.push_back(std::move(s));
      stop_lines.push_back(lineno);
    } else {
      throw ParseError("unknown lens directive '" + word + "'", lineno);
    }
    std::string extra;
    if (ls >> extra)
      throw ParseError("trailing token '" + extra + "'", lineno);
  }
  if (stop_lines.size() > 1) {
    std::string msg = "multiple aperture stops (lines";
    for (int l : stop_lines) msg += " " + std::to_string(l);
    throw ParseError(msg + ")", stop_lines.back());
  }
  try {
    lens.validate();
  } catch (const Error& e) {
    throw ParseError(e.what(), lineno);
  }
  return lens;
}

LensPrescription load_lens(const std::string& path,
                           const WavelengthGrid& grid) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open lens file: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_lens(buf.str(), grid);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.col());
  }
}

std::optional<Vec3> refract(const Vec3& direction, const Vec3& normal,
                            double n1, double n2) {
  Vec3 n = normal;
  double cos_i = -direction.dot(n);
  if (cos_i < 0) {  // normal pointed with the ray; flip it
    n = -n;
    cos_i = -cos_i;
  }
  const double eta = n1 / n2;
  const double sin2_t = eta * eta * (1.0 - cos_i * cos_i);
  if (sin2_t > 1.0) return std::nullopt;  // total internal reflection
  const double cos_t = std::sqrt(1.0 - sin2_t);
  return (eta * direction + (eta * cos_i - cos_t) * n).normalized();
}

std::optional<SurfaceHit> intersect_surface(const Vec3& origin,
                                            const Vec3& direction,
                                            const LensSurface& surface,
                                            double vertex_z, bool* converged) {
  if (converged) *converged = true;

  auto within_aperture = [&](const Vec3& p) {
    const double r2 = p.x() * p.x() + p.y() * p.y();
    return r2 <= surface.semi_aperture_mm * surface.semi_aperture_mm;
  };
  auto make_hit = [&](const Vec3& p) -> SurfaceHit {
    Vec3 grad = surface.sag_gradient(p.x(), p.y());
    Vec3 n(-grad.x(), -grad.y(), 1.0);  // gradient of z - sag(x,y)
    n.normalize();
    if (n.z() > 0) n = -n;  // orient toward the incoming (-z) side
    return SurfaceHit{p, n};
  };

  // Planar cases: stops and flat surfaces.
  const bool planar = surface.kind == SurfaceKind::aperture_stop ||
                      (surface.kind == SurfaceKind::spherical &&
                       surface.curvature == 0.0);
  if (planar) {
    if (std::abs(direction.z()) < 1e-15) return std::nullopt;
    const double t = (vertex_z - origin.z()) / direction.z();
    if (t <= 0) return std::nullopt;
    const Vec3 p = origin + t * direction;
    if (!within_aperture(p)) return std::nullopt;
    SurfaceHit hit;
    hit.point = p;
    hit.normal = Vec3(0, 0, -1);
    return hit;
  }

  // Spherical seed (exact solution for spherical surfaces).
  double t_seed = 0.0;
  {
    const double c = surface.kind == SurfaceKind::biconic
                         ? 0.5 * (surface.curvature + surface.curvature_y)
                         : surface.curvature;
    if (c == 0.0) {
      if (std::abs(direction.z()) < 1e-15) return std::nullopt;
      t_seed = (vertex_z - origin.z()) / direction.z();
    } else {
      const double radius = 1.0 / c;
      const Vec3 center(0, 0, vertex_z + radius);
      const Vec3 o = origin - center;
      const double a = direction.squaredNorm();
      const double b = 2.0 * o.dot(direction);
      const double cc = o.squaredNorm() - radius * radius;
      double t0, t1;
      if (!solve_quadratic(a, b, cc, t0, t1)) return std::nullopt;
      // Pick the root on the sheet containing the vertex: for a ray moving
      // toward +z this is the nearer root when the center lies downstream
      // (c > 0), the farther one otherwise.
      const bool closer = (direction.z() > 0) == (c > 0);
      t_seed = closer ? t0 : t1;
      if (t_seed <= 0) t_seed = closer ? t1 : t0;
      if (t_seed <= 0) return std::nullopt;
    }
  }

  if (surface.kind == SurfaceKind::spherical) {
    const Vec3 p = origin + t_seed * direction;
    if (!within_aperture(p)) return std::nullopt;
    return make_hit(p);
  }

  // Aspheric / biconic: Newton iteration on g(t) = z(t) - sag(x(t), y(t)).
  double t = t_seed;
  const double tol = 1e-9;
  bool ok = false;
  for (int iter = 0; iter < 20; ++iter) {
    const Vec3 p = origin + t * direction;
    const double g =
        p.z() - vertex_z - surface.sag(p.x(), p.y());
    if (std::abs(g) < tol) {
      ok = true;
      break;
    }
    const Vec3 grad = surface.sag_gradient(p.x(), p.y());
    const double dg =
        direction.z() - grad.x() * direction.x() - grad.y() * direction.y();
    if (std::abs(dg) < 1e-15) break;
    t -= g / dg;
    if (!std::isfinite(t)) break;
  }
  if (!ok) {
    if (converged) *converged = false;
    return std::nullopt;
  }
  if (t <= 0) return std::nullopt;
  const Vec3 p = origin + t * direction;
  if (!within_aperture(p)) return std::nullopt;
  return make_hit(p);
}

Vec3 hurb_perturb(const Vec3& direction, double distance_to_edge_mm,
                  double lambda_nm, Rng& rng) {
  const double d = std::max(distance_to_edge_mm, 1e-6);
  const double lambda_mm = lambda_nm * 1e-6;
  const double sigma = lambda_mm / (2.0 * std::numbers::pi * d);
  // Orthonormal tangent frame around the direction.
  const Vec3 helper =
      std::abs(direction.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 t1 = direction.cross(helper).normalized();
  const Vec3 t2 = direction.cross(t1).normalized();
  const double a1 = rng.normal(0.0, sigma);
  const double a2 = rng.normal(0.0, sigma);
  return (direction + a1 * t1 + a2 * t2).normalized();
}

std::optional<OpticalRay> trace_through_lens(
    const Eigen::Vector2d& film_point_mm,
    const Eigen::Vector2d& rear_sample_mm, double lambda_nm,
    const LensPrescription& lens, Rng& rng, TraceStats* stats,
    bool diffraction) {
  if (stats) ++stats->traced;
  OpticalRay ray;
  ray.origin = Vec3(film_point_mm.x(), film_point_mm.y(),
                    -lens.film_distance_mm);
  const Vec3 target(rear_sample_mm.x(), rear_sample_mm.y(), 0.0);
  Vec3 dir = target - ray.origin;
  if (dir.z() <= 0) return std::nullopt;
  ray.direction = dir.normalized();
  ray.wavelength_nm = lambda_nm;

  double n_current = 1.0;  // air between film and the rear surface
  double z = 0.0;
  for (std::size_t i = 0; i < lens.surfaces.size(); ++i) {
    const LensSurface& s = lens.surfaces[i];
    bool converged = true;
    auto hit = intersect_surface(ray.origin, ray.direction, s, z, &converged);
    if (!hit) {
      if (stats) {
        if (!converged)
          ++stats->vignetted_nonconverged;
        else
          ++stats->vignetted_aperture;
      }
      return std::nullopt;
    }
    if (s.kind == SurfaceKind::aperture_stop) {
      const double r = std::hypot(hit->point.x(), hit->point.y());
      if (diffraction) {
        const double d_edge = s.semi_aperture_mm - r;
        ray.direction = hurb_perturb(ray.direction, d_edge, lambda_nm, rng);
      }
      ray.origin = hit->point;
    } else {
      const double n_next = s.index_at(lambda_nm);
      auto refracted = refract(ray.direction, hit->normal, n_current, n_next);
      if (!refracted) {
        if (stats) ++stats->vignetted_tir;
        return std::nullopt;
      }
      ray.origin = hit->point;
      ray.direction = *refracted;
      n_current = n_next;
    }
    z += s.thickness_mm;
  }
  ray.weight = 1.0;
  return ray;
}

std::optional<OpticalRay> trace_from_scene(const Vec3& origin_mm,
                                           const Vec3& direction,
                                           double lambda_nm,
                                           const LensPrescription& lens) {
  OpticalRay ray;
  ray.origin = origin_mm;
  ray.direction = direction.normalized();
  ray.wavelength_nm = lambda_nm;
  if (ray.direction.z() >= 0)
    throw ValidationError("scene-side rays must travel toward -z");

  const int n = int(lens.surfaces.size());
  for (int i = n - 1; i >= 0; --i) {
    const LensSurface& s = lens.surfaces[i];
    auto hit = intersect_surface(ray.origin, ray.direction, s,
                                 lens.vertex_z(i));
    if (!hit) return std::nullopt;
    if (s.kind == SurfaceKind::aperture_stop) {
      ray.origin = hit->point;
    } else {
      // Crossing surface i from the scene side: the ray leaves s.index and
      // enters the medium behind surface i-1 (air once past the rear).
      const double n_from = s.index_at(lambda_nm);
      const double n_to =
          i > 0 ? lens.surfaces[i - 1].index_at(lambda_nm) : 1.0;
      auto refracted = refract(ray.direction, hit->normal, n_from, n_to);
      if (!refracted) return std::nullopt;
      ray.origin = hit->point;
      ray.direction = *refracted;
    }
  }
  return ray;
}

ParaxialResult paraxial_analysis(const LensPrescription& lens,
                                 double lambda_nm) {
  // Reduced-angle convention: state (y, w) with w = n * u. Scene -> film.
  double y = 1.0, w = 0.0;
  const int n = int(lens.surfaces.size());
  for (int i = n - 1; i >= 0; --i) {
    const LensSurface& s = lens.surfaces[i];
    if (s.kind != SurfaceKind::aperture_stop) {
      const double n_scene =
          s.index_at(lambda_nm);  // medium on the scene side of surface i
      const double n_film =
          i > 0 ? lens.surfaces[i - 1].index_at(lambda_nm) : 1.0;
      // Power is orientation independent: (n_scene - n_film) * c with c
      // signed for sag toward +z.
      const double c = s.kind == SurfaceKind::biconic
                           ? 0.5 * (s.curvature + s.curvature_y)
                           : s.curvature;
      const double power = (n_scene - n_film) * c;
      w -= y * power;
    }
    if (i > 0) {
      const double gap = lens.surfaces[i - 1].thickness_mm;
      const double n_gap = lens.surfaces[i - 1].index_at(lambda_nm);
      y += gap * (w / n_gap);
    }
  }
  ParaxialResult out;
  if (std::abs(w) < 1e-15) {
    out.efl_mm = std::numeric_limits<double>::infinity();
    out.bfd_mm = std::numeric_limits<double>::infinity();
  } else {
    out.efl_mm = -1.0 / w;        // initial height 1, exit reduced angle w
    out.bfd_mm = -y / w;          // crossing measured from the rear vertex
  }
  return out;
}

double traced_back_focus_mm(const LensPrescription& lens, double lambda_nm,
                            double ray_height_mm) {
  const Vec3 origin(ray_height_mm, 0.0, lens.front_vertex_z() + 10.0);
  auto ray = trace_from_scene(origin, Vec3(0, 0, -1), lambda_nm, lens);
  if (!ray)
    throw ValidationError("paraxial ray was vignetted; widen the apertures");
  if (std::abs(ray->direction.x()) < 1e-15)
    throw ValidationError("paraxial ray exits parallel; no finite focus");
  // Ray exits at origin_z (behind rear vertex at z=0), crosses x=0 at:
  const double t = -ray->origin.x() / ray->direction.x();
  const double z_cross = ray->origin.z() + t * ray->direction.z();
  return -z_cross;  // distance from rear vertex toward the film
}

}  // namespace camsim
