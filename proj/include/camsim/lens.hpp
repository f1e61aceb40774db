#pragma once

#include <optional>
#include <string>
#include <vector>

#include "camsim/rng.hpp"
#include "camsim/spectral.hpp"
#include "camsim/transform.hpp"

namespace camsim {

// Lens frame: optical axis along +z, millimeters. The film plane sits at
// z = -film_distance_mm; surfaces are listed rear (film side) to front
// (scene side) with vertex z accumulating by each surface's thickness.
// Positive curvature bows the surface toward the film (center of curvature
// on the scene side), matching the usual sign convention for a trace that
// runs film -> scene.

enum class SurfaceKind { spherical, aspheric, biconic, aperture_stop };

struct LensSurface {
  SurfaceKind kind = SurfaceKind::spherical;
  double curvature = 0.0;      // 1/mm; cx for biconic
  double curvature_y = 0.0;    // cy, biconic only
  double conic = 0.0;          // k; kx for biconic
  double conic_y = 0.0;        // ky, biconic only
  double a4 = 0.0, a6 = 0.0, a8 = 0.0;  // even asphere terms, mm units
  double thickness_mm = 0.0;   // axial gap to the next surface
  double semi_aperture_mm = 1.0;
  /// Refractive index of the medium behind this surface (scene side),
  /// realized on the session wavelength grid. Air for stops.
  Spectrum index;

  double sag(double x, double y) const;
  Vec3 sag_gradient(double x, double y) const;  // (ds/dx, ds/dy, 0)
  double index_at(double lambda_nm) const { return index.at_wavelength(lambda_nm); }
};

struct LensPrescription {
  std::vector<LensSurface> surfaces;  // rear (film side) first
  double film_distance_mm = 0.0;
  double focal_length_label_mm = 0.0;  // informational only

  int stop_index() const;  // index of the single aperture stop
  double vertex_z(int surface) const;
  double front_vertex_z() const { return vertex_z(int(surfaces.size())); }
  double rear_semi_aperture_mm() const { return surfaces.front().semi_aperture_mm; }

  void validate() const;
};

/// Parse the line-oriented lens format (docs/formats.md): header keys
/// film_distance_mm / focal_length_mm, then one surface per line:
///   sphere  <c> <thickness> <semiap> <medium...>
///   asphere <c> <k> <a4> <a6> <a8> <thickness> <semiap> <medium...>
///   biconic <cx> <cy> <kx> <ky> <thickness> <semiap> <medium...>
///   stop    <thickness> <semiap>
/// with medium either "air" or "cauchy A B" (n = A + B/lambda_um^2).
LensPrescription parse_lens(const std::string& text,
                            const WavelengthGrid& grid = WavelengthGrid::standard());
LensPrescription load_lens(const std::string& path,
                           const WavelengthGrid& grid = WavelengthGrid::standard());

struct OpticalRay {
  Vec3 origin = Vec3::Zero();     // mm, lens frame
  Vec3 direction = Vec3::UnitZ(); // unit
  double wavelength_nm = 550.0;
  double weight = 1.0;            // 0 = vignetted
  double time_s = 0.0;
};

/// Vector Snell refraction. `normal` may face either side of the interface;
/// n1 is the index on the incident side, n2 on the transmitted side.
/// Returns nullopt on total internal reflection.
std::optional<Vec3> refract(const Vec3& direction, const Vec3& normal,
                            double n1, double n2);

struct SurfaceHit {
  Vec3 point;   // lens frame, mm
  Vec3 normal;  // unit, oriented toward -z (the incoming side)
};

/// Ray/surface intersection in the lens frame with the surface vertex at
/// vertex_z. Spherical surfaces solve the quadratic; aspheric and biconic
/// run Newton iteration seeded from the spherical solution (tol 1e-9 mm,
/// max 20 iterations). Misses, rays beyond the semi-aperture and
/// non-convergence all return nullopt (callers vignette).
std::optional<SurfaceHit> intersect_surface(const Vec3& origin,
                                            const Vec3& direction,
                                            const LensSurface& surface,
                                            double vertex_z,
                                            bool* converged = nullptr);

/// Diffraction at an aperture edge: tilt the direction by Gaussian angles
/// in two orthogonal tangent axes, each with sigma = lambda/(2*pi*d),
/// then renormalize. d clamps at 1e-6 mm.
Vec3 hurb_perturb(const Vec3& direction, double distance_to_edge_mm,
                  double lambda_nm, Rng& rng);

struct TraceStats {
  std::int64_t traced = 0;
  std::int64_t vignetted_aperture = 0;
  std::int64_t vignetted_tir = 0;
  std::int64_t vignetted_nonconverged = 0;
};

/// Trace one ray from a film point through the whole prescription,
/// rear to front. film_point is (x, y) on the film plane; rear_sample is
/// the (x, y) target on the rear vertex plane. Applies the diffraction
/// perturbation exactly once, at the aperture stop. Returns the exiting
/// scene-side ray (weight 1) or nullopt when vignetted; Fresnel losses are
/// not modeled. Pass diffraction=false for deterministic central rays.
std::optional<OpticalRay> trace_through_lens(
    const Eigen::Vector2d& film_point_mm, const Eigen::Vector2d& rear_sample_mm,
    double lambda_nm, const LensPrescription& lens, Rng& rng,
    TraceStats* stats = nullptr, bool diffraction = true);

/// Trace scene -> film: a ray entering the front of the lens travelling
/// toward -z. Used for focus measurements and spot diagrams.
std::optional<OpticalRay> trace_from_scene(const Vec3& origin_mm,
                                           const Vec3& direction,
                                           double lambda_nm,
                                           const LensPrescription& lens);

struct ParaxialResult {
  double efl_mm = 0.0;  // effective focal length
  double bfd_mm = 0.0;  // rear vertex to the axial focus of parallel scene rays
};

/// 2x2 ray-transfer-matrix analysis at one wavelength.
ParaxialResult paraxial_analysis(const LensPrescription& lens,
                                 double lambda_nm);

/// Focus position measured by actually tracing a near-axis parallel ray
/// from the scene side: returns the distance from the rear vertex (toward
/// the film) at which the ray crosses the axis.
double traced_back_focus_mm(const LensPrescription& lens, double lambda_nm,
                            double ray_height_mm = 0.05);

}  // namespace camsim
