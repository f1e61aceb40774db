#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "camsim/error.hpp"

namespace camsim {

/// Uniform wavelength sampling over [lambda_min, lambda_max] nm. Band
/// centers sit at the midpoints of the n_bands equal sub-intervals.
struct WavelengthGrid {
  double lambda_min_nm = 395.0;
  double lambda_max_nm = 705.0;
  int n_bands = 31;

  static WavelengthGrid make(double lambda_min_nm, double lambda_max_nm,
                             int n_bands);

  /// Session default: 31 bands at 10 nm spacing with centers 400..700 nm.
  static WavelengthGrid standard() { return WavelengthGrid{}; }

  /// Reconstruct a grid from uniformly spaced band centers (container I/O).
  static WavelengthGrid from_centers(const std::vector<double>& centers_nm);

  double band_width_nm() const {
    return (lambda_max_nm - lambda_min_nm) / n_bands;
  }
  double center_nm(int band) const {
    return lambda_min_nm + (band + 0.5) * band_width_nm();
  }
  Eigen::ArrayXd centers_nm() const;

  bool operator==(const WavelengthGrid& o) const = default;
};

/// Sampled spectral distribution on a wavelength grid. Units depend on
/// context: W·m⁻²·nm⁻¹ for irradiance, W·m⁻²·sr⁻¹·nm⁻¹ for radiance,
/// dimensionless for reflectance / QE / transmittance.
struct Spectrum {
  WavelengthGrid grid;
  Eigen::ArrayXd values;

  Spectrum() : values(Eigen::ArrayXd::Zero(grid.n_bands)) {}
  Spectrum(const WavelengthGrid& g, Eigen::ArrayXd v);

  static Spectrum constant(const WavelengthGrid& g, double value);
  static Spectrum zero(const WavelengthGrid& g) { return constant(g, 0.0); }

  double operator[](int band) const { return values[band]; }

  /// Piecewise-linear value at an arbitrary wavelength, clamped to the
  /// nearest band-center value outside the sampled range.
  double at_wavelength(double lambda_nm) const;
};

/// Evaluate a piecewise-linear (wavelength, value) table on a grid, clamping
/// to the endpoint values outside the table's range. The table must be
/// sorted by wavelength and non-empty.
Spectrum sample_piecewise_linear(
    const std::vector<std::pair<double, double>>& table,
    const WavelengthGrid& grid);

/// Piecewise-linear resampling of s onto the target grid; values outside
/// s's sampled range clamp to the nearest endpoint value.
Spectrum resample(const Spectrum& s, const WavelengthGrid& target);

/// Parse the .spd text format: '#' comments, one "wavelength_nm value" pair
/// per line, wavelengths strictly increasing.
Spectrum parse_spd(const std::string& text, const WavelengthGrid& grid);
Spectrum load_spd(const std::string& path, const WavelengthGrid& grid);

/// Mean photoelectron count collected by one pixel:
///   sum_bands E(λ)·Δλ·area·exposure·(λ/(h·c))·qe(λ)·t_cfa(λ)
/// with λ converted to meters inside the photon-energy term and
/// h·c = 1.98645e-25 J·m. All three spectra must share one grid.
double mean_photoelectrons(const Spectrum& irradiance, double pixel_area_m2,
                           double exposure_s, const Spectrum& qe,
                           const Spectrum& cfa_transmittance);

constexpr double kPlanckTimesC = 1.98645e-25;  // J·m

struct Rgb {
  double r = 0, g = 0, b = 0;
};

/// Non-colorimetric preview mapping: inner products with three fixed
/// Gaussian weight tables (documented in docs/formats.md), each normalized
/// so an equal-energy spectrum maps to neutral gray, clipped to [0,1].
/// Preview output only; never used in the sensor pipeline.
Rgb spectrum_to_preview_rgb(const Spectrum& s);

/// Sensor-plane spectral irradiance with optional pixel-level metadata.
/// data holds n_bands planes of height×width floats, row-major within each
/// plane (plane b, row y, col x -> data[(b*height + y)*width + x]).
struct SpectralImage {
  int width = 0;
  int height = 0;
  WavelengthGrid grid;
  std::vector<float> data;

  bool has_metadata = false;
  std::vector<float> depth;             // meters; 0 flags a miss
  std::vector<std::int32_t> class_id;   // 0 = none
  std::vector<std::int32_t> instance_id;

  SpectralImage() = default;
  SpectralImage(int w, int h, const WavelengthGrid& g, bool metadata = false);

  std::size_t pixel_count() const { return std::size_t(width) * height; }
  std::size_t plane_index(int x, int y) const {
    return std::size_t(y) * width + x;
  }
  float& at(int x, int y, int band) {
    return data[(std::size_t(band) * height + y) * width + x];
  }
  float at(int x, int y, int band) const {
    return data[(std::size_t(band) * height + y) * width + x];
  }

  Spectrum pixel_spectrum(int x, int y) const;

  /// All irradiance values finite and >= 0; metadata planes sized to match.
  void validate() const;
};

}  // namespace camsim
