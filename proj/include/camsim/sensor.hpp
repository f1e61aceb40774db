#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "camsim/spectral.hpp"

namespace camsim {

/// 2x2 color-filter-array tile. Filter names: R, G, B, C (clear),
/// W (white), M (mono); clear/white/mono transmit 1.0 in every band.
struct CFAPattern {
  std::array<std::array<char, 2>, 2> tile = {{{'R', 'G'}, {'G', 'B'}}};
  /// Transmittance per filter name present in the tile.
  std::vector<std::pair<char, Spectrum>> transmittance;

  char filter_at(int x, int y) const { return tile[y % 2][x % 2]; }
  const Spectrum& transmittance_of(char filter) const;
  void validate() const;

  static CFAPattern bayer_rggb(const WavelengthGrid& grid);
  static CFAPattern rccc(const WavelengthGrid& grid);
  static CFAPattern rgbw(const WavelengthGrid& grid);
  static CFAPattern monochrome(const WavelengthGrid& grid);
  static CFAPattern by_name(const std::string& name,
                            const WavelengthGrid& grid);
};

struct SensorSpec {
  std::string name = "sensor";
  double pixel_pitch_um = 6.0;
  int rows = 480;
  int cols = 752;
  double exposure_s = 0.01;
  Spectrum qe;                      // quantum efficiency per band, [0,1]
  CFAPattern cfa;
  double conversion_gain_uv_per_e = 100.0;
  double voltage_swing_mv = 1000.0;
  double dark_rate_mv_per_s = 1.0;  // mean dark-signal accumulation
  double read_noise_mv = 1.0;       // stdev
  double prnu_sigma = 0.0;          // stdev of multiplicative gain
  double dsnu_sigma_mv = 0.0;       // stdev of additive offset
  int adc_bits = 12;
  double analog_gain = 1.0;
  std::uint64_t noise_seed = 0;
  /// Active imager size labels for the geometry consistency check
  /// (pitch * pixel count must match within 0.5%); 0 disables the check.
  double active_width_mm = 0.0;
  double active_height_mm = 0.0;

  double pixel_area_m2() const {
    const double m = pixel_pitch_um * 1e-6;
    return m * m;
  }
  int max_dn() const { return (1 << adc_bits) - 1; }
  void validate() const;
};

SensorSpec parse_sensor_spec(const std::string& json_text,
                             const WavelengthGrid& grid);
SensorSpec load_sensor_spec(const std::string& path,
                            const WavelengthGrid& grid);
std::string serialize_sensor_spec(const SensorSpec& spec);

struct SensorImage {
  int rows = 0;
  int cols = 0;
  int adc_bits = 12;
  std::vector<std::uint16_t> dn;       // row-major digital numbers
  std::vector<char> filter;            // per-pixel CFA filter name
  std::string spec_hash;               // provenance
  std::string source_hash;
  std::uint64_t noise_seed = 0;

  std::uint16_t at(int x, int y) const { return dn[std::size_t(y) * cols + x]; }
};

/// Fixed-pattern maps derived deterministically from noise_seed:
/// gain ~ Normal(1, prnu_sigma), offset ~ Normal(0, dsnu_sigma) per pixel.
struct PixelMaps {
  std::vector<double> gain;       // multiplicative, unitless
  std::vector<double> offset_mv;  // additive, millivolts
};
PixelMaps make_pixel_maps(const SensorSpec& spec);

/// Area-average an oversampled render onto the sensor grid. Image
/// dimensions must equal the sensor's or be an integer multiple of them.
SpectralImage bin_irradiance(const SpectralImage& img, const SensorSpec& spec);

/// Intermediate planes for analysis (photon-transfer tests, debugging).
struct SensorSimulationDetail {
  std::vector<double> electrons;   // after PRNU, before the voltage chain
  std::vector<double> voltage_mv;  // after saturation, DSNU, read noise
};

/// Full pixel chain, per pixel: mean photoelectrons through the pixel's
/// CFA filter -> Poisson shot noise -> Poisson dark electrons
/// (dark_rate*exposure/conversion_gain) -> PRNU gain -> conversion to
/// voltage with saturation at voltage_swing -> DSNU + read noise -> ADC.
/// frame_index perturbs the temporal noise streams only; the fixed-pattern
/// maps depend on noise_seed alone. Deterministic per
/// (noise_seed, frame_index).
SensorImage simulate(const SpectralImage& img, const SensorSpec& spec,
                     std::uint64_t frame_index = 0,
                     SensorSimulationDetail* detail = nullptr);

/// 16-bit binary PGM (P5) with a JSON provenance sidecar at path + ".json".
void write_sensor_image(const SensorImage& img, const std::string& path);
SensorImage read_sensor_image(const std::string& path);

}  // namespace camsim
