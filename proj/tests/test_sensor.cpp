#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "camsim/sensor.hpp"
#include "camsim/spectral_image_io.hpp"

using namespace camsim;

namespace {

// Single-band irradiance level that yields the requested mean electron
// count through a unit-QE clear pixel.
SpectralImage flat_field(double electrons, const SensorSpec& spec,
                         const WavelengthGrid& grid) {
  const double lambda_m = grid.center_nm(0) * 1e-9;
  const double level = electrons * kPlanckTimesC /
                       (lambda_m * grid.band_width_nm() *
                        spec.pixel_area_m2() * spec.exposure_s);
  SpectralImage img(spec.cols, spec.rows, grid);
  for (auto& v : img.data) v = float(level);
  return img;
}

SensorSpec clean_spec(int cols, int rows, const WavelengthGrid& grid) {
  SensorSpec s;
  s.cols = cols;
  s.rows = rows;
  s.pixel_pitch_um = 6.0;
  s.exposure_s = 0.01;
  s.qe = Spectrum::constant(grid, 1.0);
  s.cfa = CFAPattern::monochrome(grid);
  s.conversion_gain_uv_per_e = 100.0;
  s.voltage_swing_mv = 2000.0;
  s.dark_rate_mv_per_s = 0.0;
  s.read_noise_mv = 0.0;
  s.prnu_sigma = 0.0;
  s.dsnu_sigma_mv = 0.0;
  s.adc_bits = 16;
  s.noise_seed = 11;
  return s;
}

}  // namespace

TEST_CASE("cfa tile lookup") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  const CFAPattern bayer = CFAPattern::bayer_rggb(grid);
  CHECK(bayer.filter_at(0, 0) == 'R');
  CHECK(bayer.filter_at(1, 0) == 'G');
  CHECK(bayer.filter_at(0, 1) == 'G');
  CHECK(bayer.filter_at(1, 1) == 'B');
  CHECK(bayer.filter_at(2, 2) == 'R');

  const CFAPattern rccc = CFAPattern::rccc(grid);
  CHECK(rccc.filter_at(1, 0) == 'C');
  CHECK(rccc.transmittance_of('C').values[0] == doctest::Approx(1.0));

  const CFAPattern mono = CFAPattern::monochrome(grid);
  for (int x = 0; x < 4; ++x)
    for (int y = 0; y < 4; ++y) CHECK(mono.filter_at(x, y) == 'M');

  CHECK_THROWS_AS(CFAPattern::by_name("RQGB", grid), ValidationError);
}

TEST_CASE("pixel maps: zero sigmas give identity maps") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  SensorSpec spec = clean_spec(32, 32, grid);
  const PixelMaps maps = make_pixel_maps(spec);
  for (double g : maps.gain) CHECK(g == 1.0);
  for (double o : maps.offset_mv) CHECK(o == 0.0);
}

TEST_CASE("pixel maps: prnu stdev matches the configured sigma") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  SensorSpec spec = clean_spec(1000, 1000, grid);
  spec.prnu_sigma = 0.01;
  spec.dsnu_sigma_mv = 0.5;
  const PixelMaps maps = make_pixel_maps(spec);
  double mean = 0, var = 0;
  for (double g : maps.gain) mean += g;
  mean /= double(maps.gain.size());
  for (double g : maps.gain) var += (g - mean) * (g - mean);
  var /= double(maps.gain.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(0.001));
  CHECK(std::sqrt(var) == doctest::Approx(0.01).epsilon(0.03));
  // Deterministic in the seed.
  const PixelMaps again = make_pixel_maps(spec);
  CHECK(maps.gain == again.gain);
  CHECK(maps.offset_mv == again.offset_mv);
}

TEST_CASE("binning: identity, block mean, checkerboard") {
  const WavelengthGrid grid = WavelengthGrid::make(500, 600, 1);
  SensorSpec spec = clean_spec(2, 2, grid);
  spec.qe = Spectrum::constant(grid, 1.0);
  spec.cfa = CFAPattern::monochrome(grid);

  SpectralImage same(2, 2, grid);
  same.at(0, 0, 0) = 3.0f;
  const SpectralImage out1 = bin_irradiance(same, spec);
  CHECK(out1.at(0, 0, 0) == 3.0f);

  SensorSpec one = clean_spec(1, 1, grid);
  SpectralImage quad(2, 2, grid);
  quad.at(0, 0, 0) = 1.0f;
  quad.at(1, 0, 0) = 1.0f;
  quad.at(0, 1, 0) = 3.0f;
  quad.at(1, 1, 0) = 3.0f;
  CHECK(bin_irradiance(quad, one).at(0, 0, 0) == doctest::Approx(2.0));

  SensorSpec small = clean_spec(2, 2, grid);
  SpectralImage checker(8, 8, grid);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      checker.at(x, y, 0) = float((x + y) % 2);
  const SpectralImage binned = bin_irradiance(checker, small);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x)
      CHECK(binned.at(x, y, 0) == doctest::Approx(0.5));

  SpectralImage odd(3, 2, grid);
  CHECK_THROWS_AS(bin_irradiance(odd, small), ValidationError);
}

TEST_CASE("zero irradiance with all noise off digitizes to zero") {
  const WavelengthGrid grid = WavelengthGrid::make(500, 600, 1);
  const SensorSpec spec = clean_spec(8, 8, grid);
  SpectralImage dark(8, 8, grid);
  const SensorImage img = simulate(dark, spec);
  for (auto dn : img.dn) CHECK(dn == 0);
}

TEST_CASE("dark electrons follow rate * exposure / conversion gain") {
  const WavelengthGrid grid = WavelengthGrid::make(500, 600, 1);
  // Table-style numbers: 1.0 mV/s at 10 ms and 100 uV/e- -> 0.1 e-/pixel.
  SensorSpec spec = clean_spec(300, 300, grid);
  spec.dark_rate_mv_per_s = 1.0;
  const SpectralImage dark(300, 300, grid);
  SensorSimulationDetail detail;
  (void)simulate(dark, spec, 0, &detail);
  double mean = 0;
  for (double e : detail.electrons) mean += e;
  mean /= double(detail.electrons.size());
  CHECK(mean == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("flat field at 1e4 electrons is shot-noise limited at SNR 100") {
  const WavelengthGrid grid = WavelengthGrid::make(545, 555, 1);
  SensorSpec spec = clean_spec(128, 128, grid);  // 16384 pixels
  const SpectralImage field = flat_field(1e4, spec, grid);
  SensorSimulationDetail detail;
  (void)simulate(field, spec, 0, &detail);
  double mean = 0, var = 0;
  for (double e : detail.electrons) mean += e;
  mean /= double(detail.electrons.size());
  for (double e : detail.electrons) var += (e - mean) * (e - mean);
  var /= double(detail.electrons.size());
  CHECK(mean == doctest::Approx(1e4).epsilon(0.01));
  const double snr = mean / std::sqrt(var);
  CHECK(snr == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("monotonic response and exact saturation") {
  const WavelengthGrid grid = WavelengthGrid::make(545, 555, 1);
  SensorSpec spec = clean_spec(4, 4, grid);
  // Noise-free configuration: shot noise replaced by nothing is not an
  // option, so compare means over enough pixels instead of single draws.
  std::uint16_t prev = 0;
  for (double electrons : {100.0, 400.0, 1600.0, 6400.0}) {
    const SpectralImage field = flat_field(electrons, spec, grid);
    const SensorImage img = simulate(field, spec);
    double mean = 0;
    for (auto dn : img.dn) mean += dn;
    mean /= double(img.dn.size());
    CHECK(mean >= prev);
    prev = std::uint16_t(mean);
  }
  // Enough light that electrons * gain far exceeds the swing.
  const SpectralImage blast = flat_field(1e6, spec, grid);
  const SensorImage img = simulate(blast, spec);
  for (auto dn : img.dn) CHECK(dn == spec.max_dn());
}

TEST_CASE("simulate is deterministic in noise_seed and varies by frame") {
  const WavelengthGrid grid = WavelengthGrid::make(545, 555, 1);
  SensorSpec spec = clean_spec(16, 16, grid);
  spec.read_noise_mv = 1.0;
  spec.dark_rate_mv_per_s = 1.0;
  const SpectralImage field = flat_field(500.0, spec, grid);
  const SensorImage a = simulate(field, spec, 0);
  const SensorImage b = simulate(field, spec, 0);
  CHECK(a.dn == b.dn);
  const SensorImage c = simulate(field, spec, 1);
  CHECK(a.dn != c.dn);
}

TEST_CASE("grid mismatch between image and sensor spectra is an error") {
  const WavelengthGrid g1 = WavelengthGrid::make(500, 600, 1);
  const WavelengthGrid g2 = WavelengthGrid::make(400, 700, 4);
  const SensorSpec spec = clean_spec(4, 4, g1);
  SpectralImage img(4, 4, g2);
  CHECK_THROWS_AS(simulate(img, spec), GridMismatchError);
}

TEST_CASE("table sensor fixtures load and satisfy the geometry check") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  const SensorSpec a = load_sensor_spec("data/sensors/sensorA.json", grid);
  CHECK(a.pixel_pitch_um == 6.0);
  CHECK(a.cols == 752);
  CHECK(a.rows == 480);
  CHECK(a.cfa.filter_at(1, 0) == 'G');
  CHECK(a.dark_rate_mv_per_s == 1.0);
  CHECK(a.read_noise_mv == 1.0);
  const SensorSpec b = load_sensor_spec("data/sensors/sensorB.json", grid);
  CHECK(b.pixel_pitch_um == 3.0);
  CHECK(b.cols == 1504);
  CHECK(b.rows == 960);
  // 0.5% consistency: 752 * 6 um = 4.512 mm vs the 4.51 mm label.
  CHECK(std::abs(a.cols * a.pixel_pitch_um * 1e-3 - a.active_width_mm) <
        0.005 * a.active_width_mm);

  SensorSpec broken = a;
  broken.pixel_pitch_um = 5.0;  // now 3.76 mm vs the 4.51 mm label
  CHECK_THROWS_AS(broken.validate(), ValidationError);
}

TEST_CASE("sensor spec rejects out-of-range parameters") {
  const WavelengthGrid grid = WavelengthGrid::standard();
  SensorSpec s = clean_spec(4, 4, grid);
  s.adc_bits = 4;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = clean_spec(4, 4, grid);
  s.read_noise_mv = -1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = clean_spec(4, 4, grid);
  s.qe = Spectrum::constant(grid, 1.5);
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("pgm round trip preserves digital numbers") {
  const WavelengthGrid grid = WavelengthGrid::make(545, 555, 1);
  SensorSpec spec = clean_spec(12, 9, grid);
  spec.cfa = CFAPattern::bayer_rggb(grid);
  const SpectralImage field = flat_field(800.0, spec, grid);
  SensorImage img = simulate(field, spec);
  img.source_hash = "fixture";
  const std::string path =
      (std::filesystem::temp_directory_path() / "camsim_sensor.pgm").string();
  write_sensor_image(img, path);
  const SensorImage back = read_sensor_image(path);
  CHECK(back.dn == img.dn);
  CHECK(back.rows == img.rows);
  CHECK(back.cols == img.cols);
  CHECK(back.adc_bits == img.adc_bits);
  CHECK(back.source_hash == "fixture");
  CHECK(back.filter == img.filter);
}
