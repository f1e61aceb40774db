#include "camsim/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "camsim/rng.hpp"

namespace camsim {

using Json = nlohmann::ordered_json;

namespace {

// Stream tags keep the fixed-pattern and temporal noise draws independent.
const std::uint64_t kPrnuTag = hash_str("prnu");
const std::uint64_t kDsnuTag = hash_str("dsnu");
const std::uint64_t kTemporalTag = hash_str("temporal");

// Bundled smooth filter transmittances; data/cfa/*.spd mirrors these.
std::vector<std::pair<double, double>> builtin_filter_table(char f) {
  auto gauss_table = [](double mu, double sigma, double amp) {
    std::vector<std::pair<double, double>> t;
    for (double l = 380.0; l <= 740.0; l += 10.0) {
      const double x = (l - mu) / sigma;
      t.emplace_back(l, amp * std::exp(-0.5 * x * x));
    }
    return t;
  };
  switch (f) {
    case 'R': return gauss_table(610.0, 45.0, 0.92);
    case 'G': return gauss_table(540.0, 42.0, 0.92);
    case 'B': return gauss_table(465.0, 38.0, 0.92);
    default: return {{380.0, 1.0}, {740.0, 1.0}};  // clear/white/mono
  }
}

// Generic silicon-ish photodiode QE.
std::vector<std::pair<double, double>> builtin_qe_table() {
  return {{400, 0.30}, {450, 0.45}, {500, 0.55}, {550, 0.60},
          {600, 0.58}, {650, 0.52}, {700, 0.42}};
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x00000100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)h);
  return buf;
}

}  // namespace

const Spectrum& CFAPattern::transmittance_of(char filter) const {
  for (const auto& [name, spectrum] : transmittance)
    if (name == filter) return spectrum;
  throw ValidationError(std::string("CFA tile uses filter '") + filter +
                        "' with no transmittance entry");
}

void CFAPattern::validate() const {
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) {
      const Spectrum& t = transmittance_of(tile[y][x]);
      if ((t.values < 0.0).any() || (t.values > 1.0).any())
        throw ValidationError("CFA transmittance must lie in [0,1] per band");
    }
}

namespace {

CFAPattern make_pattern(const char (&tile)[5], const WavelengthGrid& grid) {
  CFAPattern p;
  p.tile = {{{tile[0], tile[1]}, {tile[2], tile[3]}}};
  std::string seen;
  for (int i = 0; i < 4; ++i) {
    const char f = tile[i];
    if (seen.find(f) == std::string::npos) {
      seen.push_back(f);
      p.transmittance.emplace_back(
          f, sample_piecewise_linear(builtin_filter_table(f), grid));
    }
  }
  return p;
}

}  // namespace

CFAPattern CFAPattern::bayer_rggb(const WavelengthGrid& grid) {
  return make_pattern("RGGB", grid);
}
CFAPattern CFAPattern::rccc(const WavelengthGrid& grid) {
  return make_pattern("RCCC", grid);
}
CFAPattern CFAPattern::rgbw(const WavelengthGrid& grid) {
  return make_pattern("RGBW", grid);
}
CFAPattern CFAPattern::monochrome(const WavelengthGrid& grid) {
  return make_pattern("MMMM", grid);
}

CFAPattern CFAPattern::by_name(const std::string& name,
                               const WavelengthGrid& grid) {
  if (name == "RGGB") return bayer_rggb(grid);
  if (name == "RCCC") return rccc(grid);
  if (name == "RGBW") return rgbw(grid);
  if (name == "MONO" || name == "MMMM") return monochrome(grid);
  if (name.size() == 4) {
    char tile[5] = {name[0], name[1], name[2], name[3], 0};
    for (char c : name)
      if (std::string("RGBCWM").find(c) == std::string::npos)
        throw ValidationError("unknown CFA filter '" + std::string(1, c) +
                              "' in pattern " + name);
    return make_pattern(tile, grid);
  }
  throw ValidationError("unknown CFA pattern '" + name + "'");
}

void SensorSpec::validate() const {
  if (rows < 1 || cols < 1)
    throw ValidationError("sensor dimensions must be >= 1");
  if (pixel_pitch_um <= 0)
    throw ValidationError("pixel pitch must be positive");
  if (exposure_s <= 0) throw ValidationError("exposure must be positive");
  if (conversion_gain_uv_per_e <= 0 || voltage_swing_mv <= 0 ||
      analog_gain <= 0)
    throw ValidationError("gains and voltage swing must be positive");
  if (dark_rate_mv_per_s < 0 || read_noise_mv < 0 || prnu_sigma < 0 ||
      dsnu_sigma_mv < 0)
    throw ValidationError("noise parameters must be >= 0");
  if (adc_bits < 8 || adc_bits > 16)
    throw ValidationError("adc_bits must lie in [8, 16]");
  if ((qe.values < 0.0).any() || (qe.values > 1.0).any())
    throw ValidationError("QE must lie in [0,1] per band");
  cfa.validate();
  // Active-size consistency, Table-1 style, within 0.5%.
  auto check = [&](double label_mm, int count, const char* axis) {
    if (label_mm <= 0) return;
    const double derived = pixel_pitch_um * 1e-3 * count;
    if (std::abs(derived - label_mm) > 0.005 * label_mm)
      throw ValidationError(std::string("active imager ") + axis + " (" +
                            std::to_string(label_mm) +
                            " mm) disagrees with pitch x pixels (" +
                            std::to_string(derived) + " mm) by more than 0.5%");
  };
  check(active_width_mm, cols, "width");
  check(active_height_mm, rows, "height");
}

namespace {

Spectrum spectrum_from_json(const Json& j, const WavelengthGrid& grid,
                            const std::string& base_dir,
                            std::vector<std::pair<double, double>> builtin) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "builtin") return sample_piecewise_linear(builtin, grid);
    namespace fs = std::filesystem;
    fs::path p(s);
    if (!p.is_absolute() && !base_dir.empty()) p = fs::path(base_dir) / p;
    return load_spd(p.string(), grid);
  }
  if (j.is_array()) {
    std::vector<std::pair<double, double>> table;
    for (const auto& pair : j)
      table.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    return sample_piecewise_linear(table, grid);
  }
  throw ValidationError("spectrum field must be \"builtin\", a path, or "
                        "[[wavelength, value], ...]");
}

SensorSpec parse_sensor_spec_impl(const std::string& text,
                                  const WavelengthGrid& grid,
                                  const std::string& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid sensor JSON: ") + e.what(), 0);
  }
  SensorSpec s;
  try {
  if (j.contains("name")) s.name = j["name"].get<std::string>();
  s.pixel_pitch_um = j.at("pixel_pitch_um").get<double>();
  s.rows = j.at("rows").get<int>();
  s.cols = j.at("cols").get<int>();
  s.exposure_s = j.at("exposure_s").get<double>();
  if (j.contains("qe"))
    s.qe = spectrum_from_json(j["qe"], grid, base_dir, builtin_qe_table());
  else
    s.qe = sample_piecewise_linear(builtin_qe_table(), grid);

  const Json& cfa = j.at("cfa");
  s.cfa = CFAPattern::by_name(cfa.at("pattern").get<std::string>(), grid);
  if (cfa.contains("filters")) {
    for (auto& [name, value] : cfa.at("filters").items()) {
      if (name.size() != 1)
        throw ValidationError("CFA filter keys must be single letters");
      for (auto& entry : s.cfa.transmittance)
        if (entry.first == name[0])
          entry.second = spectrum_from_json(value, grid, base_dir,
                                            builtin_filter_table(name[0]));
    }
  }
  if (j.contains("conversion_gain_uv_per_e"))
    s.conversion_gain_uv_per_e = j["conversion_gain_uv_per_e"].get<double>();
  if (j.contains("voltage_swing_mv"))
    s.voltage_swing_mv = j["voltage_swing_mv"].get<double>();
  s.dark_rate_mv_per_s = j.at("dark_rate_mv_per_s").get<double>();
  s.read_noise_mv = j.at("read_noise_mv").get<double>();
  if (j.contains("prnu_sigma")) s.prnu_sigma = j["prnu_sigma"].get<double>();
  if (j.contains("dsnu_sigma_mv"))
    s.dsnu_sigma_mv = j["dsnu_sigma_mv"].get<double>();
  s.adc_bits = j.at("adc_bits").get<int>();
  if (j.contains("analog_gain")) s.analog_gain = j["analog_gain"].get<double>();
  if (j.contains("noise_seed"))
    s.noise_seed = j["noise_seed"].get<std::uint64_t>();
  if (j.contains("active_width_mm"))
    s.active_width_mm = j["active_width_mm"].get<double>();
  if (j.contains("active_height_mm"))
    s.active_height_mm = j["active_height_mm"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("sensor spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace

SensorSpec parse_sensor_spec(const std::string& json_text,
                             const WavelengthGrid& grid) {
  return parse_sensor_spec_impl(json_text, grid, "");
}

SensorSpec load_sensor_spec(const std::string& path,
                            const WavelengthGrid& grid) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open sensor spec: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_sensor_spec_impl(
      buf.str(), grid, std::filesystem::path(path).parent_path().string());
}

std::string serialize_sensor_spec(const SensorSpec& s) {
  Json j;
  j["name"] = s.name;
  j["pixel_pitch_um"] = s.pixel_pitch_um;
  j["rows"] = s.rows;
  j["cols"] = s.cols;
  j["exposure_s"] = s.exposure_s;
  Json qe = Json::array();
  for (int b = 0; b < s.qe.grid.n_bands; ++b)
    qe.push_back(Json::array({s.qe.grid.center_nm(b), s.qe.values[b]}));
  j["qe"] = std::move(qe);
  std::string pattern;
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) pattern.push_back(s.cfa.tile[y][x]);
  j["cfa"] = Json{{"pattern", pattern}};
  j["conversion_gain_uv_per_e"] = s.conversion_gain_uv_per_e;
  j["voltage_swing_mv"] = s.voltage_swing_mv;
  j["dark_rate_mv_per_s"] = s.dark_rate_mv_per_s;
  j["read_noise_mv"] = s.read_noise_mv;
  j["prnu_sigma"] = s.prnu_sigma;
  j["dsnu_sigma_mv"] = s.dsnu_sigma_mv;
  j["adc_bits"] = s.adc_bits;
  j["analog_gain"] = s.analog_gain;
  j["noise_seed"] = s.noise_seed;
  if (s.active_width_mm > 0) j["active_width_mm"] = s.active_width_mm;
  if (s.active_height_mm > 0) j["active_height_mm"] = s.active_height_mm;
  return j.dump(2) + "\n";
}

PixelMaps make_pixel_maps(const SensorSpec& spec) {
  const std::size_t n = std::size_t(spec.rows) * spec.cols;
  PixelMaps maps;
  maps.gain.resize(n);
  maps.offset_mv.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.prnu_sigma > 0) {
      Rng rng = make_stream(spec.noise_seed, kPrnuTag, i);
      maps.gain[i] = rng.normal(1.0, spec.prnu_sigma);
    } else {
      maps.gain[i] = 1.0;
    }
    if (spec.dsnu_sigma_mv > 0) {
      Rng rng = make_stream(spec.noise_seed, kDsnuTag, i);
      maps.offset_mv[i] = rng.normal(0.0, spec.dsnu_sigma_mv);
    } else {
      maps.offset_mv[i] = 0.0;
    }
  }
  return maps;
}

SpectralImage bin_irradiance(const SpectralImage& img, const SensorSpec& spec) {
  if (img.width == spec.cols && img.height == spec.rows) return img;
  if (img.width % spec.cols != 0 || img.height % spec.rows != 0)
    throw ValidationError(
        "render resolution must equal the sensor grid or be an integer "
        "multiple of it (" +
        std::to_string(img.width) + "x" + std::to_string(img.height) + " vs " +
        std::to_string(spec.cols) + "x" + std::to_string(spec.rows) + ")");
  const int fx = img.width / spec.cols;
  const int fy = img.height / spec.rows;
  SpectralImage out(spec.cols, spec.rows, img.grid);
  const double inv = 1.0 / (double(fx) * fy);
  for (int b = 0; b < img.grid.n_bands; ++b)
    for (int y = 0; y < spec.rows; ++y)
      for (int x = 0; x < spec.cols; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy < fy; ++dy)
          for (int dx = 0; dx < fx; ++dx)
            acc += img.at(x * fx + dx, y * fy + dy, b);
        out.at(x, y, b) = float(acc * inv);
      }
  return out;
}

SensorImage simulate(const SpectralImage& img, const SensorSpec& spec,
                     std::uint64_t frame_index,
                     SensorSimulationDetail* detail) {
  spec.validate();
  if (img.width != spec.cols || img.height != spec.rows)
    throw ValidationError("image is not on the sensor grid; bin first");
  if (!(img.grid == spec.qe.grid))
    throw GridMismatchError(
        "image and sensor QE/CFA spectra live on different wavelength "
        "grids; resample the spec or re-render");

  const std::size_t n = img.pixel_count();
  const PixelMaps maps = make_pixel_maps(spec);
  const double conv_mv_per_e = spec.conversion_gain_uv_per_e * 1e-3;
  const double dark_mean_e =
      spec.dark_rate_mv_per_s * spec.exposure_s / conv_mv_per_e;

  SensorImage out;
  out.rows = spec.rows;
  out.cols = spec.cols;
  out.adc_bits = spec.adc_bits;
  out.dn.resize(n);
  out.filter.resize(n);
  out.noise_seed = spec.noise_seed;
  out.spec_hash = fnv1a_hex(serialize_sensor_spec(spec));
  if (detail) {
    detail->electrons.assign(n, 0.0);
    detail->voltage_mv.assign(n, 0.0);
  }

  const int max_dn = spec.max_dn();
  for (int y = 0; y < spec.rows; ++y) {
    for (int x = 0; x < spec.cols; ++x) {
      const std::size_t i = std::size_t(y) * spec.cols + x;
      const char filter = spec.cfa.filter_at(x, y);
      out.filter[i] = filter;

      const double mean_e = mean_photoelectrons(
          img.pixel_spectrum(x, y), spec.pixel_area_m2(), spec.exposure_s,
          spec.qe, spec.cfa.transmittance_of(filter));

      Rng rng = make_stream(spec.noise_seed, kTemporalTag,
                            hash_mix(frame_index, i));
      double electrons = double(rng.poisson(mean_e));
      if (dark_mean_e > 0) electrons += double(rng.poisson(dark_mean_e));
      electrons *= maps.gain[i];
      if (detail) detail->electrons[i] = electrons;

      double voltage =
          electrons * conv_mv_per_e * spec.analog_gain;
      voltage = std::min(voltage, spec.voltage_swing_mv);  // well saturation
      voltage += maps.offset_mv[i];
      if (spec.read_noise_mv > 0)
        voltage += rng.normal(0.0, spec.read_noise_mv);
      if (detail) detail->voltage_mv[i] = voltage;

      const double dn =
          std::round(voltage / spec.voltage_swing_mv * max_dn);
      out.dn[i] = std::uint16_t(std::clamp(dn, 0.0, double(max_dn)));
    }
  }
  return out;
}

void write_sensor_image(const SensorImage& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write sensor image: " + path);
  const int maxval = (1 << img.adc_bits) - 1;
  f << "P5\n" << img.cols << " " << img.rows << "\n" << maxval << "\n";
  // PGM stores 2-byte samples most-significant byte first.
  for (std::uint16_t v : img.dn) {
    f.put(char(v >> 8));
    f.put(char(v & 0xff));
  }
  if (!f) throw IoError("failed writing sensor image: " + path);

  Json side;
  side["rows"] = img.rows;
  side["cols"] = img.cols;
  side["adc_bits"] = img.adc_bits;
  std::string tile;
  if (!img.filter.empty()) {
    tile.push_back(img.filter[0]);
    tile.push_back(img.filter.size() > 1 ? img.filter[1] : img.filter[0]);
    const std::size_t second_row = std::size_t(img.cols);
    tile.push_back(img.filter.size() > second_row ? img.filter[second_row]
                                                  : img.filter[0]);
    tile.push_back(img.filter.size() > second_row + 1
                       ? img.filter[second_row + 1]
                       : img.filter[0]);
  }
  side["cfa_pattern"] = tile;
  side["spec_hash"] = img.spec_hash;
  side["source_hash"] = img.source_hash;
  side["noise_seed"] = img.noise_seed;
  std::ofstream sf(path + ".json", std::ios::binary | std::ios::trunc);
  if (!sf) throw IoError("cannot write sidecar: " + path + ".json");
  sf << side.dump(2) << "\n";
}

SensorImage read_sensor_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open sensor image: " + path);
  std::string magic;
  int cols = 0, rows = 0, maxval = 0;
  f >> magic >> cols >> rows >> maxval;
  if (magic != "P5" || cols < 1 || rows < 1 || maxval < 256)
    throw IoError("not a 16-bit P5 PGM: " + path);
  f.get();  // single whitespace after maxval
  SensorImage img;
  img.rows = rows;
  img.cols = cols;
  img.adc_bits = int(std::round(std::log2(maxval + 1)));
  img.dn.resize(std::size_t(rows) * cols);
  for (auto& v : img.dn) {
    const int hi = f.get();
    const int lo = f.get();
    if (hi < 0 || lo < 0) throw IoError("truncated PGM payload: " + path);
    v = std::uint16_t((hi << 8) | lo);
  }

  std::ifstream sf(path + ".json", std::ios::binary);
  if (sf) {
    Json side = Json::parse(sf, nullptr, false);
    if (!side.is_discarded()) {
      if (side.contains("spec_hash"))
        img.spec_hash = side["spec_hash"].get<std::string>();
      if (side.contains("source_hash"))
        img.source_hash = side["source_hash"].get<std::string>();
      if (side.contains("noise_seed"))
        img.noise_seed = side["noise_seed"].get<std::uint64_t>();
      if (side.contains("cfa_pattern")) {
        const std::string tile = side["cfa_pattern"].get<std::string>();
        if (tile.size() == 4) {
          img.filter.resize(img.dn.size());
          for (int y = 0; y < rows; ++y)
            for (int x = 0; x < cols; ++x)
              img.filter[std::size_t(y) * cols + x] =
                  tile[(y % 2) * 2 + (x % 2)];
        }
      }
    }
  }
  return img;
}

}  // namespace camsim
