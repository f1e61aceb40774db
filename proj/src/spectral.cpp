#include "camsim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace camsim {

WavelengthGrid WavelengthGrid::make(double lambda_min_nm,
                                    double lambda_max_nm, int n_bands) {
  if (!(lambda_min_nm < lambda_max_nm))
    throw ValidationError("wavelength grid requires lambda_min < lambda_max");
  if (n_bands < 1) throw ValidationError("wavelength grid requires n_bands >= 1");
  return WavelengthGrid{lambda_min_nm, lambda_max_nm, n_bands};
}

WavelengthGrid WavelengthGrid::from_centers(
    const std::vector<double>& centers_nm) {
  if (centers_nm.empty())
    throw ValidationError("band center list is empty");
  if (centers_nm.size() == 1) {
    // Single band: assume a nominal 10 nm width about the center.
    return WavelengthGrid{centers_nm[0] - 5.0, centers_nm[0] + 5.0, 1};
  }
  const double step = centers_nm[1] - centers_nm[0];
  if (step <= 0) throw ValidationError("band centers must be increasing");
  for (std::size_t i = 1; i < centers_nm.size(); ++i) {
    const double d = centers_nm[i] - centers_nm[i - 1];
    if (std::abs(d - step) > 1e-6 * step)
      throw ValidationError("band centers are not uniformly spaced");
  }
  const double lo = centers_nm.front() - step / 2;
  const double hi = centers_nm.back() + step / 2;
  return WavelengthGrid{lo, hi, int(centers_nm.size())};
}

Eigen::ArrayXd WavelengthGrid::centers_nm() const {
  Eigen::ArrayXd c(n_bands);
  for (int i = 0; i < n_bands; ++i) c[i] = center_nm(i);
  return c;
}

Spectrum::Spectrum(const WavelengthGrid& g, Eigen::ArrayXd v)
    : grid(g), values(std::move(v)) {
  if (int(values.size()) != grid.n_bands)
    throw ValidationError("spectrum value count does not match grid bands");
}

Spectrum Spectrum::constant(const WavelengthGrid& g, double value) {
  return Spectrum(g, Eigen::ArrayXd::Constant(g.n_bands, value));
}

double Spectrum::at_wavelength(double lambda_nm) const {
  const int n = grid.n_bands;
  if (n == 1) return values[0];
  const double first = grid.center_nm(0);
  const double step = grid.band_width_nm();
  double t = (lambda_nm - first) / step;
  if (t <= 0) return values[0];
  if (t >= n - 1) return values[n - 1];
  const int i = int(t);
  const double f = t - i;
  return values[i] * (1.0 - f) + values[i + 1] * f;
}

Spectrum sample_piecewise_linear(
    const std::vector<std::pair<double, double>>& table,
    const WavelengthGrid& grid) {
  if (table.empty()) throw ValidationError("empty spectral table");
  Eigen::ArrayXd out(grid.n_bands);
  for (int b = 0; b < grid.n_bands; ++b) {
    const double lambda = grid.center_nm(b);
    if (lambda <= table.front().first) {
      out[b] = table.front().second;
    } else if (lambda >= table.back().first) {
      out[b] = table.back().second;
    } else {
      auto hi = std::upper_bound(
          table.begin(), table.end(), lambda,
          [](double v, const std::pair<double, double>& p) { return v < p.first; });
      auto lo = hi - 1;
      const double f = (lambda - lo->first) / (hi->first - lo->first);
      out[b] = lo->second * (1.0 - f) + hi->second * f;
    }
  }
  return Spectrum(grid, std::move(out));
}

Spectrum resample(const Spectrum& s, const WavelengthGrid& target) {
  if (s.grid == target) return s;
  std::vector<std::pair<double, double>> table(s.grid.n_bands);
  for (int i = 0; i < s.grid.n_bands; ++i)
    table[i] = {s.grid.center_nm(i), s.values[i]};
  return sample_piecewise_linear(table, target);
}

Spectrum parse_spd(const std::string& text, const WavelengthGrid& grid) {
  std::vector<std::pair<double, double>> table;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double lambda, value;
    if (!(ls >> lambda)) continue;  // blank line
    if (!(ls >> value))
      throw ParseError("expected 'wavelength value' pair", lineno);
    if (!table.empty() && lambda <= table.back().first)
      throw ParseError("wavelengths must be strictly increasing", lineno);
    table.emplace_back(lambda, value);
  }
  if (table.empty()) throw ParseError("no spectral samples found", lineno);
  return sample_piecewise_linear(table, grid);
}

Spectrum load_spd(const std::string& path, const WavelengthGrid& grid) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open spectral file: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_spd(buf.str(), grid);
  } catch (const ParseError& e) {
    throw IoError(path + ": " + e.what());
  }
}

double mean_photoelectrons(const Spectrum& irradiance, double pixel_area_m2,
                           double exposure_s, const Spectrum& qe,
                           const Spectrum& cfa_transmittance) {
  if (!(irradiance.grid == qe.grid) ||
      !(irradiance.grid == cfa_transmittance.grid))
    throw GridMismatchError(
        "irradiance, QE and CFA spectra must share one wavelength grid; "
        "resample first");
  const double dl = irradiance.grid.band_width_nm();
  double electrons = 0.0;
  for (int b = 0; b < irradiance.grid.n_bands; ++b) {
    const double lambda_m = irradiance.grid.center_nm(b) * 1e-9;
    electrons += irradiance.values[b] * dl * pixel_area_m2 * exposure_s *
                 (lambda_m / kPlanckTimesC) * qe.values[b] *
                 cfa_transmittance.values[b];
  }
  return electrons;
}

namespace {

double gaussian(double x, double mu, double sigma) {
  const double t = (x - mu) / sigma;
  return std::exp(-0.5 * t * t);
}

// Fixed preview weight tables (Gaussian lobes, see docs/formats.md).
double preview_weight(int channel, double lambda_nm) {
  switch (channel) {
    case 0: return gaussian(lambda_nm, 610.0, 45.0);
    case 1: return gaussian(lambda_nm, 550.0, 40.0);
    default: return gaussian(lambda_nm, 465.0, 35.0);
  }
}

}  // namespace

Rgb spectrum_to_preview_rgb(const Spectrum& s) {
  double out[3];
  for (int c = 0; c < 3; ++c) {
    double num = 0.0, den = 0.0;
    for (int b = 0; b < s.grid.n_bands; ++b) {
      const double w = preview_weight(c, s.grid.center_nm(b));
      num += w * s.values[b];
      den += w;
    }
    out[c] = den > 0 ? num / den : 0.0;
    out[c] = std::clamp(out[c], 0.0, 1.0);
  }
  return Rgb{out[0], out[1], out[2]};
}

SpectralImage::SpectralImage(int w, int h, const WavelengthGrid& g,
                             bool metadata)
    : width(w), height(h), grid(g) {
  if (w < 1 || h < 1) throw ValidationError("image dimensions must be >= 1");
  data.assign(std::size_t(w) * h * g.n_bands, 0.0f);
  if (metadata) {
    has_metadata = true;
    depth.assign(pixel_count(), 0.0f);
    class_id.assign(pixel_count(), 0);
    instance_id.assign(pixel_count(), 0);
  }
}

Spectrum SpectralImage::pixel_spectrum(int x, int y) const {
  Eigen::ArrayXd v(grid.n_bands);
  for (int b = 0; b < grid.n_bands; ++b) v[b] = at(x, y, b);
  return Spectrum(grid, std::move(v));
}

void SpectralImage::validate() const {
  if (data.size() != pixel_count() * grid.n_bands)
    throw ValidationError("spectral image data size mismatch");
  for (float v : data)
    if (!std::isfinite(v) || v < 0.0f)
      throw ValidationError("spectral image contains negative or non-finite irradiance");
  if (has_metadata) {
    if (depth.size() != pixel_count() || class_id.size() != pixel_count() ||
        instance_id.size() != pixel_count())
      throw ValidationError("metadata plane size mismatch");
  }
}

}  // namespace camsim
