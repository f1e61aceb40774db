#include "camsim/spectral_image_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace camsim {

using Json = nlohmann::ordered_json;

namespace {

constexpr char kMagic[4] = {'S', 'P', 'I', 'M'};
constexpr int kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& s, std::size_t pos) {
  return std::uint32_t(std::uint8_t(s[pos])) |
         std::uint32_t(std::uint8_t(s[pos + 1])) << 8 |
         std::uint32_t(std::uint8_t(s[pos + 2])) << 16 |
         std::uint32_t(std::uint8_t(s[pos + 3])) << 24;
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(const std::string& s, std::size_t pos) {
  std::uint32_t bits = get_u32(s, pos);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

std::string serialize_spectral_image(const SpectralImage& img) {
  const std::size_t n_px = img.pixel_count();
  const std::size_t plane_bytes = n_px * 4;

  Json header;
  header["version"] = kVersion;
  header["width"] = img.width;
  header["height"] = img.height;
  Json centers = Json::array();
  for (int b = 0; b < img.grid.n_bands; ++b)
    centers.push_back(img.grid.center_nm(b));
  header["band_centers_nm"] = std::move(centers);
  header["units"] = "W.m^-2.nm^-1";
  Json planes = Json::array();
  std::size_t offset = 0;
  planes.push_back(Json{{"name", "irradiance"},
                        {"offset", offset},
                        {"count", img.grid.n_bands}});
  offset += plane_bytes * img.grid.n_bands;
  if (img.has_metadata) {
    for (const char* name : {"depth", "class_id", "instance_id"}) {
      planes.push_back(Json{{"name", name}, {"offset", offset}, {"count", 1}});
      offset += plane_bytes;
    }
  }
  header["planes"] = std::move(planes);
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(8 + header_text.size() + offset);
  out.append(kMagic, 4);
  put_u32(out, std::uint32_t(header_text.size()));
  out += header_text;
  for (float v : img.data) put_f32(out, v);
  if (img.has_metadata) {
    for (float v : img.depth) put_f32(out, v);
    for (std::int32_t v : img.class_id) put_f32(out, float(v));
    for (std::int32_t v : img.instance_id) put_f32(out, float(v));
  }
  return out;
}

SpectralImage parse_spectral_image(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError("not a SPIM container (bad magic)");
  const std::uint32_t header_len = get_u32(bytes, 4);
  if (bytes.size() < 8 + std::size_t(header_len))
    throw IoError("truncated header");
  Json header;
  try {
    header = Json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed SPIM header: ") + e.what());
  }
  if (!header.contains("version") || header["version"].get<int>() != kVersion)
    throw IoError("unknown SPIM version");

  const int width = header["width"].get<int>();
  const int height = header["height"].get<int>();
  if (width < 1 || height < 1) throw IoError("bad image dimensions in header");
  std::vector<double> centers =
      header["band_centers_nm"].get<std::vector<double>>();
  const WavelengthGrid grid = WavelengthGrid::from_centers(centers);

  const std::size_t payload_start = 8 + header_len;
  const std::size_t payload_size = bytes.size() - payload_start;
  const std::size_t n_px = std::size_t(width) * height;
  const std::size_t plane_bytes = n_px * 4;

  bool has_metadata = false;
  std::size_t irr_offset = 0;
  std::size_t depth_offset = 0, class_offset = 0, instance_offset = 0;
  std::size_t declared_total = 0;
  for (const auto& p : header["planes"]) {
    const std::string name = p["name"].get<std::string>();
    const std::size_t off = p["offset"].get<std::size_t>();
    const int count = p["count"].get<int>();
    declared_total += plane_bytes * count;
    if (name == "irradiance") {
      if (count != grid.n_bands)
        throw IoError("irradiance plane count does not match band centers");
      irr_offset = off;
    } else if (name == "depth") {
      depth_offset = off;
      has_metadata = true;
    } else if (name == "class_id") {
      class_offset = off;
    } else if (name == "instance_id") {
      instance_offset = off;
    } else {
      throw IoError("unknown plane '" + name + "' in SPIM header");
    }
  }
  if (payload_size < declared_total)
    throw IoError("truncated payload: header declares " +
                  std::to_string(declared_total) + " bytes, found " +
                  std::to_string(payload_size));
  if (payload_size > declared_total)
    throw IoError("payload larger than header declares");

  SpectralImage img(width, height, grid, has_metadata);
  const std::size_t irr0 = payload_start + irr_offset;
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = get_f32(bytes, irr0 + i * 4);
  if (has_metadata) {
    const std::size_t d0 = payload_start + depth_offset;
    const std::size_t c0 = payload_start + class_offset;
    const std::size_t i0 = payload_start + instance_offset;
    for (std::size_t i = 0; i < n_px; ++i) {
      img.depth[i] = get_f32(bytes, d0 + i * 4);
      img.class_id[i] = std::int32_t(get_f32(bytes, c0 + i * 4));
      img.instance_id[i] = std::int32_t(get_f32(bytes, i0 + i * 4));
    }
  }
  return img;
}

void write_spectral_image(const SpectralImage& img, const std::string& path) {
  const std::string bytes = serialize_spectral_image(img);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write spectral image: " + path);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw IoError("failed writing spectral image: " + path);
}

SpectralImage read_spectral_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open spectral image: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_spectral_image(buf.str());
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace camsim
