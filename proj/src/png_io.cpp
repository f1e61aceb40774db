#include "camsim/png_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include <zlib.h>

namespace camsim {

namespace {

void put_u32_be(std::string& out, std::uint32_t v) {
  out.push_back(char((v >> 24) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32_be(out, std::uint32_t(data.size()));
  const std::size_t crc_start = out.size();
  out.append(type, 4);
  out += data;
  const uLong crc =
      crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_start),
            uInt(4 + data.size()));
  put_u32_be(out, std::uint32_t(crc));
}

}  // namespace

void write_png_rgb8(
    const std::string& path, int width, int height,
    const std::vector<std::uint8_t>& rgb,
    const std::vector<std::pair<std::string, std::string>>& text_chunks) {
  if (rgb.size() != std::size_t(width) * height * 3)
    throw ValidationError("png payload size mismatch");

  // Scanlines with leading filter byte 0 (no filtering).
  std::vector<std::uint8_t> raw(std::size_t(height) * (1 + std::size_t(width) * 3));
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = raw.data() + std::size_t(y) * (1 + std::size_t(width) * 3);
    row[0] = 0;
    std::memcpy(row + 1, rgb.data() + std::size_t(y) * width * 3,
                std::size_t(width) * 3);
  }
  uLongf compressed_size = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> compressed(compressed_size);
  if (compress2(compressed.data(), &compressed_size, raw.data(),
                uLong(raw.size()), 6) != Z_OK)
    throw IoError("zlib compression failed");
  compressed.resize(compressed_size);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32_be(ihdr, std::uint32_t(width));
  put_u32_be(ihdr, std::uint32_t(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace
  put_chunk(out, "IHDR", ihdr);
  for (const auto& [key, value] : text_chunks) {
    std::string text = key;
    text.push_back('\0');
    text += value;
    put_chunk(out, "tEXt", text);
  }
  put_chunk(out, "IDAT",
            std::string(reinterpret_cast<const char*>(compressed.data()),
                        compressed.size()));
  put_chunk(out, "IEND", "");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write png: " + path);
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw IoError("failed writing png: " + path);
}

void write_preview_png(const SpectralImage& img, const std::string& path,
                       double tone_scale) {
  // Preview luminance proxy: band mean per pixel, used for auto exposure.
  if (tone_scale <= 0.0) {
    std::vector<float> mean(img.pixel_count(), 0.0f);
    for (int b = 0; b < img.grid.n_bands; ++b)
      for (std::size_t i = 0; i < img.pixel_count(); ++i)
        mean[i] += img.data[std::size_t(b) * img.pixel_count() + i];
    for (auto& v : mean) v /= float(img.grid.n_bands);
    std::vector<float> sorted = mean;
    std::sort(sorted.begin(), sorted.end());
    const float p99 = sorted[std::size_t(0.99 * (sorted.size() - 1))];
    tone_scale = p99 > 0 ? 1.0 / p99 : 1.0;
  }

  std::vector<std::uint8_t> rgb(img.pixel_count() * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      Spectrum s = img.pixel_spectrum(x, y);
      s.values *= tone_scale;
      const Rgb c = spectrum_to_preview_rgb(s);
      const std::size_t i = (std::size_t(y) * img.width + x) * 3;
      auto to8 = [](double v) {
        // Gamma 2.2 for display.
        return std::uint8_t(std::clamp(std::pow(v, 1.0 / 2.2), 0.0, 1.0) * 255.0 + 0.5);
      };
      rgb[i] = to8(c.r);
      rgb[i + 1] = to8(c.g);
      rgb[i + 2] = to8(c.b);
    }
  write_png_rgb8(path, img.width, img.height, rgb,
                 {{"tone_scale", std::to_string(tone_scale)}});
}

}  // namespace camsim
