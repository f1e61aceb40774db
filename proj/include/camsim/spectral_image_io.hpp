#pragma once

#include <string>

#include "camsim/spectral.hpp"

namespace camsim {

/// Spectral-image container ("SPIM"): magic "SPIM", little-endian u32 header
/// length, UTF-8 JSON header, then raw float32 little-endian planes at the
/// header-declared byte offsets. Round trips are bit-exact; the integer
/// metadata planes are stored as float32 (ids stay well below 2^24).
/// Full byte layout in docs/formats.md.
void write_spectral_image(const SpectralImage& img, const std::string& path);
SpectralImage read_spectral_image(const std::string& path);

std::string serialize_spectral_image(const SpectralImage& img);
SpectralImage parse_spectral_image(const std::string& bytes);

}  // namespace camsim
