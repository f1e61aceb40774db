#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camsim/spectral.hpp"

namespace camsim {

/// Write an 8-bit RGB PNG. Pixels are row-major RGBRGB... triples.
void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb,
                    const std::vector<std::pair<std::string, std::string>>&
                        text_chunks = {});

/// Tone-mapped preview of a spectral image via the fixed preview weight
/// tables. tone_scale <= 0 auto-exposes to the 99th percentile; the scale
/// actually used is recorded in the PNG "tone_scale" text chunk.
void write_preview_png(const SpectralImage& img, const std::string& path,
                       double tone_scale = 0.0);

}  // namespace camsim
