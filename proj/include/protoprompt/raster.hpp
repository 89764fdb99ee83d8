#pragma once

// PNG input/output. Images become floats in [0, 1] scaled by the stored bit
// depth; masks are thresholded at half scale (128 for 8-bit files); label
// rasters keep their raw integer values.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "protoprompt/types.hpp"

namespace protoprompt {

struct RawRaster {
  int rows = 0;
  int cols = 0;
  int channels = 0;   // 1 (gray) or 3 (RGB); alpha is dropped, palettes expanded
  int bit_depth = 8;  // 8 or 16
  std::vector<std::uint16_t> samples;

  Shape2D shape() const { return {rows, cols}; }
  double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

RawRaster read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RawRaster& raster);

Image2D read_image_png(const std::filesystem::path& path);
BinaryMask read_mask_png(const std::filesystem::path& path);

// 8-bit output; values are clamped to [0, 1] and rounded.
void write_image_png(const std::filesystem::path& path, const Image2D& image);
// {0, 255} single-channel raster.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace protoprompt
