#pragma once

// Graph-based image segmentation (Felzenszwalb-Huttenlocher) used to produce
// pseudo-labels for self-supervised episodes.

#include <cstdint>
#include <vector>

#include "protoprompt/types.hpp"

namespace protoprompt {

struct SuperpixelParams {
  // Merge scale in 8-bit intensity units; it is divided by 255 because images
  // hold intensities in [0, 1].
  double scale = 100.0;
  double sigma = 0.8;  // Gaussian pre-smoothing; 0 disables it
  int min_size = 400;
};

struct SuperpixelLabelMap {
  int rows = 0;
  int cols = 0;
  std::vector<std::int32_t> labels;  // row-major, values in [0, num_segments)
  int num_segments = 0;

  Shape2D shape() const { return {rows, cols}; }
  std::int32_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * cols + c]; }
  BinaryMask segment_mask(int segment) const;
};

// Labels are numbered by first appearance in scan order.
SuperpixelLabelMap generate_superpixels(const Image2D& image, const SuperpixelParams& params);

// Separable Gaussian blur (radius ceil(4 sigma), edge-mirrored borders).
Image2D gaussian_blur(const Image2D& image, double sigma);

}  // namespace protoprompt
