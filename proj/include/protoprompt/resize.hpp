#pragma once

#include <span>
#include <vector>

#include "protoprompt/types.hpp"

namespace protoprompt {

enum class Interpolation { kBilinear, kNearest };

// Half-pixel-centre sampling is used by both modes, so resizing to the same
// shape is the identity and integer up/down factors map cells exactly.
Image2D resize(const Image2D& image, Shape2D target, Interpolation mode = Interpolation::kBilinear);

// Bilinear mode thresholds the interpolated occupancy at 0.5.
BinaryMask resize(const BinaryMask& mask, Shape2D target, Interpolation mode = Interpolation::kNearest);

// Bilinear per plane followed by per-pixel renormalisation.
ProbabilityMask resize(const ProbabilityMask& probs, Shape2D target);

// Source index sampled by nearest-neighbour resizing along one axis.
int nearest_source_index(int dst, int in_size, int out_size);

// One-axis linear interpolation taps: out[i] = w_lo * in[lo] + w_hi * in[hi].
struct LinearTap {
  int lo = 0;
  int hi = 0;
  double w_lo = 1.0;
  double w_hi = 0.0;
};
std::vector<LinearTap> bilinear_taps(int in_size, int out_size);

// Bilinear resize of a single row-major real plane.
std::vector<double> resize_plane(std::span<const double> plane, Shape2D from, Shape2D to);

// Adjoint of resize_plane: scatters an output-space gradient back onto the
// input grid.
std::vector<double> resize_plane_adjoint(std::span<const double> grad_out, Shape2D from, Shape2D to);

}  // namespace protoprompt
