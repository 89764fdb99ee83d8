#pragma once

// Geometric and intensity transforms for self-supervised episodes.

#include <array>
#include <cstdint>
#include <random>

#include "protoprompt/resize.hpp"
#include "protoprompt/types.hpp"

namespace protoprompt {

struct AugmentConfig {
  double max_rotation_deg = 20.0;
  double min_scale = 0.9;
  double max_scale = 1.1;
  double max_translation = 0.1;  // fraction of the side length
  double min_gamma = 0.7;
  double max_gamma = 1.3;
  double noise_sigma = 0.02;
};

// Affine map on pixel-centre coordinates: (r', c') = M (r, c) + t.
class AffineTransform {
 public:
  AffineTransform() = default;
  AffineTransform(std::array<double, 4> matrix, std::array<double, 2> offset) : m_(matrix), t_(offset) {}

  static AffineTransform identity() { return {}; }
  // Rotation (radians, clockwise on screen since rows grow downward) and scale about
  // the image centre, followed by a translation in pixels.
  static AffineTransform about_center(Shape2D shape, double angle, double scale, double shift_rows, double shift_cols);
  // Exact clockwise quarter turns; the image must be square.
  static AffineTransform rot90(Shape2D shape, int quarter_turns);
  static AffineTransform flip_horizontal(Shape2D shape);
  static AffineTransform flip_vertical(Shape2D shape);
  static AffineTransform random(std::mt19937_64& rng, Shape2D shape, const AugmentConfig& config);

  AffineTransform inverse() const;
  // Applies `this` first, then `next`.
  AffineTransform then(const AffineTransform& next) const;
  std::array<double, 2> apply(double row, double col) const;

  const std::array<double, 4>& matrix() const { return m_; }
  const std::array<double, 2>& offset() const { return t_; }
  bool is_identity() const { return m_ == std::array<double, 4>{1, 0, 0, 1} && t_ == std::array<double, 2>{0, 0}; }

 private:
  std::array<double, 4> m_{1, 0, 0, 1};
  std::array<double, 2> t_{0, 0};
};

// Output keeps the input shape; samples falling outside the source are 0.
Image2D warp(const Image2D& image, const AffineTransform& transform,
             Interpolation mode = Interpolation::kBilinear);
BinaryMask warp(const BinaryMask& mask, const AffineTransform& transform);

// Gamma curve followed by additive Gaussian noise, clamped to [0, 1].
struct IntensityTransform {
  double gamma = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  static IntensityTransform random(std::mt19937_64& rng, const AugmentConfig& config);
  Image2D apply(const Image2D& image) const;
};

}  // namespace protoprompt
