#include "protoprompt/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "protoprompt/error.hpp"

namespace protoprompt {
namespace {

std::array<double, 2> center_of(Shape2D shape) { return {(shape.rows - 1) / 2.0, (shape.cols - 1) / 2.0}; }

// Matrix about the centre: t = ctr - M ctr.
AffineTransform centered(Shape2D shape, std::array<double, 4> m) {
  const auto ctr = center_of(shape);
  return {m, {ctr[0] - (m[0] * ctr[0] + m[1] * ctr[1]), ctr[1] - (m[2] * ctr[0] + m[3] * ctr[1])}};
}

}  // namespace

AffineTransform AffineTransform::about_center(Shape2D shape, double angle, double scale, double shift_rows,
                                              double shift_cols) {
  require(scale > 0.0, "affine: scale must be > 0");
  const double c = std::cos(angle) * scale, s = std::sin(angle) * scale;
  auto t = centered(shape, {c, s, -s, c});
  t.t_[0] += shift_rows;
  t.t_[1] += shift_cols;
  return t;
}

AffineTransform AffineTransform::rot90(Shape2D shape, int quarter_turns) {
  require(shape.rows == shape.cols, "rot90 needs a square image, got " + to_string(shape));
  switch (((quarter_turns % 4) + 4) % 4) {
    case 0: return identity();
    case 1: return centered(shape, {0, 1, -1, 0});
    case 2: return centered(shape, {-1, 0, 0, -1});
    default: return centered(shape, {0, -1, 1, 0});
  }
}

AffineTransform AffineTransform::flip_horizontal(Shape2D shape) { return centered(shape, {1, 0, 0, -1}); }
AffineTransform AffineTransform::flip_vertical(Shape2D shape) { return centered(shape, {-1, 0, 0, 1}); }

AffineTransform AffineTransform::random(std::mt19937_64& rng, Shape2D shape, const AugmentConfig& config) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(config.min_scale, config.max_scale);
  const double angle = unit(rng) * config.max_rotation_deg * std::numbers::pi / 180.0;
  const double s = scale(rng);
  const double dr = unit(rng) * config.max_translation * shape.rows;
  const double dc = unit(rng) * config.max_translation * shape.cols;
  return about_center(shape, angle, s, dr, dc);
}

AffineTransform AffineTransform::inverse() const {
  const double det = m_[0] * m_[3] - m_[1] * m_[2];
  require(std::abs(det) > 1e-12, "affine transform is singular");
  const std::array<double, 4> inv{m_[3] / det, -m_[1] / det, -m_[2] / det, m_[0] / det};
  return {inv, {-(inv[0] * t_[0] + inv[1] * t_[1]), -(inv[2] * t_[0] + inv[3] * t_[1])}};
}

AffineTransform AffineTransform::then(const AffineTransform& next) const {
  const auto& n = next.m_;
  const std::array<double, 4> m{n[0] * m_[0] + n[1] * m_[2], n[0] * m_[1] + n[1] * m_[3],
                                n[2] * m_[0] + n[3] * m_[2], n[2] * m_[1] + n[3] * m_[3]};
  const auto moved = next.apply(t_[0], t_[1]);
  return {m, moved};
}

std::array<double, 2> AffineTransform::apply(double row, double col) const {
  return {m_[0] * row + m_[1] * col + t_[0], m_[2] * row + m_[3] * col + t_[1]};
}

Image2D warp(const Image2D& image, const AffineTransform& transform, Interpolation mode) {
  if (transform.is_identity()) return image;
  const auto back = transform.inverse();
  const int rows = image.rows(), cols = image.cols(), ch = image.channels();
  std::vector<float> out(image.pixels().size(), 0.f);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto [sr, sc] = back.apply(r, c);
      float* dst = out.data() + (static_cast<std::size_t>(r) * cols + c) * ch;
      if (mode == Interpolation::kNearest) {
        const long ir = std::lround(sr), ic = std::lround(sc);
        if (ir < 0 || ic < 0 || ir >= rows || ic >= cols) continue;
        for (int q = 0; q < ch; ++q) dst[q] = image.at(static_cast<int>(ir), static_cast<int>(ic), q);
        continue;
      }
      if (sr < -0.5 || sc < -0.5 || sr > rows - 0.5 || sc > cols - 0.5) continue;
      const double cr = std::clamp(sr, 0.0, rows - 1.0), cc = std::clamp(sc, 0.0, cols - 1.0);
      const int r0 = static_cast<int>(std::floor(cr)), c0 = static_cast<int>(std::floor(cc));
      const int r1 = std::min(r0 + 1, rows - 1), c1 = std::min(c0 + 1, cols - 1);
      const double fr = cr - r0, fc = cc - c0;
      for (int q = 0; q < ch; ++q) {
        const double top = image.at(r0, c0, q) * (1 - fc) + image.at(r0, c1, q) * fc;
        const double bottom = image.at(r1, c0, q) * (1 - fc) + image.at(r1, c1, q) * fc;
        dst[q] = static_cast<float>(top * (1 - fr) + bottom * fr);
      }
    }
  }
  return Image2D(rows, cols, ch, std::move(out), image.id());
}

BinaryMask warp(const BinaryMask& mask, const AffineTransform& transform) {
  if (transform.is_identity()) return mask;
  const auto back = transform.inverse();
  std::vector<std::uint8_t> out(mask.shape().area(), 0);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const auto [sr, sc] = back.apply(r, c);
      const long ir = std::lround(sr), ic = std::lround(sc);
      if (ir < 0 || ic < 0 || ir >= mask.rows() || ic >= mask.cols()) continue;
      out[static_cast<std::size_t>(r) * mask.cols() + c] = mask.at(static_cast<int>(ir), static_cast<int>(ic));
    }
  }
  return BinaryMask(mask.rows(), mask.cols(), std::move(out));
}

IntensityTransform IntensityTransform::random(std::mt19937_64& rng, const AugmentConfig& config) {
  std::uniform_real_distribution<double> gamma(config.min_gamma, config.max_gamma);
  IntensityTransform t;
  t.gamma = gamma(rng);
  t.noise_sigma = config.noise_sigma;
  t.noise_seed = rng();
  return t;
}

Image2D IntensityTransform::apply(const Image2D& image) const {
  require(gamma > 0.0 && noise_sigma >= 0.0, "intensity transform: gamma must be > 0 and sigma >= 0");
  if (gamma == 1.0 && noise_sigma == 0.0) return image;
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  std::vector<float> out(image.pixels().begin(), image.pixels().end());
  for (auto& v : out) {
    double x = std::pow(std::clamp(static_cast<double>(v), 0.0, 1.0), gamma);
    if (noise_sigma > 0.0) x += noise(rng);
    v = static_cast<float>(std::clamp(x, 0.0, 1.0));
  }
  return Image2D(image.rows(), image.cols(), image.channels(), std::move(out), image.id());
}

}  // namespace protoprompt
