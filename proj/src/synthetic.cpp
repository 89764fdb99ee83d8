#include "protoprompt/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "protoprompt/error.hpp"

namespace protoprompt::synthetic {

BinaryMask disk(Shape2D shape, double center_row, double center_col, double radius) {
  std::vector<std::uint8_t> labels(shape.area(), 0);
  for (int r = 0; r < shape.rows; ++r)
    for (int c = 0; c < shape.cols; ++c) {
      const double dr = r - center_row, dc = c - center_col;
      labels[static_cast<std::size_t>(r) * shape.cols + c] = dr * dr + dc * dc <= radius * radius;
    }
  return BinaryMask(shape.rows, shape.cols, std::move(labels));
}

BinaryMask rectangle(Shape2D shape, int row_min, int col_min, int row_max, int col_max) {
  std::vector<std::uint8_t> labels(shape.area(), 0);
  for (int r = std::max(0, row_min); r <= std::min(shape.rows - 1, row_max); ++r)
    for (int c = std::max(0, col_min); c <= std::min(shape.cols - 1, col_max); ++c)
      labels[static_cast<std::size_t>(r) * shape.cols + c] = 1;
  return BinaryMask(shape.rows, shape.cols, std::move(labels));
}

Image2D render(const BinaryMask& mask, const SceneParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.f, params.noise);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double ph_r = phase(rng), ph_c = phase(rng);
  const double freq = 2.0 * std::numbers::pi / 23.0;
  std::vector<float> px(mask.shape().area());
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      const double tex = params.texture * std::sin(freq * r + ph_r) * std::cos(freq * c + ph_c);
      const double base = mask.at(r, c) ? params.foreground : params.background;
      px[static_cast<std::size_t>(r) * mask.cols() + c] =
          std::clamp(static_cast<float>(base + tex) + (params.noise > 0.f ? noise(rng) : 0.f), 0.f, 1.f);
    }
  }
  return Image2D(mask.rows(), mask.cols(), 1, std::move(px));
}

Scene random_scene(std::mt19937_64& rng, ShapeKind kind, const SceneParams& params) {
  const Shape2D s = params.shape;
  require(s.rows >= 16 && s.cols >= 16, "synthetic scenes need at least 16x16 pixels");
  const double side = std::min(s.rows, s.cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BinaryMask mask;
  if (kind == ShapeKind::kDisk) {
    const double radius = side * (0.14 + 0.12 * u(rng));
    const double cr = radius + 2 + u(rng) * (s.rows - 2 * radius - 4);
    const double cc = radius + 2 + u(rng) * (s.cols - 2 * radius - 4);
    mask = disk(s, cr, cc, radius);
  } else {
    const int h = static_cast<int>(s.rows * (0.25 + 0.25 * u(rng)));
    const int w = static_cast<int>(s.cols * (0.25 + 0.25 * u(rng)));
    const int r0 = 2 + static_cast<int>(u(rng) * (s.rows - h - 4));
    const int c0 = 2 + static_cast<int>(u(rng) * (s.cols - w - 4));
    mask = rectangle(s, r0, c0, r0 + h - 1, c0 + w - 1);
  }
  return {render(mask, params, rng()), std::move(mask)};
}

std::vector<Scene> disk_volume(std::mt19937_64& rng, int slices, const SceneParams& params) {
  require(slices >= 3, "disk_volume needs at least 3 slices");
  const Shape2D s = params.shape;
  const double side = std::min(s.rows, s.cols);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double peak = side * (0.2 + 0.05 * u(rng));
  const double cr = s.rows / 2.0 + 0.1 * side * u(rng), cc = s.cols / 2.0 + 0.1 * side * u(rng);
  const double drift_r = 0.05 * side * u(rng), drift_c = 0.05 * side * u(rng);
  std::vector<Scene> out;
  for (int z = 0; z < slices; ++z) {
    // Half-sine profile: zero radius at both ends of the stack.
    const double t = static_cast<double>(z) / (slices - 1);
    const double radius = peak * std::sin(std::numbers::pi * t);
    const BinaryMask mask = radius < 1.0 ? BinaryMask::filled(s, false)
                                         : disk(s, cr + drift_r * (t - 0.5), cc + drift_c * (t - 0.5), radius);
    out.push_back({render(mask, params, rng()), mask});
  }
  return out;
}

LabeledScan organ_volume(std::mt19937_64& rng, int slices, const SceneParams& params) {
  require(slices >= 5, "organ_volume needs at least 5 slices");
  const Shape2D s = params.shape;
  require(s.rows >= 32 && s.cols >= 32, "organ_volume needs at least 32x32 pixels");
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  struct Organ {
    std::uint16_t label;
    double row, col, radius_r, radius_c;  // fractions of the frame
    double z_begin, z_end;                // fractions of the stack
    float intensity;
  };
  // Viewer's left is the patient's right, as in radiological display.
  const Organ organs[] = {
      {1, 0.38, 0.32, 0.20, 0.22, 0.05, 0.80, 0.55f},
      {2, 0.70, 0.30, 0.10, 0.08, 0.35, 0.95, 0.80f},
      {3, 0.70, 0.70, 0.10, 0.08, 0.25, 0.85, 0.92f},
      {4, 0.36, 0.72, 0.12, 0.10, 0.10, 0.60, 0.68f},
  };
  LabeledScan scan;
  const double shift_r = 0.03 * jitter(rng), shift_c = 0.03 * jitter(rng), size = 1.0 + 0.1 * jitter(rng);
  std::normal_distribution<float> noise(0.f, params.noise);
  for (int z = 0; z < slices; ++z) {
    const double t = (z + 0.5) / slices;
    std::vector<std::uint16_t> labels(s.area(), 0);
    for (const auto& o : organs) {
      if (t < o.z_begin || t > o.z_end) continue;
      const double profile = std::sin(std::numbers::pi * (t - o.z_begin) / (o.z_end - o.z_begin));
      const double rr = o.radius_r * s.rows * size * (0.4 + 0.6 * profile);
      const double rc = o.radius_c * s.cols * size * (0.4 + 0.6 * profile);
      const double cr = (o.row + shift_r) * s.rows, cc = (o.col + shift_c) * s.cols;
      for (int r = 0; r < s.rows; ++r) {
        for (int c = 0; c < s.cols; ++c) {
          const double dr = (r - cr) / rr, dc = (c - cc) / rc;
          if (dr * dr + dc * dc <= 1.0) labels[static_cast<std::size_t>(r) * s.cols + c] = o.label;
        }
      }
    }
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double ph_r = phase(rng), ph_c = phase(rng), freq = 2.0 * std::numbers::pi / 23.0;
    std::vector<float> px(s.area());
    for (int r = 0; r < s.rows; ++r) {
      for (int c = 0; c < s.cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * s.cols + c;
        float base = params.background;
        for (const auto& o : organs)
          if (labels[i] == o.label) base = o.intensity;
        const double tex = params.texture * std::sin(freq * r + ph_r) * std::cos(freq * c + ph_c);
        px[i] = std::clamp(static_cast<float>(base + tex) + (params.noise > 0.f ? noise(rng) : 0.f), 0.f, 1.f);
      }
    }
    scan.images.emplace_back(s.rows, s.cols, 1, std::move(px));
    scan.labels.push_back(std::move(labels));
  }
  return scan;
}

}  // namespace protoprompt::synthetic
