#pragma once

// Procedural test scenes: a bright textured shape on a darker textured
// background, plus stacks of such slices forming volumes.

#include <cstdint>
#include <random>
#include <vector>

#include "protoprompt/types.hpp"

namespace protoprompt::synthetic {

enum class ShapeKind { kDisk, kRectangle };

struct Scene {
  Image2D image;
  BinaryMask mask;
};

struct SceneParams {
  Shape2D shape{128, 128};
  float background = 0.3f;
  float foreground = 0.7f;
  float noise = 0.03f;     // Gaussian pixel noise
  float texture = 0.04f;   // amplitude of a low-frequency sinusoidal pattern
};

BinaryMask disk(Shape2D shape, double center_row, double center_col, double radius);
BinaryMask rectangle(Shape2D shape, int row_min, int col_min, int row_max, int col_max);

// Renders `mask` with the given intensities and seeded noise.
Image2D render(const BinaryMask& mask, const SceneParams& params, std::uint64_t seed);

// Random shape covering roughly 5-25% of the frame, away from the border.
Scene random_scene(std::mt19937_64& rng, ShapeKind kind, const SceneParams& params = {});

// `slices` slices of a disk whose radius swells and shrinks along the stack
// (empty at both ends) with a drifting centre.
std::vector<Scene> disk_volume(std::mt19937_64& rng, int slices, const SceneParams& params = {});

// Abdominal-style scan: four organs (label values 1 liver, 2 right kidney,
// 3 left kidney, 4 spleen) as ellipses of distinct brightness, each covering
// its own contiguous run of slices.
struct LabeledScan {
  std::vector<Image2D> images;
  std::vector<std::vector<std::uint16_t>> labels;  // row-major per slice
};
LabeledScan organ_volume(std::mt19937_64& rng, int slices, const SceneParams& params = {});

}  // namespace protoprompt::synthetic
