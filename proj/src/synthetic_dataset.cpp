#include "protoprompt/synthetic_dataset.hpp"

#include <cstdio>
#include <random>

#include "protoprompt/error.hpp"
#include "protoprompt/raster.hpp"
#include "protoprompt/synthetic.hpp"

namespace fs = std::filesystem;

namespace protoprompt::synthetic {

void write_volume_dataset(const fs::path& root, const VolumeDatasetSpec& spec) {
  require(spec.scans >= 1, "write_volume_dataset: need at least one scan");
  for (int k = 0; k < spec.scans; ++k) {
    std::mt19937_64 rng(spec.seed * 1000003ULL + k);
    SceneParams params;
    params.shape = spec.shape;
    auto scan = organ_volume(rng, spec.slices, params);
    Volume vol;
    char name[32];
    std::snprintf(name, sizeof name, "scan_%02d", k);
    vol.scan_id = name;
    vol.images = std::move(scan.images);
    for (auto& l : scan.labels) vol.labels.push_back({spec.shape.rows, spec.shape.cols, std::move(l)});
    write_volume(root / name, vol, spec.format);
  }
}

void write_image_dataset(const fs::path& root, const ImageDatasetSpec& spec) {
  std::uint64_t subset_index = 0;
  for (const auto& [subset, count] : spec.subsets) {
    std::mt19937_64 rng(spec.seed * 1000003ULL + subset_index++);
    SceneParams params;
    params.shape = spec.shape;
    for (int i = 0; i < count; ++i) {
      const auto scene = random_scene(rng, i % 2 == 0 ? ShapeKind::kDisk : ShapeKind::kRectangle, params);
      // Warm tint: red strongest, blue weakest, as in endoscopy frames.
      std::vector<float> rgb;
      rgb.reserve(scene.image.pixels().size() * 3);
      for (float v : scene.image.pixels()) {
        rgb.push_back(v);
        rgb.push_back(0.8f * v);
        rgb.push_back(0.6f * v);
      }
      char name[32];
      std::snprintf(name, sizeof name, "%03d.png", i);
      write_image_png(root / subset / "images" / name, Image2D(spec.shape.rows, spec.shape.cols, 3, std::move(rgb)));
      write_mask_png(root / subset / "masks" / name, scene.mask);
    }
  }
}

}  // namespace protoprompt::synthetic
