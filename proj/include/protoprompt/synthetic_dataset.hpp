#pragma once

// Writers for generated datasets in the layouts build_manifest reads.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "protoprompt/dataset.hpp"
#include "protoprompt/types.hpp"

namespace protoprompt::synthetic {

struct VolumeDatasetSpec {
  int scans = 5;
  int slices = 12;
  Shape2D shape{96, 96};
  VolumeFormat format = VolumeFormat::kNifti;
  std::uint64_t seed = 0;
};

// Scan directories scan_00, scan_01, ... holding organ volumes.
void write_volume_dataset(const std::filesystem::path& root, const VolumeDatasetSpec& spec);

struct ImageDatasetSpec {
  std::map<std::string, int> subsets{{"synthetic", 20}};
  Shape2D shape{128, 128};
  std::uint64_t seed = 0;
};

// <root>/<subset>/images/NNN.png (RGB) and masks/NNN.png ({0, 255}); shapes
// alternate between disks and rectangles.
void write_image_dataset(const std::filesystem::path& root, const ImageDatasetSpec& spec);

}  // namespace protoprompt::synthetic
