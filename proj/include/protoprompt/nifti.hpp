#pragma once

// NIfTI-1 single-file volumes (.nii, optionally gzip-compressed). Voxels are
// widened to double after applying the header's scl_slope/scl_inter.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace protoprompt {

enum class NiftiType : std::int16_t {
  kUInt8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUInt16 = 512,
  kUInt32 = 768,
};

struct NiftiVolume {
  // Extents along x (fastest on disk), y and z.
  std::array<int, 3> dims{0, 0, 0};
  std::array<float, 3> spacing{1.f, 1.f, 1.f};
  std::vector<double> voxels;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  double at(int x, int y, int z) const {
    return voxels[(static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x];
  }
};

NiftiVolume read_nifti(const std::filesystem::path& path);
// Compressed when the name ends in .gz.
void write_nifti(const std::filesystem::path& path, const NiftiVolume& volume, NiftiType type = NiftiType::kFloat32);

}  // namespace protoprompt
