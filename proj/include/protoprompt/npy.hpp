#pragma once

// Minimal reader/writer for NumPy .npy files (format 1.0/2.0, little-endian,
// C order). This is the tensor wire format shared with external backends.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace protoprompt::npy {

enum class DType { kFloat32, kFloat64, kUInt8, kInt32, kInt64 };

struct Array {
  DType dtype = DType::kFloat64;
  std::vector<std::size_t> shape;
  // Values widened to double regardless of on-disk dtype.
  std::vector<double> values;

  std::size_t size() const;
};

Array read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Array& array);

std::string dtype_descr(DType dtype);

}  // namespace protoprompt::npy
