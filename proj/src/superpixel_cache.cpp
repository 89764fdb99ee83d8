#include "protoprompt/superpixel_cache.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "protoprompt/error.hpp"
#include "protoprompt/npy.hpp"

namespace fs = std::filesystem;

namespace protoprompt {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot read '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

std::uint64_t hash_image(const Image2D& image) {
  const std::int32_t header[3] = {image.rows(), image.cols(), image.channels()};
  std::uint64_t h = fnv1a64({reinterpret_cast<const std::uint8_t*>(header), sizeof header});
  const auto px = image.pixels();
  return fnv1a64({reinterpret_cast<const std::uint8_t*>(px.data()), px.size() * sizeof(float)}, h);
}

SuperpixelCache::SuperpixelCache(fs::path directory) : directory_(std::move(directory)) {
  fs::create_directories(directory_);
}

fs::path SuperpixelCache::entry_path(std::uint64_t content_hash, const SuperpixelParams& params) const {
  char name[128];
  std::snprintf(name, sizeof name, "%016llx_s%g_g%g_m%d.npy", static_cast<unsigned long long>(content_hash),
                params.scale, params.sigma, params.min_size);
  return directory_ / name;
}

SuperpixelLabelMap SuperpixelCache::get(std::uint64_t content_hash, const Image2D& image,
                                        const SuperpixelParams& params) {
  const auto path = entry_path(content_hash, params);
  if (fs::exists(path)) {
    const auto arr = npy::read(path);
    if (arr.shape.size() == 2 && arr.shape[0] == static_cast<std::size_t>(image.rows()) &&
        arr.shape[1] == static_cast<std::size_t>(image.cols())) {
      SuperpixelLabelMap map{image.rows(), image.cols(), {}, 0};
      map.labels.reserve(arr.values.size());
      for (double v : arr.values) {
        map.labels.push_back(static_cast<std::int32_t>(v));
        map.num_segments = std::max(map.num_segments, map.labels.back() + 1);
      }
      ++hits_;
      return map;
    }
    // A stale entry of the wrong shape is recomputed and overwritten.
  }
  ++misses_;
  auto map = generate_superpixels(image, params);
  npy::Array arr;
  arr.dtype = npy::DType::kInt32;
  arr.shape = {static_cast<std::size_t>(map.rows), static_cast<std::size_t>(map.cols)};
  arr.values.assign(map.labels.begin(), map.labels.end());
  // Write then rename so that concurrent readers never see a partial file.
  auto tmp = path;
  tmp += ".tmp" + std::to_string(reinterpret_cast<std::uintptr_t>(&map));
  npy::write(tmp, arr);
  fs::rename(tmp, path);
  return map;
}

}  // namespace protoprompt
