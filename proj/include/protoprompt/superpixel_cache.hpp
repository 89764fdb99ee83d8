#pragma once

// On-disk cache of superpixel label maps, keyed by image content hash and
// segmentation parameters.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "protoprompt/superpixel.hpp"

namespace protoprompt {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_file(const std::filesystem::path& path);
// Hash of shape, channel count and pixel bytes.
std::uint64_t hash_image(const Image2D& image);

class SuperpixelCache {
 public:
  explicit SuperpixelCache(std::filesystem::path directory);

  // Loads the cached map for (content_hash, params) or computes and stores it.
  SuperpixelLabelMap get(std::uint64_t content_hash, const Image2D& image, const SuperpixelParams& params);
  SuperpixelLabelMap get(const Image2D& image, const SuperpixelParams& params) {
    return get(hash_image(image), image, params);
  }

  std::filesystem::path entry_path(std::uint64_t content_hash, const SuperpixelParams& params) const;
  int hits() const { return hits_; }
  int misses() const { return misses_; }

 private:
  std::filesystem::path directory_;
  std::atomic<int> hits_{0};
  std::atomic<int> misses_{0};
};

}  // namespace protoprompt
