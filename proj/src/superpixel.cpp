#include "protoprompt/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "protoprompt/error.hpp"

namespace protoprompt {
namespace {

struct Edge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  float weight = 0.f;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.f) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Joins two roots; the internal difference becomes `weight`, which is the
  // largest edge of the merged minimum spanning tree because edges arrive in
  // ascending order.
  void join(std::uint32_t a, std::uint32_t b, float weight) {
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    internal_[a] = weight;
  }

  std::uint32_t size(std::uint32_t root) const { return size_[root]; }
  float internal(std::uint32_t root) const { return internal_[root]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::vector<float> internal_;
};

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Mirror with edge repeat: -1 -> 0, n -> n-1.
int mirror(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

}  // namespace

BinaryMask SuperpixelLabelMap::segment_mask(int segment) const {
  require(segment >= 0 && segment < num_segments, "segment index out of range");
  std::vector<std::uint8_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == segment ? 1 : 0;
  return BinaryMask(rows, cols, std::move(out));
}

Image2D gaussian_blur(const Image2D& image, double sigma) {
  require(sigma >= 0.0, "gaussian_blur: sigma must be >= 0");
  if (sigma == 0.0) return image;
  const auto k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int rows = image.rows(), cols = image.cols(), ch = image.channels();
  std::vector<float> tmp(image.pixels().size()), out(image.pixels().size());
  const auto px = image.pixels();
  auto idx = [&](int r, int c, int k_) { return (static_cast<std::size_t>(r) * cols + c) * ch + k_; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int q = 0; q < ch; ++q) {
        float acc = 0.f;
        for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * px[idx(r, mirror(c + t, cols), q)];
        tmp[idx(r, c, q)] = acc;
      }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int q = 0; q < ch; ++q) {
        float acc = 0.f;
        for (int t = -radius; t <= radius; ++t) acc += k[t + radius] * tmp[idx(mirror(r + t, rows), c, q)];
        out[idx(r, c, q)] = acc;
      }
  return Image2D(rows, cols, ch, std::move(out), image.id());
}

SuperpixelLabelMap generate_superpixels(const Image2D& image, const SuperpixelParams& params) {
  require(params.scale > 0.0, "superpixels: scale must be > 0");
  require(params.min_size >= 1, "superpixels: min_size must be >= 1");
  const Image2D smooth = gaussian_blur(image, params.sigma);
  const int rows = smooth.rows(), cols = smooth.cols(), ch = smooth.channels();

  auto node = [cols](int r, int c) { return static_cast<std::uint32_t>(r * cols + c); };
  auto distance = [&](int r0, int c0, int r1, int c1) {
    double d = 0.0;
    for (int q = 0; q < ch; ++q) {
      const double diff = smooth.at(r0, c0, q) - smooth.at(r1, c1, q);
      d += diff * diff;
    }
    return static_cast<float>(std::sqrt(d));
  };

  // Forward half of the 8-neighbourhood.
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(rows) * cols * 4);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({node(r, c), node(r, c + 1), distance(r, c, r, c + 1)});
      if (r + 1 < rows) edges.push_back({node(r, c), node(r + 1, c), distance(r, c, r + 1, c)});
      if (r + 1 < rows && c + 1 < cols) edges.push_back({node(r, c), node(r + 1, c + 1), distance(r, c, r + 1, c + 1)});
      if (r > 0 && c + 1 < cols) edges.push_back({node(r, c), node(r - 1, c + 1), distance(r, c, r - 1, c + 1)});
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.weight < y.weight; });

  const double k = params.scale / 255.0;
  DisjointSets sets(static_cast<std::size_t>(rows) * cols);
  for (const auto& e : edges) {
    const auto a = sets.find(e.a), b = sets.find(e.b);
    if (a == b) continue;
    const double ta = sets.internal(a) + k / sets.size(a);
    const double tb = sets.internal(b) + k / sets.size(b);
    if (e.weight <= std::min(ta, tb)) sets.join(a, b, e.weight);
  }
  for (const auto& e : edges) {
    const auto a = sets.find(e.a), b = sets.find(e.b);
    if (a != b && (static_cast<int>(sets.size(a)) < params.min_size || static_cast<int>(sets.size(b)) < params.min_size))
      sets.join(a, b, std::max({sets.internal(a), sets.internal(b), e.weight}));
  }

  SuperpixelLabelMap out;
  out.rows = rows;
  out.cols = cols;
  out.labels.assign(static_cast<std::size_t>(rows) * cols, -1);
  std::vector<std::int32_t> root_label(out.labels.size(), -1);
  for (std::uint32_t i = 0; i < out.labels.size(); ++i) {
    const auto root = sets.find(i);
    if (root_label[root] < 0) root_label[root] = out.num_segments++;
    out.labels[i] = root_label[root];
  }
  return out;
}

}  // namespace protoprompt
