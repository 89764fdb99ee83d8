#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "protoprompt/augment.hpp"
#include "protoprompt/error.hpp"
#include "protoprompt/prompts.hpp"
#include "protoprompt/superpixel.hpp"
#include "test_support.hpp"

namespace protoprompt {
namespace {

using testing::random_image;
using testing::random_mask;

// Straightforward Felzenszwalb-Huttenlocher on an unsmoothed grayscale image:
// explicit member lists, no path compression, merges re-labelled eagerly.
std::vector<int> naive_fh(const Image2D& img, double k, int min_size) {
  const int rows = img.rows(), cols = img.cols(), n = rows * cols;
  struct E {
    int a, b;
    float w;
  };
  std::vector<E> edges;
  auto w = [&](int r0, int c0, int r1, int c1) { return static_cast<float>(std::abs(img.at(r0, c0) - img.at(r1, c1))); };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) edges.push_back({r * cols + c, r * cols + c + 1, w(r, c, r, c + 1)});
      if (r + 1 < rows) edges.push_back({r * cols + c, (r + 1) * cols + c, w(r, c, r + 1, c)});
      if (r + 1 < rows && c + 1 < cols) edges.push_back({r * cols + c, (r + 1) * cols + c + 1, w(r, c, r + 1, c + 1)});
      if (r > 0 && c + 1 < cols) edges.push_back({r * cols + c, (r - 1) * cols + c + 1, w(r, c, r - 1, c + 1)});
    }
  std::stable_sort(edges.begin(), edges.end(), [](const E& x, const E& y) { return x.w < y.w; });
  std::vector<int> label(n);
  std::vector<std::vector<int>> members(n);
  std::vector<double> internal(n, 0.0);
  for (int i = 0; i < n; ++i) label[i] = i, members[i] = {i};
  auto merge = [&](int a, int b, double wt) {
    for (int p : members[b]) label[p] = a;
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
    internal[a] = wt;
  };
  for (const auto& e : edges) {
    const int a = label[e.a], b = label[e.b];
    if (a == b) continue;
    const double ta = internal[a] + k / members[a].size(), tb = internal[b] + k / members[b].size();
    if (e.w <= std::min(ta, tb)) merge(a, b, e.w);
  }
  for (const auto& e : edges) {
    const int a = label[e.a], b = label[e.b];
    if (a != b && (static_cast<int>(members[a].size()) < min_size || static_cast<int>(members[b].size()) < min_size))
      merge(a, b, e.w);
  }
  return label;
}

// Same partition up to renaming.
bool same_partition(const std::vector<std::int32_t>& a, const std::vector<int>& b) {
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [x, inserted_x] = ab.emplace(a[i], b[i]);
    auto [y, inserted_y] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

void expect_valid_partition(const SuperpixelLabelMap& sp) {
  ASSERT_EQ(sp.labels.size(), sp.shape().area());
  std::vector<int> sizes(sp.num_segments, 0);
  for (auto l : sp.labels) {
    ASSERT_GE(l, 0);
    ASSERT_LT(l, sp.num_segments);
    ++sizes[l];
  }
  for (int s = 0; s < sp.num_segments; ++s) {
    ASSERT_GT(sizes[s], 0);
    ASSERT_EQ(connected_components(sp.segment_mask(s), Connectivity::kEight).size(), 1u) << "segment " << s;
  }
}

TEST(Superpixels, ConstantImageIsOneSegment) {
  const auto sp = generate_superpixels(Image2D::constant({40, 30}, 0.4f), {});
  EXPECT_EQ(sp.num_segments, 1);
  EXPECT_EQ(generate_superpixels(Image2D::constant({1, 1}, 0.4f), {}).num_segments, 1);
}

TEST(Superpixels, TwoHalfPlanesGiveTwoSegments) {
  const auto halves = testing::half_plane_mask({32, 32}, 16);
  const auto img = testing::two_level_image(halves, 0.0f, 1.0f);
  // Smoothing leaves two intermediate columns; each is smaller than min_size
  // and joins the side it differs least from.
  const auto sp = generate_superpixels(img, {100.0, 0.8, 100});
  ASSERT_EQ(sp.num_segments, 2);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) ASSERT_EQ(sp.at(r, c), c >= 16 ? 1 : 0);
  // With sigma 0 the gap alone separates them even without a size floor.
  const auto raw = generate_superpixels(img, {100.0, 0.0, 1});
  EXPECT_EQ(raw.num_segments, 2);
}

TEST(Superpixels, MatchesNaiveMergeSimulation) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 30; ++trial) {
    const Shape2D shape{3 + trial % 9, 4 + trial % 7};
    const auto img = random_image(rng, shape);
    const SuperpixelParams params{20.0 + 10.0 * trial, 0.0, 1 + trial % 6};
    const auto sp = generate_superpixels(img, params);
    ASSERT_TRUE(same_partition(sp.labels, naive_fh(img, params.scale / 255.0, params.min_size))) << trial;
  }
}

TEST(SuperpixelsProperty, PartitionIsCompleteConnectedAndSizeBounded) {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const auto mask = random_mask(rng, {24 + trial, 30}, 0.3);
    auto img = testing::two_level_image(mask, 0.2f, 0.6f);
    const SuperpixelParams params{50.0 + 20 * trial, 0.5, 20};
    const auto sp = generate_superpixels(img, params);
    expect_valid_partition(sp);
    std::vector<int> sizes(sp.num_segments, 0);
    for (auto l : sp.labels) ++sizes[l];
    for (int s : sizes) EXPECT_GE(s, params.min_size);
    EXPECT_EQ(sp.labels, generate_superpixels(img, params).labels);
  }
}

TEST(Superpixels, RgbInputAndLabelOrder) {
  std::mt19937_64 rng(52);
  const auto sp = generate_superpixels(random_image(rng, {20, 20}, 3), {30.0, 0.8, 10});
  expect_valid_partition(sp);
  EXPECT_EQ(sp.labels.front(), 0);
}

TEST(GaussianBlur, PreservesConstantsAndMass) {
  const auto flat = gaussian_blur(Image2D::constant({9, 11}, 0.6f), 1.3);
  for (float v : flat.pixels()) EXPECT_NEAR(v, 0.6f, 1e-6);
  EXPECT_THROW(gaussian_blur(flat, -1.0), Error);
}

TEST(Affine, QuarterTurnMatchesIndexOracle) {
  std::mt19937_64 rng(53);
  const auto mask = random_mask(rng, {9, 9}, 0.4);
  const auto img = random_image(rng, {9, 9}, 3);
  for (int k = 0; k < 4; ++k) {
    const auto t = AffineTransform::rot90({9, 9}, k);
    const auto m = warp(mask, t);
    const auto im = warp(img, t, Interpolation::kBilinear);
    for (int r = 0; r < 9; ++r)
      for (int c = 0; c < 9; ++c) {
        // Source of output (r, c) after k clockwise turns.
        int sr = r, sc = c;
        for (int i = 0; i < k; ++i) std::tie(sr, sc) = std::pair{8 - sc, sr};
        ASSERT_EQ(m.at(r, c), mask.at(sr, sc)) << k;
        ASSERT_FLOAT_EQ(im.at(r, c, 1), img.at(sr, sc, 1));
      }
  }
  EXPECT_THROW(AffineTransform::rot90({4, 5}, 1), Error);
}

TEST(Affine, FlipsAndInverses) {
  std::mt19937_64 rng(54);
  const auto mask = random_mask(rng, {7, 10}, 0.5);
  const auto h = warp(mask, AffineTransform::flip_horizontal({7, 10}));
  const auto v = warp(mask, AffineTransform::flip_vertical({7, 10}));
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 10; ++c) {
      EXPECT_EQ(h.at(r, c), mask.at(r, 9 - c));
      EXPECT_EQ(v.at(r, c), mask.at(6 - r, c));
    }
  const auto t = AffineTransform::about_center({50, 60}, 0.3, 1.07, 2.5, -4.0);
  const auto round_trip = t.then(t.inverse());
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(round_trip.matrix()[i], AffineTransform::identity().matrix()[i], 1e-12);
  const auto p = t.apply(3.0, 7.0);
  const auto q = t.inverse().apply(p[0], p[1]);
  EXPECT_NEAR(q[0], 3.0, 1e-12);
  EXPECT_NEAR(q[1], 7.0, 1e-12);
}

TEST(AffineProperty, RandomTransformsStayWithinConfiguredRanges) {
  std::mt19937_64 rng(55);
  const AugmentConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = AffineTransform::random(rng, {100, 80}, cfg);
    const auto& m = t.matrix();
    const double scale = std::sqrt(m[0] * m[3] - m[1] * m[2]);
    ASSERT_GE(scale, cfg.min_scale - 1e-12);
    ASSERT_LE(scale, cfg.max_scale + 1e-12);
    ASSERT_LE(std::abs(std::atan2(m[1], m[0])) * 180.0 / 3.14159265358979, cfg.max_rotation_deg + 1e-9);
    const auto centre = t.apply(49.5, 39.5);
    ASSERT_LE(std::abs(centre[0] - 49.5), 10.0 + 1e-9);
    ASSERT_LE(std::abs(centre[1] - 39.5), 8.0 + 1e-9);
  }
}

TEST(Intensity, IdentityAndRange) {
  std::mt19937_64 rng(56);
  const auto img = random_image(rng, {12, 12});
  EXPECT_EQ(IntensityTransform{}.apply(img), img);
  const IntensityTransform t{1.3, 0.02, 99};
  const auto out = t.apply(img);
  for (float v : out.pixels()) {
    ASSERT_GE(v, 0.f);
    ASSERT_LE(v, 1.f);
  }
  EXPECT_EQ(out, t.apply(img));
  const IntensityTransform gamma_only{2.0, 0.0, 0};
  EXPECT_NEAR(gamma_only.apply(Image2D::constant({1, 1}, 0.5f)).at(0, 0), 0.25f, 1e-7);
}

}  // namespace
}  // namespace protoprompt
