#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "protoprompt/error.hpp"
#include "protoprompt/proto_seg.hpp"
#include "protoprompt/resize.hpp"
#include "test_support.hpp"

namespace protoprompt {
namespace {

using testing::random_features;
using testing::random_mask;

FeatureMap grid_1d(int rows, int cols, std::vector<double> values) {
  return FeatureMap(1, rows, cols, std::move(values));
}

SimilarityMap constant_map(Shape2D shape, double v) {
  return {shape.rows, shape.cols, std::vector<double>(shape.area(), v)};
}

// Brute-force window enumeration used as the oracle for local pooling.
std::vector<std::vector<double>> pooled_oracle(const FeatureMap& f, const BinaryMask& m, int lh, int lw,
                                               double threshold) {
  std::vector<std::vector<double>> out;
  for (int top = 0; top + lh <= f.rows(); top += lh) {
    for (int left = 0; left + lw <= f.cols(); left += lw) {
      int on = 0;
      std::vector<double> sum(f.dim(), 0.0);
      for (int r = top; r < top + lh; ++r) {
        for (int c = left; c < left + lw; ++c) {
          on += m.at(r, c);
          for (int d = 0; d < f.dim(); ++d) sum[d] += f.at(d, r, c);
        }
      }
      if (static_cast<double>(on) / (lh * lw) < threshold) continue;
      for (auto& v : sum) v /= lh * lw;
      out.push_back(sum);
    }
  }
  return out;
}

TEST(LocalPrototypes, ConstantMapGivesConstantPrototypes) {
  std::vector<double> values;
  for (int i = 0; i < 6 * 6; ++i) values.insert(values.end(), {0.5, -2.0, 3.0});
  const FeatureMap f(3, 6, 6, values);
  for (PoolingWindow w : {PoolingWindow{1, 1}, PoolingWindow{2, 3}, PoolingWindow{6, 6}}) {
    const auto protos = pool_local_prototypes(f, BinaryMask::filled({6, 6}, true), w, 0.95);
    ASSERT_FALSE(protos.empty());
    for (const auto& p : protos) {
      EXPECT_EQ(p.vector, (std::vector<double>{0.5, -2.0, 3.0}));
      EXPECT_TRUE(p.window.has_value());
      EXPECT_EQ(p.kind, PrototypeKind::kLocal);
    }
  }
}

TEST(LocalPrototypes, TwoByTwoMean) {
  const auto protos =
      pool_local_prototypes(grid_1d(2, 2, {1, 2, 3, 4}), BinaryMask::filled({2, 2}, true), {2, 2}, 0.95);
  ASSERT_EQ(protos.size(), 1u);
  EXPECT_DOUBLE_EQ(protos[0].vector[0], 2.5);
  EXPECT_EQ(*protos[0].window, (WindowIndex{0, 0}));
}

TEST(LocalPrototypes, WindowLargerThanMapIsInvalid) {
  EXPECT_THROW(pool_local_prototypes(grid_1d(2, 2, {1, 2, 3, 4}), BinaryMask::filled({2, 2}, true), {3, 1}, 0.9),
               Error);
}

TEST(LocalPrototypes, RandomEightByEightMatchesOracle) {
  std::mt19937_64 rng(20);
  const auto f = random_features(rng, 5, {8, 8});
  const auto m = random_mask(rng, {8, 8}, 0.97);
  const auto got = pool_local_prototypes(f, m, {4, 4}, 0.95);
  const auto want = pooled_oracle(f, m, 4, 4, 0.95);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    for (int d = 0; d < 5; ++d) EXPECT_NEAR(got[i].vector[d], want[i][d], 1e-12);
}

TEST(LocalPrototypesProperty, MatchesBruteForceOn200Triples) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> side(1, 12), dim(1, 6);
  std::uniform_real_distribution<double> dens(0.5, 1.0), thr(0.05, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Shape2D shape{side(rng), side(rng)};
    const auto f = random_features(rng, dim(rng), shape);
    const auto m = random_mask(rng, shape, dens(rng));
    const int lh = std::uniform_int_distribution<int>(1, shape.rows)(rng);
    const int lw = std::uniform_int_distribution<int>(1, shape.cols)(rng);
    const double t = thr(rng);
    const auto got = pool_local_prototypes(f, m, {lh, lw}, t);
    const auto want = pooled_oracle(f, m, lh, lw, t);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
      for (int d = 0; d < f.dim(); ++d) worst = std::max(worst, std::abs(got[i].vector[d] - want[i][d]));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(GlobalPrototype, HandValues) {
  const auto f = grid_1d(2, 2, {1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(global_prototype(f, BinaryMask(2, 2, {1, 0, 0, 1})).vector[0], 2.5);
  const auto g = global_prototype(grid_1d(2, 2, {7, 7, 7, 7}), BinaryMask::filled({2, 2}, true));
  EXPECT_DOUBLE_EQ(g.vector[0], 7.0);
  EXPECT_FALSE(g.window.has_value());
  EXPECT_EQ(g.kind, PrototypeKind::kGlobal);
}

TEST(GlobalPrototype, EmptyMaskIsEmptySupport) {
  try {
    global_prototype(grid_1d(2, 2, {1, 2, 3, 4}), BinaryMask::filled({2, 2}, false));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySupport);
  }
}

TEST(GlobalPrototype, RandomMatchesWeightedSumOracle) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_features(rng, 4, {9, 7});
    auto m = random_mask(rng, {9, 7}, 0.3);
    if (!m.any()) continue;
    const auto p = global_prototype(f, m);
    for (int d = 0; d < 4; ++d) {
      double num = 0, den = 0;
      for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 7; ++c) {
          num += m.at(r, c) * f.at(d, r, c);
          den += m.at(r, c);
        }
      EXPECT_NEAR(p.vector[d], num / den, 1e-12);
    }
  }
}

TEST(Similarity, ScaledCosineAnchors) {
  const FeatureMap f(2, 1, 4, {1, 0, 0, 1, -1, 0, 0, 0});
  const Prototype p{{1, 0}};
  const auto s = similarity_map(p, f, 20.0);
  EXPECT_DOUBLE_EQ(s.at(0, 0), 20.0);
  EXPECT_DOUBLE_EQ(s.at(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(s.at(0, 2), -20.0);
  EXPECT_DOUBLE_EQ(s.at(0, 3), 0.0);  // zero-norm cell is neutral
  EXPECT_THROW(similarity_map(Prototype{{0, 0}}, f, 20.0), Error);
  EXPECT_THROW(similarity_map(Prototype{{1, 0, 0}}, f, 20.0), Error);
}

TEST(Similarity, ValuesStayWithinAlpha) {
  std::mt19937_64 rng(23);
  const auto f = random_features(rng, 6, {10, 10});
  const Prototype p{std::vector<double>(f.cell(3, 3).begin(), f.cell(3, 3).end())};
  const auto s = similarity_map(p, f, 20.0);
  for (double v : s.values) {
    ASSERT_LE(v, 20.0 + 1e-12);
    ASSERT_GE(v, -20.0 - 1e-12);
  }
  EXPECT_EQ(s.at(3, 3), 20.0);  // exact, not merely close
}

TEST(Fuse, IdentityAndSymmetry) {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> n(0, 5);
  SimilarityMap a{2, 3, std::vector<double>(6)};
  for (auto& v : a.values) v = n(rng);
  EXPECT_EQ(fuse_similarities(std::vector{a}).values, a.values);
  const auto twice = fuse_similarities(std::vector{a, a});
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(twice.values[i], a.values[i], 1e-12);
  EXPECT_THROW(fuse_similarities(std::vector<SimilarityMap>{}), Error);
  EXPECT_THROW(fuse_similarities(std::vector{a, constant_map({3, 2}, 0)}), Error);
}

TEST(Fuse, MatchesScalarOracle) {
  const std::vector<double> s{1.3, -4.0, 7.5};
  std::vector<SimilarityMap> maps;
  for (double v : s) maps.push_back(constant_map({1, 1}, v));
  double num = 0, den = 0;
  for (double v : s) {
    num += v * std::exp(v);
    den += std::exp(v);
  }
  EXPECT_NEAR(fuse_similarities(maps).values[0], num / den, 1e-12);
}

TEST(FuseProperty, ConvexCombinationBounds) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 6;
    std::vector<SimilarityMap> maps(k, SimilarityMap{3, 3, std::vector<double>(9)});
    for (auto& m : maps)
      for (auto& v : m.values) v = u(rng);
    const auto fused = fuse_similarities(maps);
    for (int i = 0; i < 9; ++i) {
      double lo = 1e9, hi = -1e9;
      for (const auto& m : maps) {
        lo = std::min(lo, m.values[i]);
        hi = std::max(hi, m.values[i]);
      }
      ASSERT_GE(fused.values[i], lo - 1e-12);
      ASSERT_LE(fused.values[i], hi + 1e-12);
    }
  }
}

TEST(NormalizeClasses, ClosedForms) {
  const auto eq = normalize_classes(constant_map({2, 2}, 3.0), constant_map({2, 2}, 3.0));
  EXPECT_DOUBLE_EQ(eq.foreground(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(eq.background(1, 1), 0.5);
  const auto ln3 = normalize_classes(constant_map({1, 1}, 1.0 + std::log(3.0)), constant_map({1, 1}, 1.0));
  EXPECT_NEAR(ln3.foreground(0, 0), 0.75, 1e-12);
  EXPECT_THROW(normalize_classes(constant_map({1, 2}, 0), constant_map({2, 1}, 0)), Error);
}

TEST(NormalizeClassesProperty, SumsToOneAndIsMonotone) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> u(-20, 20), step(0.01, 5);
  SimilarityMap fg{8, 8, std::vector<double>(64)}, bg{8, 8, std::vector<double>(64)};
  for (int trial = 0; trial < 50; ++trial) {
    for (auto& v : fg.values) v = u(rng);
    for (auto& v : bg.values) v = u(rng);
    const auto pm = normalize_classes(fg, bg);
    ASSERT_LE(pm.max_sum_error(), 1e-6);
    auto bumped = fg;
    const int i = trial % 64;
    bumped.values[i] += step(rng);
    const auto pm2 = normalize_classes(bumped, bg);
    ASSERT_GT(pm2.foreground(i / 8, i % 8), pm.foreground(i / 8, i % 8));
  }
}

TEST(MatchPrototypesProperty, PositiveScaleLeavesProbabilitiesUnchanged) {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> scale(0.01, 100);
  for (int trial = 0; trial < 20; ++trial) {
    const auto support = random_features(rng, 5, {8, 8});
    const auto query = random_features(rng, 5, {6, 6});
    auto mask = random_mask(rng, {8, 8}, 0.5);
    if (!mask.any()) continue;
    const ProtoSegConfig cfg{{2, 2}, 0.5, 20.0};
    const auto base = match_prototypes(build_prototypes(support, mask, cfg), query, 20.0);
    const double k = scale(rng);
    const auto scaled = match_prototypes(build_prototypes(support.scaled(k), mask, cfg), query.scaled(k), 20.0);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) ASSERT_NEAR(base.foreground(r, c), scaled.foreground(r, c), 1e-9);
  }
}

TEST(BuildPrototypes, TinyForegroundFallsBackToGlobal) {
  std::mt19937_64 rng(28);
  const auto f = random_features(rng, 4, {8, 8});
  std::vector<std::uint8_t> labels(64, 0);
  labels[9] = 1;
  const auto set = build_prototypes(f, BinaryMask(8, 8, labels), {});
  ASSERT_EQ(set.foreground.size(), 1u);
  EXPECT_EQ(set.foreground[0].kind, PrototypeKind::kGlobal);
  EXPECT_GE(set.background.size(), 2u);
  EXPECT_THROW(build_prototypes(f, BinaryMask::filled({8, 8}, false), {}), Error);
}

TEST(BuildPrototypes, AllForegroundSupportHasNoBackgroundPrototypes) {
  std::mt19937_64 rng(29);
  const auto f = random_features(rng, 4, {8, 8});
  const auto set = build_prototypes(f, BinaryMask::filled({8, 8}, true), {});
  EXPECT_TRUE(set.background.empty());
  const auto pm = match_prototypes(set, random_features(rng, 4, {5, 5}), 20.0);
  EXPECT_LE(pm.max_sum_error(), 1e-6);
}

TEST(CoarseSegment, AllForegroundSupportDoesNotCrash) {
  std::mt19937_64 rng(30);
  const auto img = testing::random_image(rng, {56, 56});
  const StubEncoder enc({.feature_dim = 16});
  const auto pm = coarse_segment(img, BinaryMask::filled({56, 56}, true), img, enc, {});
  EXPECT_EQ(pm.shape(), (Shape2D{56, 56}));
  EXPECT_LE(pm.max_sum_error(), 1e-6);
}

BinaryMask argmax(const ProbabilityMask& pm) {
  std::vector<std::uint8_t> labels(pm.shape().area());
  for (int r = 0; r < pm.rows(); ++r)
    for (int c = 0; c < pm.cols(); ++c) labels[static_cast<std::size_t>(r) * pm.cols() + c] = pm.foreground(r, c) > 0.5;
  return BinaryMask(pm.rows(), pm.cols(), std::move(labels));
}

TEST(CoarseSegment, SelfSegmentationWithIdealEncoder) {
  const testing::OneHotIntensityEncoder enc(4);
  // Disk on a flat background, support == query.
  std::vector<std::uint8_t> labels(96 * 96);
  for (int r = 0; r < 96; ++r)
    for (int c = 0; c < 96; ++c) labels[r * 96 + c] = (r - 40) * (r - 40) + (c - 52) * (c - 52) <= 24 * 24;
  const BinaryMask disk(96, 96, labels);
  const auto img = testing::two_level_image(disk, 0.2f, 0.8f);
  const auto pm = coarse_segment(img, disk, img, enc, {});
  EXPECT_GE(testing::dice_of(argmax(pm), disk), 0.95);
}

TEST(CoarseSegment, StubEncoderSelfSegmentation) {
  const StubEncoder enc;
  const auto mask = testing::box_mask({224, 224}, 56, 70, 167, 181);
  const auto img = testing::two_level_image(mask, 0.25f, 0.75f);
  const auto pm = coarse_segment(img, mask, img, enc, {});
  EXPECT_GE(testing::dice_of(argmax(pm), mask), 0.95);
}

TEST(CoarseSegment, SwappingSupportLabelsSwapsPlanes) {
  const testing::OneHotIntensityEncoder enc(1);
  const auto mask = testing::half_plane_mask({16, 16}, 8);
  const auto img = testing::two_level_image(mask, 0.2f, 0.8f);
  const ProtoSegConfig cfg{{4, 4}, 0.95, 20.0};
  const auto a = coarse_segment(img, mask, img, enc, cfg);
  const auto b = coarse_segment(img, mask.complement(), img, enc, cfg);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 16; ++c) {
      EXPECT_NEAR(a.foreground(r, c), b.background(r, c), 1e-12);
      EXPECT_NE(a.foreground(r, c) > 0.5, b.foreground(r, c) > 0.5);
    }
  }
}

}  // namespace
}  // namespace protoprompt
