#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include <gtest/gtest.h>

#include "protoprompt/encoder.hpp"
#include "protoprompt/error.hpp"
#include "test_support.hpp"

namespace protoprompt {
namespace {

using testing::random_image;

std::vector<double> values_of(const FeatureMap& f) { return {f.values().begin(), f.values().end()}; }

TEST(StubEncoder, IsDeterministic) {
  std::mt19937_64 rng(3);
  const auto img = random_image(rng, {50, 61}, 3);
  const StubEncoder a({.feature_dim = 32, .patch_stride = 14, .seed = 5});
  const StubEncoder b({.feature_dim = 32, .patch_stride = 14, .seed = 5});
  const auto fa = values_of(a.encode(img));
  EXPECT_EQ(fa, values_of(a.encode(img)));
  EXPECT_EQ(fa, values_of(b.encode(img)));
  const StubEncoder c({.feature_dim = 32, .patch_stride = 14, .seed = 6});
  EXPECT_NE(fa, values_of(c.encode(img)));
}

TEST(StubEncoder, Stride14On672Gives48x48) {
  std::mt19937_64 rng(4);
  const StubEncoder enc({.feature_dim = 16, .patch_stride = 14});
  const auto fmap = enc.encode(random_image(rng, {672, 672}));
  EXPECT_EQ(fmap.shape(), (Shape2D{672 / 14, 672 / 14}));
  EXPECT_EQ(fmap.dim(), 16);
}

TEST(StubEncoder, DistinguishesFlatRegionsOfDifferentIntensity) {
  const StubEncoder enc;
  const auto dark = enc.encode(Image2D::constant({28, 28}, 0.2f));
  const auto light = enc.encode(Image2D::constant({28, 28}, 0.8f));
  auto cosine = [](std::span<const double> x, std::span<const double> y) {
    double xy = 0, xx = 0, yy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xy += x[i] * y[i];
      xx += x[i] * x[i];
      yy += y[i] * y[i];
    }
    return xy / std::sqrt(xx * yy);
  };
  EXPECT_NEAR(cosine(dark.cell(0, 0), dark.cell(1, 1)), 1.0, 1e-12);
  EXPECT_LT(cosine(dark.cell(0, 0), light.cell(0, 0)), 0.5);
}

TEST(EncoderProperty, ShapeContractOverRandomSizes) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> side(32, 700);
  std::uniform_int_distribution<int> stride(1, 16);
  for (int trial = 0; trial < 25; ++trial) {
    const Shape2D shape{side(rng), side(rng)};
    const int s = trial % 2 == 0 ? 14 : stride(rng);
    const StubEncoder stub({.feature_dim = 8, .patch_stride = s});
    const testing::OneHotIntensityEncoder onehot(s);
    const auto img = random_image(rng, shape);
    const Shape2D expected{(shape.rows + s - 1) / s, (shape.cols + s - 1) / s};
    for (const EncoderBackend* enc : {static_cast<const EncoderBackend*>(&stub),
                                      static_cast<const EncoderBackend*>(&onehot)}) {
      const auto fmap = enc->encode(img);
      ASSERT_EQ(fmap.shape(), expected) << enc->name() << " " << to_string(shape) << " stride " << s;
      ASSERT_EQ(enc->output_shape(shape), expected);
      for (double v : fmap.values()) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(ReflectPad, MirrorsWithoutRepeatingTheEdge) {
  const Image2D img(1, 3, 1, {0.1f, 0.2f, 0.3f});
  const auto padded = reflect_pad_to_multiple(img, 5);
  ASSERT_EQ(padded.shape(), (Shape2D{5, 5}));
  EXPECT_FLOAT_EQ(padded.at(0, 3), 0.2f);
  EXPECT_FLOAT_EQ(padded.at(0, 4), 0.1f);
  EXPECT_EQ(reflect_pad_to_multiple(img, 1), img);
}

class ExternalEncoderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("pp_enc_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
    weights_ = dir_ / "weights.bin";
    std::ofstream(weights_) << "w";
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::filesystem::path dir_, weights_;
};

TEST_F(ExternalEncoderTest, MissingWeightsIsBackendUnavailable) {
  ExternalEncoder enc({.command = FAKE_BACKEND, .weights_path = dir_ / "absent.pt"});
  try {
    enc.encode(Image2D::constant({28, 28}, 0.5f));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendUnavailable);
    EXPECT_NE(std::string(e.what()).find("weights_path"), std::string::npos);
  }
}

TEST_F(ExternalEncoderTest, FeatureDimMatchesBackendOn672) {
  ExternalEncoder enc({.command = FAKE_BACKEND, .weights_path = weights_, .model = "fake-6-14", .feature_dim = 6});
  std::mt19937_64 rng(12);
  const auto fmap = enc.encode(random_image(rng, {672, 672}, 3));
  EXPECT_EQ(fmap.dim(), 6);
  EXPECT_EQ(fmap.shape(), (Shape2D{48, 48}));
  // Non-multiple input is padded before it reaches the helper.
  EXPECT_EQ(enc.encode(random_image(rng, {40, 30})).shape(), (Shape2D{3, 3}));
}

TEST_F(ExternalEncoderTest, DimensionMismatchIsReported) {
  ExternalEncoder enc({.command = FAKE_BACKEND, .weights_path = weights_, .model = "fake-6-14", .feature_dim = 7});
  EXPECT_THROW(enc.encode(Image2D::constant({28, 28}, 0.5f)), Error);
}

TEST_F(ExternalEncoderTest, FailingCommandIsBackendUnavailable) {
  ExternalEncoder enc({.command = "false", .weights_path = weights_});
  try {
    enc.encode(Image2D::constant({28, 28}, 0.5f));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendUnavailable);
  }
}

}  // namespace
}  // namespace protoprompt
