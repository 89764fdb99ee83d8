#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "protoprompt/error.hpp"
#include "protoprompt/segmenter.hpp"
#include "test_support.hpp"

namespace protoprompt {
namespace {

PromptBundle bundle_for(Shape2D frame, std::optional<BoundingBox> box, std::vector<PointPrompt> points,
                        PromptSet enabled) {
  PromptBundle b;
  b.frame = frame;
  b.bbox = box;
  b.points = std::move(points);
  b.enabled = enabled;
  if (box) {
    for (int r = box->row_min; r <= box->row_max; ++r)
      for (int c = box->col_min; c <= box->col_max; ++c) b.source_component.pixels.push_back({r, c});
  }
  return b;
}

TEST(StubSegmenter, BoxFillFillsExactlyTheBox) {
  const StubSegmenter seg(StubSegmenterMode::kBoxFill);
  const auto img = Image2D::constant({8, 8}, 0.5f);
  const auto out = seg.segment(img, bundle_for({8, 8}, BoundingBox{2, 2, 5, 5}, {}, {PromptKind::kBbox}));
  EXPECT_EQ(out.mask, testing::box_mask({8, 8}, 2, 2, 5, 5));
}

TEST(StubSegmenter, BoxFillWithoutBoxUsesPositivePoints) {
  const StubSegmenter seg(StubSegmenterMode::kBoxFill);
  const auto img = Image2D::constant({8, 8}, 0.5f);
  const std::vector<PointPrompt> pts{{1, 6, Polarity::kPositive, PromptKind::kConf},
                                     {3, 2, Polarity::kPositive, PromptKind::kCent},
                                     {7, 7, Polarity::kNegative, PromptKind::kNeg}};
  const auto out = seg.segment(img, bundle_for({8, 8}, std::nullopt, pts, PromptSet::parse("conf,cent,neg")));
  EXPECT_EQ(out.mask, testing::box_mask({8, 8}, 1, 2, 3, 6));
}

TEST(StubSegmenter, ComponentEchoReturnsSourceComponent) {
  const StubSegmenter seg(StubSegmenterMode::kComponentEcho);
  auto b = bundle_for({6, 6}, BoundingBox{0, 0, 1, 2}, {}, {PromptKind::kBbox});
  b.source_component.pixels = {{0, 0}, {1, 1}, {1, 2}};
  const auto out = seg.segment(Image2D::constant({6, 6}, 0.f), b);
  EXPECT_EQ(out.mask, b.component_mask());
  EXPECT_EQ(out.mask.count(), 3u);
}

TEST(StubSegmenter, RejectsUnacceptedNegativePoints) {
  const StubSegmenter seg(StubSegmenterMode::kBoxFill, PromptSet::parse("bbox,cent,conf"));
  const std::vector<PointPrompt> pts{{7, 7, Polarity::kNegative, PromptKind::kNeg}};
  try {
    seg.segment(Image2D::constant({8, 8}, 0.f), bundle_for({8, 8}, BoundingBox{2, 2, 5, 5}, pts,
                                                           PromptSet::parse("bbox,neg")));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

TEST(StubSegmenter, RejectsFrameMismatch) {
  const StubSegmenter seg(StubSegmenterMode::kBoxFill);
  EXPECT_THROW(seg.segment(Image2D::constant({8, 8}, 0.f), bundle_for({9, 8}, BoundingBox{0, 0, 1, 1}, {},
                                                                       {PromptKind::kBbox})),
               Error);
}

TEST(Registry, NamesAndAcceptedPrompts) {
  EXPECT_EQ(make_segmenter("stub")->name(), "stub-box-fill");
  EXPECT_EQ(make_segmenter("stub-component-echo")->name(), "stub-component-echo");
  EXPECT_EQ(make_segmenter("external-huge")->accepts(), PromptSet::all());
  EXPECT_EQ(make_segmenter("external-base")->name(), "external-base");
  EXPECT_EQ(make_segmenter("external-medsam-base")->accepts(), (PromptSet{PromptKind::kBbox}));
  EXPECT_THROW(make_segmenter("sam-xl"), Error);
}

TEST(PromptJson, WireFormat) {
  const auto b = bundle_for({8, 9}, BoundingBox{1, 2, 3, 4}, {{5, 6, Polarity::kNegative, PromptKind::kNeg}},
                            PromptSet::parse("bbox,neg"));
  const auto j = nlohmann::json::parse(prompts_to_json(b));
  EXPECT_EQ(j["frame"], nlohmann::json({8, 9}));
  EXPECT_EQ(j["bbox"], nlohmann::json({1, 2, 3, 4}));
  EXPECT_EQ(j["points"][0]["label"], 0);
  EXPECT_EQ(j["points"][0]["kind"], "neg");
}

class ExternalSegmenterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("pp_seg_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
    std::ofstream(dir_ / "sam.pth") << "w";
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(ExternalSegmenterTest, PicksHighestScoringCandidate) {
  ExternalSegmenter seg({.variant = ExternalSegmenterVariant::kBase, .command = FAKE_BACKEND,
                         .weights_path = dir_ / "sam.pth"});
  const auto out = seg.segment(Image2D::constant({10, 12}, 0.3f),
                               bundle_for({10, 12}, BoundingBox{2, 3, 6, 9}, {}, {PromptKind::kBbox}));
  EXPECT_DOUBLE_EQ(out.score, 0.9);
  EXPECT_EQ(out.mask, testing::box_mask({10, 12}, 2, 3, 6, 9));
}

TEST_F(ExternalSegmenterTest, MissingWeightsIsBackendUnavailable) {
  ExternalSegmenter seg({.command = FAKE_BACKEND, .weights_path = dir_ / "missing.pth"});
  try {
    seg.segment(Image2D::constant({4, 4}, 0.f), bundle_for({4, 4}, BoundingBox{0, 0, 1, 1}, {}, {PromptKind::kBbox}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendUnavailable);
  }
}

TEST_F(ExternalSegmenterTest, MedSamRejectsPointsBeforeCallingBackend) {
  ExternalSegmenter seg({.variant = ExternalSegmenterVariant::kMedSamBase, .command = "false",
                         .weights_path = dir_ / "sam.pth"});
  const std::vector<PointPrompt> pts{{1, 1, Polarity::kPositive, PromptKind::kConf}};
  try {
    seg.segment(Image2D::constant({4, 4}, 0.f),
                bundle_for({4, 4}, BoundingBox{0, 0, 1, 1}, pts, PromptSet::parse("bbox,conf")));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
}

}  // namespace
}  // namespace protoprompt
