#include <cstdlib>
#include <fstream>
#include <random>
#include <unistd.h>

#include <gtest/gtest.h>

#include "protoprompt/dataset.hpp"
#include "protoprompt/error.hpp"
#include "protoprompt/nifti.hpp"
#include "protoprompt/raster.hpp"
#include "protoprompt/report_io.hpp"
#include "protoprompt/superpixel_cache.hpp"
#include "protoprompt/synthetic_dataset.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace protoprompt {
namespace {

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pp_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
            std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

using PngIo = Scratch;

TEST_F(PngIo, GrayRgbAndSixteenBitRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> byte(0, 255), word(0, 65535);
  for (int channels : {1, 3}) {
    for (int depth : {8, 16}) {
      RawRaster raw{7, 5, channels, depth, {}};
      for (int i = 0; i < 7 * 5 * channels; ++i)
        raw.samples.push_back(static_cast<std::uint16_t>(depth == 8 ? byte(rng) : word(rng)));
      const auto path = dir_ / ("r" + std::to_string(channels) + "_" + std::to_string(depth) + ".png");
      write_png(path, raw);
      const auto back = read_png(path);
      EXPECT_EQ(back.rows, 7);
      EXPECT_EQ(back.cols, 5);
      EXPECT_EQ(back.channels, channels);
      EXPECT_EQ(back.bit_depth, depth);
      EXPECT_EQ(back.samples, raw.samples);
    }
  }
}

TEST_F(PngIo, ImagesScaleToUnitRangeAndMasksThresholdAtHalf) {
  write_png(dir_ / "g.png", RawRaster{1, 4, 1, 8, {0, 127, 128, 255}});
  const auto img = read_image_png(dir_ / "g.png");
  EXPECT_FLOAT_EQ(img.gray(0, 0), 0.f);
  EXPECT_FLOAT_EQ(img.gray(0, 3), 1.f);
  EXPECT_FLOAT_EQ(img.gray(0, 2), 128.f / 255.f);
  const auto mask = read_mask_png(dir_ / "g.png");
  EXPECT_EQ(std::vector<std::uint8_t>(mask.labels().begin(), mask.labels().end()),
            (std::vector<std::uint8_t>{0, 0, 1, 1}));
  const auto m = testing::box_mask({6, 6}, 1, 2, 3, 4);
  write_mask_png(dir_ / "m.png", m);
  EXPECT_EQ(read_mask_png(dir_ / "m.png"), m);
  const auto raw = read_png(dir_ / "m.png");
  for (auto v : raw.samples) EXPECT_TRUE(v == 0 || v == 255);
}

TEST_F(PngIo, RejectsNonPngAndMissingFiles) {
  std::ofstream(dir_ / "x.png") << "definitely not a png";
  EXPECT_EQ(code_of([&] { read_png(dir_ / "x.png"); }), ErrorCode::kCorruptDataset);
  EXPECT_EQ(code_of([&] { read_png(dir_ / "nope.png"); }), ErrorCode::kIoError);
}

using NiftiIo = Scratch;

TEST_F(NiftiIo, RoundTripAcrossTypesAndCompression) {
  NiftiVolume vol;
  vol.dims = {5, 4, 3};
  vol.spacing = {0.5f, 0.75f, 2.f};
  for (std::size_t i = 0; i < vol.voxel_count(); ++i) vol.voxels.push_back(static_cast<double>(i % 17) - 3.0);
  for (auto type : {NiftiType::kInt16, NiftiType::kInt32, NiftiType::kFloat32, NiftiType::kFloat64}) {
    for (const char* name : {"v.nii", "v.nii.gz"}) {
      write_nifti(dir_ / name, vol, type);
      const auto back = read_nifti(dir_ / name);
      EXPECT_EQ(back.dims, vol.dims);
      EXPECT_EQ(back.spacing, vol.spacing);
      EXPECT_EQ(back.voxels, vol.voxels);
    }
  }
  // The compressed file really is gzip.
  std::ifstream gz(dir_ / "v.nii.gz", std::ios::binary);
  unsigned char magic[2] = {};
  gz.read(reinterpret_cast<char*>(magic), 2);
  EXPECT_EQ(magic[0], 0x1f);
  EXPECT_EQ(magic[1], 0x8b);
}

TEST_F(NiftiIo, AppliesScaleSlopeAndIntercept) {
  NiftiVolume vol;
  vol.dims = {2, 2, 1};
  vol.voxels = {0, 1, 2, 3};
  write_nifti(dir_ / "s.nii", vol, NiftiType::kInt16);
  // Patch scl_slope = 2, scl_inter = -1 in the header.
  std::fstream f(dir_ / "s.nii", std::ios::in | std::ios::out | std::ios::binary);
  const float slope = 2.f, inter = -1.f;
  f.seekp(112);
  f.write(reinterpret_cast<const char*>(&slope), 4);
  f.write(reinterpret_cast<const char*>(&inter), 4);
  f.close();
  EXPECT_EQ(read_nifti(dir_ / "s.nii").voxels, (std::vector<double>{-1, 1, 3, 5}));
}

TEST_F(NiftiIo, ReadsByteSwappedHeaders) {
  NiftiVolume vol;
  vol.dims = {3, 2, 2};
  vol.voxels = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  write_nifti(dir_ / "le.nii", vol, NiftiType::kInt16);
  std::ifstream in(dir_ / "le.nii", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto swap_at = [&](std::size_t off, int width) { std::reverse(bytes.begin() + off, bytes.begin() + off + width); };
  swap_at(0, 4);
  for (int i = 0; i < 8; ++i) swap_at(40 + 2 * i, 2);
  swap_at(70, 2);
  swap_at(72, 2);
  for (int i = 0; i < 8; ++i) swap_at(76 + 4 * i, 4);
  for (std::size_t off : {108u, 112u, 116u}) swap_at(off, 4);
  for (std::size_t i = 0; i < 12; ++i) swap_at(352 + 2 * i, 2);
  std::ofstream(dir_ / "be.nii", std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  EXPECT_EQ(read_nifti(dir_ / "be.nii").voxels, vol.voxels);
}

TEST_F(NiftiIo, TruncatedFileIsCorrupt) {
  std::ofstream(dir_ / "t.nii") << std::string(100, '\0');
  EXPECT_EQ(code_of([&] { read_nifti(dir_ / "t.nii"); }), ErrorCode::kCorruptDataset);
}

TEST(Normalization, CtWindowAnchors) {
  NormalizationConfig cfg;
  cfg.modality = Modality::kCT;
  const std::vector<double> hu{-1000, -160, 40, 240, 3000};
  const auto out = normalize_intensities(hu, cfg);
  EXPECT_EQ(out, (std::vector<float>{0.f, 0.f, 0.5f, 1.f, 1.f}));
}

TEST(Normalization, ConstantVolumeMapsToZero) {
  const std::vector<double> flat(50, 312.0);
  for (float v : normalize_intensities(flat, {})) ASSERT_EQ(v, 0.f);
}

TEST(Normalization, MriClipsAtPercentiles) {
  // 1000 values 0..999: the 0.5th percentile rounds down to 4, the 99.5th up to 995.
  std::vector<double> raw(1000);
  std::iota(raw.begin(), raw.end(), 0.0);
  const auto out = normalize_intensities(raw, {});
  EXPECT_EQ(out[0], 0.f);
  EXPECT_EQ(out[4], 0.f);
  EXPECT_FLOAT_EQ(out[5], 1.f / 991.f);
  EXPECT_EQ(out[995], 1.f);
  EXPECT_EQ(out[999], 1.f);
}

TEST(NormalizationProperty, PercentileAndEndoscopyAreIdempotent) {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> skewed(5.0, 1.0);
  std::uniform_int_distribution<int> len(1, 3000);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> raw(len(rng));
    for (auto& v : raw) v = skewed(rng);
    for (auto m : {Modality::kMRI, Modality::kEndoscopy}) {
      NormalizationConfig cfg;
      cfg.modality = m;
      const auto once = normalize_intensities(raw, cfg);
      const std::vector<double> again(once.begin(), once.end());
      ASSERT_EQ(normalize_intensities(again, cfg), once) << "trial " << trial;
    }
  }
}

using Volumes = Scratch;

Volume three_slice_volume() {
  Volume v;
  v.scan_id = "fixture";
  std::mt19937_64 rng(5);
  for (int z = 0; z < 3; ++z) {
    v.images.push_back(testing::random_image(rng, {6, 9}));
    LabelSlice l{6, 9, std::vector<std::uint16_t>(54, 0)};
    l.labels[z * 9 + z] = static_cast<std::uint16_t>(z + 1);
    v.labels.push_back(l);
  }
  return v;
}

TEST_F(Volumes, ThreeSliceFixtureRoundTripsInOrder) {
  const auto vol = three_slice_volume();
  for (auto format : {VolumeFormat::kNifti, VolumeFormat::kPngSlices}) {
    const auto dir = dir_ / (format == VolumeFormat::kNifti ? "nii" : "png");
    write_volume(dir, vol, format);
    const auto back = load_volume(dir, {});
    ASSERT_EQ(back.slices(), 3);
    for (int z = 0; z < 3; ++z) {
      EXPECT_EQ(back.images[z].shape(), (Shape2D{6, 9}));
      EXPECT_EQ(back.labels[z].labels, vol.labels[z].labels) << "slice " << z;
      EXPECT_TRUE(back.labels[z].contains(z + 1));
    }
    const auto stack = back.class_stack(2);
    EXPECT_EQ(stack[1].mask.count(), 1u);
    EXPECT_EQ(stack[0].mask.count(), 0u);
  }
}

TEST_F(Volumes, PngSlicesSortNumerically) {
  for (int k : {10, 2, 1}) {
    write_png(dir_ / ("image_" + std::to_string(k) + ".png"), RawRaster{2, 2, 1, 8, std::vector<std::uint16_t>(4, k)});
    write_png(dir_ / ("label_" + std::to_string(k) + ".png"), RawRaster{2, 2, 1, 8, std::vector<std::uint16_t>(4, k)});
  }
  const auto labels = load_labels(dir_);
  ASSERT_EQ(labels.size(), 3u);
  EXPECT_EQ(labels[0].labels[0], 1);
  EXPECT_EQ(labels[1].labels[0], 2);
  EXPECT_EQ(labels[2].labels[0], 10);
}

TEST_F(Volumes, MissingLabelFileIsNamed) {
  write_volume(dir_ / "scan", three_slice_volume(), VolumeFormat::kPngSlices);
  fs::remove(dir_ / "scan" / "label_001.png");
  EXPECT_EQ(code_of([&] { load_volume(dir_ / "scan", {}); }), ErrorCode::kCorruptDataset);
  EXPECT_NE(message_of([&] { load_volume(dir_ / "scan", {}); }).find("label_001.png"), std::string::npos);

  write_volume(dir_ / "nii", three_slice_volume(), VolumeFormat::kNifti);
  fs::remove(dir_ / "nii" / "label.nii.gz");
  EXPECT_NE(message_of([&] { load_volume(dir_ / "nii", {}); }).find("label.nii.gz"), std::string::npos);
}

TEST_F(Volumes, ImageLabelShapeMismatchIsCorrupt) {
  NiftiVolume image, label;
  image.dims = {4, 4, 2};
  image.voxels.assign(32, 1.0);
  label.dims = {4, 4, 3};
  label.voxels.assign(48, 0.0);
  write_nifti(dir_ / "image.nii", image);
  write_nifti(dir_ / "label.nii", label, NiftiType::kUInt8);
  EXPECT_EQ(code_of([&] { load_volume(dir_, {}); }), ErrorCode::kCorruptDataset);
}

TEST_F(Volumes, ConstantVolumeNormalisesToZero) {
  auto vol = three_slice_volume();
  for (auto& img : vol.images) img = Image2D::constant(img.shape(), 0.4f);
  write_volume(dir_ / "c", vol, VolumeFormat::kNifti);
  for (const auto& img : load_volume(dir_ / "c", {}).images)
    for (float v : img.pixels()) ASSERT_EQ(v, 0.f);
}

using Manifests = Scratch;

void write_pairs(const fs::path& subset_dir, int n, Shape2D shape = {8, 8}) {
  for (int i = 0; i < n; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "%04d.png", i);
    write_png(subset_dir / "images" / name, RawRaster{shape.rows, shape.cols, 1, 8, std::vector<std::uint16_t>(shape.area(), 100)});
    write_png(subset_dir / "masks" / name, RawRaster{shape.rows, shape.cols, 1, 8, std::vector<std::uint16_t>(shape.area(), 255)});
  }
}

TEST_F(Manifests, FiveImagePairsStableAcrossBuilds) {
  write_pairs(dir_ / "set", 5);
  ManifestConfig cfg;
  cfg.normalization.modality = Modality::kEndoscopy;
  const auto a = build_manifest(dir_, cfg);
  EXPECT_EQ(a.layout, DatasetLayout::kImagePairs);
  ASSERT_EQ(a.items.size(), 5u);
  EXPECT_EQ(a.items[0].image, "set/images/0000.png");
  EXPECT_EQ(a.items[4].mask, "set/masks/0004.png");
  EXPECT_EQ(build_manifest(dir_, cfg).to_json().dump(), a.to_json().dump());
}

TEST_F(Manifests, PolypSplitSizesMatchDefaults) {
  const std::map<std::string, int> expected{
      {"CVC-ClinicDB", 100}, {"Kvasir", 64}, {"CVC-ColonDB", 380}, {"ETIS-LaribPolypDB", 196}};
  for (const auto& [subset, n] : expected) write_pairs(dir_ / subset, n + 3, {4, 4});
  const auto m = build_manifest(dir_, {});
  for (const auto& [subset, n] : expected) {
    EXPECT_EQ(m.split_counts.at(subset).at("test"), n) << subset;
    EXPECT_EQ(m.split_counts.at(subset).at("train"), 3) << subset;
  }
  // Each subset supports all of its test images from one training image.
  const auto plans = plan_image_pairs(m);
  EXPECT_EQ(plans.size(), 100u + 64u + 380u + 196u);
}

TEST_F(Manifests, MissingMaskAndOversizedSplitAreCorrupt) {
  write_pairs(dir_ / "Kvasir", 3);
  ManifestConfig cfg;
  EXPECT_EQ(code_of([&] { build_manifest(dir_, cfg); }), ErrorCode::kCorruptDataset);  // needs 64
  cfg.test_split_sizes = {{"Kvasir", 2}};
  fs::remove(dir_ / "Kvasir" / "masks" / "0001.png");
  EXPECT_NE(message_of([&] { build_manifest(dir_, cfg); }).find("0001.png"), std::string::npos);
}

TEST_F(Manifests, EmptyAndMissingRoots) {
  EXPECT_EQ(code_of([&] { build_manifest(dir_, {}); }), ErrorCode::kEmptyDataset);
  EXPECT_EQ(code_of([&] { build_manifest(dir_ / "absent", {}); }), ErrorCode::kIoError);
}

TEST_F(Manifests, ExcludeTestClassDropsItsSlices) {
  // Ten slices, liver (label 1) on three of them, spleen on all.
  Volume vol;
  std::mt19937_64 rng(9);
  for (int z = 0; z < 10; ++z) {
    vol.images.push_back(testing::random_image(rng, {8, 8}));
    LabelSlice l{8, 8, std::vector<std::uint16_t>(64, 4)};
    if (z >= 4 && z < 7) l.labels[0] = 1;
    vol.labels.push_back(l);
  }
  write_volume(dir_ / "scan_a", vol, VolumeFormat::kNifti);
  const auto m = build_manifest(dir_, {});
  ASSERT_EQ(m.items.size(), 10u);
  const auto kept = training_items(m, {"liver", SplitSetting::kExcludeTestClass});
  EXPECT_EQ(kept.size(), 7u);
  for (const auto& item : kept)
    EXPECT_EQ(std::count(item.classes.begin(), item.classes.end(), "liver"), 0);
  EXPECT_EQ(training_items(m, {"liver", SplitSetting::kStandard}).size(), 10u);
}

TEST_F(Manifests, FoldsPartitionScansAndPairsCrossFolds) {
  synthetic::VolumeDatasetSpec spec;
  spec.scans = 7;
  spec.slices = 10;
  spec.shape = {32, 32};
  synthetic::write_volume_dataset(dir_, spec);
  const auto m = build_manifest(dir_, {});
  ASSERT_EQ(m.scans().size(), 7u);
  std::map<int, int> per_fold;
  for (const auto& [scan, fold] : m.folds) ++per_fold[fold];
  EXPECT_EQ(per_fold.size(), 5u);
  EXPECT_EQ(per_fold[0], 2);
  EXPECT_EQ(per_fold[4], 1);
  const auto plans = plan_volume_pairs(m, {"liver", "spleen"});
  EXPECT_EQ(plans.size(), 14u);
  for (const auto& p : plans) {
    EXPECT_NE(p.support_scan, p.query_scan);
    EXPECT_NE(m.folds.at(p.support_scan), m.folds.at(p.query_scan));
    EXPECT_EQ(p.fold, m.folds.at(p.query_scan));
  }
  EXPECT_EQ(code_of([&] { plan_volume_pairs(m, {"pancreas"}); }), ErrorCode::kClassNotFound);
}

TEST_F(Manifests, OracleEvaluationOverSyntheticDatasetIsPerfect) {
  synthetic::VolumeDatasetSpec spec;
  spec.scans = 5;
  spec.slices = 9;
  spec.shape = {32, 32};
  spec.format = VolumeFormat::kPngSlices;
  synthetic::write_volume_dataset(dir_, spec);
  ManifestConfig cfg;
  const auto m = build_manifest(dir_, cfg);
  EvalReport report;
  for (const auto& plan : plan_volume_pairs(m, {"lk", "rk", "spleen", "liver"})) {
    const auto pair = load_pair(m, plan, cfg);
    const SegmentFn oracle = [&pair](const Image2D&, const BinaryMask&, const Image2D& q) {
      for (const auto& s : pair.query)
        if (s.image == q) return s.mask;
      throw std::logic_error("unknown query");
    };
    report.volumes.push_back(evaluate_volume(oracle, pair));
  }
  for (const auto& cs : summarize(report)) {
    EXPECT_DOUBLE_EQ(cs.dice.mean, 1.0) << cs.class_id;
    EXPECT_DOUBLE_EQ(cs.dice.std, 0.0) << cs.class_id;
  }
}

TEST(DatasetRoot, EnvironmentOverride) {
  ::unsetenv(kDatasetRootEnv);
  EXPECT_EQ(resolve_dataset_root("data/x"), fs::path("data/x"));
  ::setenv(kDatasetRootEnv, "/mnt/elsewhere", 1);
  EXPECT_EQ(resolve_dataset_root("data/x"), fs::path("/mnt/elsewhere"));
  ::unsetenv(kDatasetRootEnv);
}

using Cache = Scratch;

TEST_F(Cache, SecondLookupHitsAndMatches) {
  std::mt19937_64 rng(4);
  const auto img = testing::random_image(rng, {24, 24});
  SuperpixelCache cache(dir_);
  const SuperpixelParams params{50.0, 0.5, 20};
  const auto first = cache.get(img, params);
  const auto second = cache.get(img, params);
  EXPECT_EQ(cache.misses(), 1);
  EXPECT_EQ(cache.hits(), 1);
  EXPECT_EQ(first.labels, second.labels);
  EXPECT_EQ(first.num_segments, second.num_segments);
  EXPECT_NE(cache.entry_path(hash_image(img), params), cache.entry_path(hash_image(img), {50.0, 0.5, 21}));
  cache.get(img, {50.0, 0.5, 21});
  EXPECT_EQ(cache.misses(), 2);
}

TEST(Hashing, FnvReferenceVectors) {
  const std::string a = "a", foobar = "foobar";
  EXPECT_EQ(fnv1a64({}), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64({reinterpret_cast<const std::uint8_t*>(a.data()), a.size()}), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64({reinterpret_cast<const std::uint8_t*>(foobar.data()), foobar.size()}), 0x85944171f73967e8ULL);
}

using Reports = Scratch;

EvalReport sample_report(int folds) {
  EvalReport r;
  r.dataset = "synthetic";
  r.seed = 0xfeedfacecafebeefULL;
  r.folds = folds;
  r.config = {{"protoseg.alpha", 20.0}};
  for (const char* cls : {"liver", "spleen", "lk", "rk"}) {
    for (int f = 0; f < folds; ++f) {
      VolumeResult v{cls, "s" + std::to_string(f), "q" + std::to_string(f), f, {}};
      for (int k = 0; k < 3; ++k) {
        SliceRecord s;
        s.slice = k;
        s.section = k;
        s.support_slice = k;
        s.counts = {static_cast<std::size_t>(10 + f), static_cast<std::size_t>(20 + k), 15};
        v.slices.push_back(s);
      }
      r.volumes.push_back(v);
    }
  }
  return r;
}

TEST_F(Reports, JsonRoundTripIsLossless) {
  const auto r = sample_report(5);
  persist_report(r, dir_ / "r.json");
  EXPECT_EQ(load_report(dir_ / "r.json"), r);
}

TEST_F(Reports, SchemaViolationsAreRejected) {
  auto j = report_to_json(sample_report(2));
  j.erase("folds");
  EXPECT_EQ(code_of([&] { report_from_json(j); }), ErrorCode::kSchemaError);
  j = report_to_json(sample_report(2));
  j["schema_version"] = 99;
  EXPECT_EQ(code_of([&] { report_from_json(j); }), ErrorCode::kSchemaError);
  j = report_to_json(sample_report(2));
  j["volumes"][0]["slices"][0].erase("truth");
  EXPECT_EQ(code_of([&] { report_from_json(j); }), ErrorCode::kSchemaError);
  std::ofstream(dir_ / "bad.json") << "{ nope";
  EXPECT_EQ(code_of([&] { load_report(dir_ / "bad.json"); }), ErrorCode::kSchemaError);
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST_F(Reports, FoldCsvHasFiveFoldRowsAndOneAggregatePerClass) {
  write_fold_csv(sample_report(5), dir_ / "folds.csv");
  const auto lines = lines_of(dir_ / "folds.csv");
  EXPECT_EQ(lines[0], "class,fold,dice,iou,volumes");
  for (const char* cls : {"lk", "rk", "spleen", "liver", "mean"}) {
    int fold_rows = 0, agg_rows = 0;
    for (const auto& l : lines) {
      if (l.rfind(std::string(cls) + ",", 0) != 0) continue;
      (l.find("mean±std") != std::string::npos ? agg_rows : fold_rows)++;
    }
    EXPECT_EQ(fold_rows, 5) << cls;
    EXPECT_EQ(agg_rows, 1) << cls;
  }
}

TEST_F(Reports, ClassTableUsesOrganColumns) {
  write_class_table_csv(sample_report(5), "stub", dir_ / "table.csv");
  const auto lines = lines_of(dir_ / "table.csv");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "method,LK,RK,Spleen,Liver,Mean");
  EXPECT_EQ(lines[1].rfind("stub,", 0), 0u);
}

TEST_F(Reports, WilcoxonTableAndChart) {
  const auto r = sample_report(5);
  write_wilcoxon_csv(compare_reports(r, r), "A vs B", dir_ / "w.csv");
  const auto lines = lines_of(dir_ / "w.csv");
  EXPECT_EQ(lines[0], "comparison,p_value");
  EXPECT_EQ(lines[1], "A vs B (all),1");
  write_bar_chart_svg({{"LK", 0.8, 0.05}, {"RK & co", 0.6, 0.0}}, "Dice", dir_ / "c.svg");
  std::ifstream in(dir_ / "c.svg");
  const std::string svg((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("RK &amp; co"), std::string::npos);
}

}  // namespace
}  // namespace protoprompt
