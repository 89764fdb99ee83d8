#pragma once

// Dataset ingestion: scan volumes, 2D image/mask collections, intensity
// normalisation, fold assignment and the training-slice filter. The on-disk
// layouts are described in docs/datasets.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoprompt/eval.hpp"
#include "protoprompt/types.hpp"

namespace protoprompt {

enum class Modality { kCT, kMRI, kEndoscopy };

const char* to_string(Modality modality);
Modality parse_modality(const std::string& text);

struct NormalizationConfig {
  Modality modality = Modality::kMRI;
  // Abdominal soft-tissue window in Hounsfield units.
  double ct_window_min = -160.0;
  double ct_window_max = 240.0;
  // Per-volume percentile clipping for MRI, in percent.
  double mri_low_percentile = 0.5;
  double mri_high_percentile = 99.5;
};

// Maps raw intensities of one volume to [0, 1]. CT: fixed window. MRI:
// clip to the percentile pair and rescale; the low percentile rounds down
// and the high one up to the nearest order statistic. Endoscopy: values are
// already in [0, 1] and are only clamped. A degenerate range maps to 0.
std::vector<float> normalize_intensities(std::span<const double> raw, const NormalizationConfig& config);

struct LabelSlice {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint16_t> labels;

  Shape2D shape() const { return {rows, cols}; }
  bool contains(int value) const;
  BinaryMask mask_of(int value) const;
};

struct Volume {
  std::string scan_id;
  std::vector<Image2D> images;  // axial order
  std::vector<LabelSlice> labels;

  int slices() const { return static_cast<int>(images.size()); }
  std::vector<AnnotatedSlice> class_stack(int class_value) const;
};

// `scan_dir` holds either image.nii[.gz] + label.nii[.gz] or numbered
// image_<k>.png / label_<k>.png slices. A slice of a NIfTI volume is the
// (y, x) plane at fixed z, with rows along y.
Volume load_volume(const std::filesystem::path& scan_dir, const NormalizationConfig& config);

// The label half of load_volume, without reading or normalising images.
std::vector<LabelSlice> load_labels(const std::filesystem::path& scan_dir);

enum class VolumeFormat { kNifti, kPngSlices };

// Writes image.nii.gz/label.nii.gz (float32 intensities, uint16 labels) or
// 16-bit PNG slices holding round(65535 * intensity).
void write_volume(const std::filesystem::path& scan_dir, const Volume& volume, VolumeFormat format);

enum class DatasetLayout { kVolumes, kImagePairs };

struct ManifestConfig {
  NormalizationConfig normalization;
  std::map<std::string, int> classes{{"liver", 1}, {"rk", 2}, {"lk", 3}, {"spleen", 4}};
  int folds = 5;
  // For image-pair collections: the first N items (in sorted order) of each
  // listed subset form its test split, the rest its training split. Subsets
  // not listed are entirely test data.
  std::map<std::string, int> test_split_sizes{
      {"CVC-ClinicDB", 100}, {"Kvasir", 64}, {"CVC-ColonDB", 380}, {"ETIS-LaribPolypDB", 196}};
};

struct ManifestItem {
  std::string image;  // relative to the manifest root
  std::string mask;
  std::string scan_id;
  int slice = 0;  // axial index for volumes, 0 for 2D items
  std::vector<std::string> classes;
  std::string split;  // "test"/"train" for image pairs, empty for volumes
};

struct DatasetManifest {
  std::string root;
  Modality modality = Modality::kMRI;
  DatasetLayout layout = DatasetLayout::kVolumes;
  std::vector<ManifestItem> items;
  std::map<std::string, int> folds;  // scan id -> fold
  std::map<std::string, std::map<std::string, int>> split_counts;

  std::vector<std::string> scans() const;
  nlohmann::json to_json() const;
};

DatasetManifest build_manifest(const std::filesystem::path& root, const ManifestConfig& config);

// Applies PROTOPROMPT_DATASET_ROOT when it is set and non-empty.
std::filesystem::path resolve_dataset_root(const std::filesystem::path& configured);
inline constexpr const char* kDatasetRootEnv = "PROTOPROMPT_DATASET_ROOT";

enum class SplitSetting { kStandard, kExcludeTestClass };

struct SplitSpec {
  std::string held_out_class;
  SplitSetting setting = SplitSetting::kStandard;
};

// Items usable for training. With kExcludeTestClass every slice containing
// the held-out class is dropped.
std::vector<ManifestItem> training_items(const DatasetManifest& manifest, const SplitSpec& split);

// One-shot evaluation pairs for a volume dataset: every scan containing the
// class is a query, guided by the first scan (manifest order) from another
// fold that also contains it; the pair takes the query's fold.
struct PairPlan {
  std::string class_id;
  std::string support_scan;
  std::string query_scan;
  int fold = 0;
};
std::vector<PairPlan> plan_volume_pairs(const DatasetManifest& manifest, const std::vector<std::string>& classes);

// Image-pair collections: within each subset the first training item (or
// the first item when there is none) supports every test item.
std::vector<PairPlan> plan_image_pairs(const DatasetManifest& manifest);

// Reads the scans or images named by a plan into a VolumePair. Image pairs
// become single-slice stacks whose class id is the subset name.
VolumePair load_pair(const DatasetManifest& manifest, const PairPlan& plan, const ManifestConfig& config);

}  // namespace protoprompt
