#include "protoprompt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <set>

#include "protoprompt/error.hpp"
#include "protoprompt/nifti.hpp"
#include "protoprompt/raster.hpp"

namespace fs = std::filesystem;

namespace protoprompt {

const char* to_string(Modality modality) {
  switch (modality) {
    case Modality::kCT: return "CT";
    case Modality::kMRI: return "MRI";
    case Modality::kEndoscopy: return "endoscopy";
  }
  return "?";
}

Modality parse_modality(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "ct") return Modality::kCT;
  if (t == "mri" || t == "mr") return Modality::kMRI;
  if (t == "endoscopy") return Modality::kEndoscopy;
  fail(ErrorCode::kConfigError, "unknown modality '" + text + "' (expected CT, MRI or endoscopy)");
}

std::vector<float> normalize_intensities(std::span<const double> raw, const NormalizationConfig& config) {
  std::vector<float> out(raw.size(), 0.0f);
  if (raw.empty()) return out;
  double lo = 0.0, hi = 1.0;
  switch (config.modality) {
    case Modality::kCT:
      require(config.ct_window_max > config.ct_window_min, "CT window must have max > min");
      lo = config.ct_window_min;
      hi = config.ct_window_max;
      break;
    case Modality::kMRI: {
      require(config.mri_low_percentile >= 0.0 && config.mri_low_percentile < config.mri_high_percentile &&
                  config.mri_high_percentile <= 100.0,
              "MRI percentiles must satisfy 0 <= low < high <= 100");
      std::vector<double> sorted(raw.begin(), raw.end());
      std::sort(sorted.begin(), sorted.end());
      const double last = static_cast<double>(sorted.size() - 1);
      lo = sorted[static_cast<std::size_t>(std::floor(config.mri_low_percentile / 100.0 * last))];
      hi = sorted[static_cast<std::size_t>(std::ceil(config.mri_high_percentile / 100.0 * last))];
      break;
    }
    case Modality::kEndoscopy:
      break;
  }
  if (!(hi > lo)) return out;
  for (std::size_t i = 0; i < raw.size(); ++i)
    out[i] = static_cast<float>(std::clamp((raw[i] - lo) / (hi - lo), 0.0, 1.0));
  return out;
}

bool LabelSlice::contains(int value) const {
  return std::find(labels.begin(), labels.end(), value) != labels.end();
}

BinaryMask LabelSlice::mask_of(int value) const {
  std::vector<std::uint8_t> m(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) m[i] = labels[i] == value ? 1 : 0;
  return BinaryMask(rows, cols, std::move(m));
}

std::vector<AnnotatedSlice> Volume::class_stack(int class_value) const {
  std::vector<AnnotatedSlice> out;
  out.reserve(images.size());
  for (std::size_t z = 0; z < images.size(); ++z) out.push_back({images[z], labels[z].mask_of(class_value)});
  return out;
}

namespace {

constexpr double kPngCtIntercept = -1024.0;

std::optional<fs::path> nifti_file(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".nii.gz", ".nii"}) {
    const auto p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

struct PngSlice {
  std::string token;
  long index;
  fs::path image;
  fs::path label;
};

// Numbered image_<k>.png files sorted by k, each paired with label_<k>.png.
std::vector<PngSlice> png_slices(const fs::path& dir, bool require_labels) {
  static const std::regex pattern(R"(image_(\d+)\.png)");
  std::vector<PngSlice> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    PngSlice s{m[1], std::stol(m[1]), entry.path(), dir / ("label_" + m[1].str() + ".png")};
    if (require_labels && !fs::exists(s.label))
      fail(ErrorCode::kCorruptDataset, "missing label file '" + s.label.string() + "' for '" + s.image.string() + "'");
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const PngSlice& a, const PngSlice& b) {
    return a.index != b.index ? a.index < b.index : a.token < b.token;
  });
  return out;
}

bool is_scan_dir(const fs::path& dir) {
  if (nifti_file(dir, "image")) return true;
  for (const auto& entry : fs::directory_iterator(dir))
    if (std::regex_match(entry.path().filename().string(), std::regex(R"(image_\d+\.png)"))) return true;
  return false;
}

LabelSlice label_from_raster(const RawRaster& raw, const fs::path& path) {
  if (raw.channels != 1) fail(ErrorCode::kCorruptDataset, "label raster '" + path.string() + "' must be single-channel");
  return {raw.rows, raw.cols, raw.samples};
}

std::vector<LabelSlice> labels_from_nifti(const NiftiVolume& vol, const fs::path& path) {
  const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
  std::vector<LabelSlice> out(nz, LabelSlice{ny, nx, {}});
  for (int z = 0; z < nz; ++z) {
    auto& labels = out[z].labels;
    labels.resize(static_cast<std::size_t>(nx) * ny);
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        const double v = vol.at(x, y, z);
        if (v < 0 || v > 65535 || v != std::floor(v))
          fail(ErrorCode::kCorruptDataset, "label volume '" + path.string() + "' holds non-integer value " +
                                               std::to_string(v));
        labels[static_cast<std::size_t>(y) * nx + x] = static_cast<std::uint16_t>(v);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<LabelSlice> load_labels(const fs::path& scan_dir) {
  if (!fs::is_directory(scan_dir)) fail(ErrorCode::kIoError, "scan directory not found: '" + scan_dir.string() + "'");
  if (const auto image = nifti_file(scan_dir, "image")) {
    const auto label = nifti_file(scan_dir, "label");
    if (!label) fail(ErrorCode::kCorruptDataset, "missing label file '" + (scan_dir / "label.nii.gz").string() + "'");
    return labels_from_nifti(read_nifti(*label), *label);
  }
  std::vector<LabelSlice> out;
  for (const auto& s : png_slices(scan_dir, true)) out.push_back(label_from_raster(read_png(s.label), s.label));
  if (out.empty()) fail(ErrorCode::kEmptyDataset, "no image slices in '" + scan_dir.string() + "'");
  return out;
}

Volume load_volume(const fs::path& scan_dir, const NormalizationConfig& config) {
  if (!fs::is_directory(scan_dir)) fail(ErrorCode::kIoError, "scan directory not found: '" + scan_dir.string() + "'");
  Volume vol;
  vol.scan_id = scan_dir.filename().string();
  const std::string where = "scan '" + scan_dir.string() + "': ";

  if (const auto image_path = nifti_file(scan_dir, "image")) {
    const auto label_path = nifti_file(scan_dir, "label");
    if (!label_path) fail(ErrorCode::kCorruptDataset, "missing label file '" + (scan_dir / "label.nii.gz").string() + "'");
    const auto image = read_nifti(*image_path);
    const auto label = read_nifti(*label_path);
    if (image.dims != label.dims)
      fail(ErrorCode::kCorruptDataset, where + "image and label volumes differ in shape");
    auto raw = image.voxels;
    const auto norm = normalize_intensities(raw, config);
    const int nx = image.dims[0], ny = image.dims[1];
    const std::size_t plane = static_cast<std::size_t>(nx) * ny;
    for (int z = 0; z < image.dims[2]; ++z)
      vol.images.emplace_back(ny, nx, 1, std::vector<float>(norm.begin() + z * plane, norm.begin() + (z + 1) * plane));
    vol.labels = labels_from_nifti(label, *label_path);
    return vol;
  }

  const auto slices = png_slices(scan_dir, true);
  if (slices.empty()) fail(ErrorCode::kEmptyDataset, where + "no image.nii[.gz] or image_<k>.png files");
  std::vector<RawRaster> rasters;
  std::vector<double> raw;
  for (const auto& s : slices) {
    rasters.push_back(read_png(s.image));
    const auto& r = rasters.back();
    if (r.shape() != rasters.front().shape() || r.channels != rasters.front().channels)
      fail(ErrorCode::kCorruptDataset, where + "slice '" + s.image.string() + "' differs in shape from the first slice");
    for (auto v : r.samples) {
      if (config.modality == Modality::kCT) {
        raw.push_back(v + kPngCtIntercept);
      } else if (config.modality == Modality::kEndoscopy) {
        raw.push_back(v / r.max_value());
      } else {
        raw.push_back(v);
      }
    }
  }
  const auto norm = normalize_intensities(raw, config);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < slices.size(); ++k) {
    const auto& r = rasters[k];
    const std::size_t n = r.samples.size();
    vol.images.emplace_back(r.rows, r.cols, r.channels, std::vector<float>(norm.begin() + offset, norm.begin() + offset + n));
    offset += n;
    auto label = label_from_raster(read_png(slices[k].label), slices[k].label);
    if (label.shape() != r.shape())
      fail(ErrorCode::kCorruptDataset, where + "label '" + slices[k].label.string() + "' differs in shape from its image");
    vol.labels.push_back(std::move(label));
  }
  return vol;
}

void write_volume(const fs::path& scan_dir, const Volume& volume, VolumeFormat format) {
  require(!volume.images.empty() && volume.images.size() == volume.labels.size(),
          "write_volume: need one label slice per image slice");
  const Shape2D shape = volume.images.front().shape();
  for (std::size_t z = 0; z < volume.images.size(); ++z) {
    require(volume.images[z].shape() == shape && volume.labels[z].shape() == shape,
            "write_volume: slices must share one shape");
    require(volume.images[z].channels() == 1, "write_volume: volumes are single-channel");
  }
  fs::create_directories(scan_dir);
  if (format == VolumeFormat::kNifti) {
    NiftiVolume image, label;
    image.dims = label.dims = {shape.cols, shape.rows, volume.slices()};
    for (std::size_t z = 0; z < volume.images.size(); ++z) {
      for (float v : volume.images[z].pixels()) image.voxels.push_back(v);
      for (auto v : volume.labels[z].labels) label.voxels.push_back(v);
    }
    write_nifti(scan_dir / "image.nii.gz", image, NiftiType::kFloat32);
    write_nifti(scan_dir / "label.nii.gz", label, NiftiType::kUInt16);
    return;
  }
  for (std::size_t z = 0; z < volume.images.size(); ++z) {
    char token[16];
    std::snprintf(token, sizeof token, "%03zu", z);
    RawRaster img{shape.rows, shape.cols, 1, 16, {}};
    for (float v : volume.images[z].pixels())
      img.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 65535.0f)));
    write_png(scan_dir / ("image_" + std::string(token) + ".png"), img);
    const auto& l = volume.labels[z];
    const bool wide = std::any_of(l.labels.begin(), l.labels.end(), [](auto v) { return v > 255; });
    write_png(scan_dir / ("label_" + std::string(token) + ".png"), RawRaster{l.rows, l.cols, 1, wide ? 16 : 8, l.labels});
  }
}

std::vector<std::string> DatasetManifest::scans() const {
  std::vector<std::string> out;
  for (const auto& item : items)
    if (out.empty() || out.back() != item.scan_id) out.push_back(item.scan_id);
  return out;
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["root"] = root;
  j["modality"] = to_string(modality);
  j["layout"] = layout == DatasetLayout::kVolumes ? "volumes" : "image-pairs";
  j["folds"] = folds;
  j["split_counts"] = split_counts;
  j["items"] = nlohmann::json::array();
  for (const auto& it : items) {
    j["items"].push_back({{"image", it.image},
                          {"mask", it.mask},
                          {"scan", it.scan_id},
                          {"slice", it.slice},
                          {"classes", it.classes},
                          {"split", it.split}});
  }
  return j;
}

namespace {

std::vector<fs::path> sorted_subdirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

bool is_pair_subset(const fs::path& dir) {
  return fs::is_directory(dir / "images") && fs::is_directory(dir / "masks");
}

void add_volume_items(DatasetManifest& m, const fs::path& root, const fs::path& scan, const ManifestConfig& config) {
  const std::string id = scan.filename().string();
  const auto labels = load_labels(scan);
  std::vector<std::pair<std::string, std::string>> files;
  if (const auto image = nifti_file(scan, "image")) {
    const auto label = nifti_file(scan, "label");
    for (std::size_t z = 0; z < labels.size(); ++z)
      files.emplace_back(fs::relative(*image, root).generic_string(), fs::relative(*label, root).generic_string());
  } else {
    for (const auto& s : png_slices(scan, true))
      files.emplace_back(fs::relative(s.image, root).generic_string(), fs::relative(s.label, root).generic_string());
  }
  for (std::size_t z = 0; z < labels.size(); ++z) {
    ManifestItem item{files[z].first, files[z].second, id, static_cast<int>(z), {}, ""};
    for (const auto& [name, value] : config.classes)
      if (labels[z].contains(value)) item.classes.push_back(name);
    m.items.push_back(std::move(item));
  }
}

void add_pair_items(DatasetManifest& m, const fs::path& root, const fs::path& subset, const ManifestConfig& config) {
  const std::string name = subset.filename().string();
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(subset / "images"))
    if (entry.is_regular_file() && entry.path().extension() == ".png") images.push_back(entry.path());
  std::sort(images.begin(), images.end());
  int test_size = static_cast<int>(images.size());
  if (const auto it = config.test_split_sizes.find(name); it != config.test_split_sizes.end()) {
    if (it->second > static_cast<int>(images.size()))
      fail(ErrorCode::kCorruptDataset, "subset '" + name + "' has " + std::to_string(images.size()) +
                                           " images but its test split needs " + std::to_string(it->second));
    test_size = it->second;
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto mask = subset / "masks" / images[i].filename();
    if (!fs::exists(mask))
      fail(ErrorCode::kCorruptDataset, "missing mask file '" + mask.string() + "' for '" + images[i].string() + "'");
    const bool test = static_cast<int>(i) < test_size;
    m.items.push_back({fs::relative(images[i], root).generic_string(), fs::relative(mask, root).generic_string(),
                       name + "/" + images[i].stem().string(), 0, {name}, test ? "test" : "train"});
    ++m.split_counts[name][test ? "test" : "train"];
  }
  m.split_counts[name].emplace("test", 0);
  m.split_counts[name].emplace("train", 0);
}

}  // namespace

DatasetManifest build_manifest(const fs::path& root, const ManifestConfig& config) {
  if (!fs::is_directory(root)) fail(ErrorCode::kIoError, "dataset root not found: '" + root.string() + "'");
  require(config.folds >= 1, "build_manifest: folds must be >= 1");
  DatasetManifest m;
  m.root = root.generic_string();
  m.modality = config.normalization.modality;
  const auto dirs = sorted_subdirs(root);
  const bool pairs = std::any_of(dirs.begin(), dirs.end(), is_pair_subset);
  m.layout = pairs ? DatasetLayout::kImagePairs : DatasetLayout::kVolumes;
  for (const auto& dir : dirs) {
    if (pairs && is_pair_subset(dir)) add_pair_items(m, root, dir, config);
    if (!pairs && is_scan_dir(dir)) add_volume_items(m, root, dir, config);
  }
  if (m.items.empty()) fail(ErrorCode::kEmptyDataset, "no scans or image/mask subsets under '" + root.string() + "'");
  const auto scans = m.scans();
  for (std::size_t i = 0; i < scans.size(); ++i) m.folds[scans[i]] = static_cast<int>(i % config.folds);
  return m;
}

fs::path resolve_dataset_root(const fs::path& configured) {
  const char* env = std::getenv(kDatasetRootEnv);
  if (env && *env) return fs::path(env);
  return configured;
}

std::vector<ManifestItem> training_items(const DatasetManifest& manifest, const SplitSpec& split) {
  std::vector<ManifestItem> out;
  for (const auto& item : manifest.items) {
    if (manifest.layout == DatasetLayout::kImagePairs && item.split != "train") continue;
    if (split.setting == SplitSetting::kExcludeTestClass &&
        std::find(item.classes.begin(), item.classes.end(), split.held_out_class) != item.classes.end())
      continue;
    out.push_back(item);
  }
  return out;
}

std::vector<PairPlan> plan_volume_pairs(const DatasetManifest& manifest, const std::vector<std::string>& classes) {
  require(manifest.layout == DatasetLayout::kVolumes, "plan_volume_pairs: manifest is not a volume dataset");
  std::vector<PairPlan> plans;
  for (const auto& cls : classes) {
    std::vector<std::string> with_class;
    for (const auto& item : manifest.items) {
      if (std::find(item.classes.begin(), item.classes.end(), cls) == item.classes.end()) continue;
      if (with_class.empty() || with_class.back() != item.scan_id) with_class.push_back(item.scan_id);
    }
    if (with_class.empty()) fail(ErrorCode::kClassNotFound, "class '" + cls + "' appears in no scan");
    if (with_class.size() < 2)
      fail(ErrorCode::kEmptyDataset, "class '" + cls + "' appears in a single scan; one-shot evaluation needs two");
    for (const auto& query : with_class) {
      const int fold = manifest.folds.at(query);
      std::string support;
      for (const auto& s : with_class) {
        if (s != query && manifest.folds.at(s) != fold) {
          support = s;
          break;
        }
      }
      if (support.empty()) {
        for (const auto& s : with_class) {
          if (s != query) {
            support = s;
            break;
          }
        }
      }
      plans.push_back({cls, support, query, fold});
    }
  }
  return plans;
}

std::vector<PairPlan> plan_image_pairs(const DatasetManifest& manifest) {
  require(manifest.layout == DatasetLayout::kImagePairs, "plan_image_pairs: manifest is not an image-pair dataset");
  std::map<std::string, std::vector<const ManifestItem*>> by_subset;
  for (const auto& item : manifest.items) by_subset[item.classes.front()].push_back(&item);
  std::vector<PairPlan> plans;
  for (const auto& [subset, items] : by_subset) {
    const ManifestItem* support = items.front();
    for (const auto* item : items) {
      if (item->split == "train") {
        support = item;
        break;
      }
    }
    for (const auto* item : items) {
      if (item->split != "test" || item == support) continue;
      plans.push_back({subset, support->scan_id, item->scan_id, 0});
    }
  }
  return plans;
}

namespace {

const ManifestItem& find_item(const DatasetManifest& manifest, const std::string& scan) {
  for (const auto& item : manifest.items)
    if (item.scan_id == scan) return item;
  fail(ErrorCode::kCorruptDataset, "scan '" + scan + "' is not in the manifest");
}

}  // namespace

VolumePair load_pair(const DatasetManifest& manifest, const PairPlan& plan, const ManifestConfig& config) {
  const fs::path root(manifest.root);
  VolumePair pair;
  pair.class_id = plan.class_id;
  pair.support_scan = plan.support_scan;
  pair.query_scan = plan.query_scan;
  pair.fold = plan.fold;
  if (manifest.layout == DatasetLayout::kImagePairs) {
    for (const auto* scan : {&plan.support_scan, &plan.query_scan}) {
      const auto& item = find_item(manifest, *scan);
      AnnotatedSlice s{read_image_png(root / item.image), read_mask_png(root / item.mask)};
      if (s.image.shape() != s.mask.shape())
        fail(ErrorCode::kCorruptDataset, "mask '" + item.mask + "' differs in shape from its image");
      (scan == &plan.support_scan ? pair.support : pair.query).push_back(std::move(s));
    }
    return pair;
  }
  const auto it = config.classes.find(plan.class_id);
  if (it == config.classes.end()) fail(ErrorCode::kClassNotFound, "class '" + plan.class_id + "' is not configured");
  auto scan_dir = [&](const std::string& scan) {
    return root / fs::path(find_item(manifest, scan).image).parent_path();
  };
  pair.support = load_volume(scan_dir(plan.support_scan), config.normalization).class_stack(it->second);
  pair.query = load_volume(scan_dir(plan.query_scan), config.normalization).class_stack(it->second);
  return pair;
}

}  // namespace protoprompt
