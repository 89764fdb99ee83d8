#pragma once

// Volumetric one-shot evaluation: the class span of each scan is cut into C
// sections, the middle support slice of section i guides every query slice of
// the matching query section, and overlap is accumulated over the stack.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoprompt/metrics.hpp"
#include "protoprompt/pipeline.hpp"
#include "protoprompt/types.hpp"

namespace protoprompt {

struct SliceRange {
  int first = 0;
  int last = 0;  // inclusive

  int size() const { return last - first + 1; }
  // Lower median for even lengths.
  int middle() const { return first + (size() - 1) / 2; }
  bool contains(int slice) const { return slice >= first && slice <= last; }
  friend bool operator==(const SliceRange&, const SliceRange&) = default;
};

// Split [range.first, range.last] into `sections` contiguous pieces whose
// sizes differ by at most one, larger pieces first. Pieces that would be
// empty (span shorter than `sections`) are dropped.
std::vector<SliceRange> split_range(const SliceRange& range, int sections);

// First and last slice holding any foreground; class-not-found when none do.
SliceRange class_span(const std::vector<BinaryMask>& class_masks);

std::vector<SliceRange> chunk_sections(const std::vector<BinaryMask>& class_masks, int sections);

struct AnnotatedSlice {
  Image2D image;
  BinaryMask mask;  // binary mask of the evaluated class
};

struct VolumePair {
  std::vector<AnnotatedSlice> support;
  std::vector<AnnotatedSlice> query;
  std::string class_id;
  std::string support_scan;
  std::string query_scan;
  int fold = 0;

  // Rejects empty stacks, per-slice shape mismatches and same-scan pairs.
  void validate() const;
};

using SegmentFn =
    std::function<BinaryMask(const Image2D& support_image, const BinaryMask& support_mask, const Image2D& query)>;

SegmentFn segment_with(const Pipeline& pipeline);

struct EvaluationOptions {
  int sections = 3;
  // Slices where prediction and truth are both empty score 1.0; when set they
  // are flagged excluded and left out of slice-level means instead.
  bool exclude_empty_slices = false;
};

struct SliceRecord {
  int slice = 0;
  int section = 0;
  int support_slice = 0;
  OverlapCounts counts;
  bool excluded = false;

  double dice() const { return protoprompt::dice(counts); }
  double iou() const { return protoprompt::iou(counts); }
  friend bool operator==(const SliceRecord& a, const SliceRecord& b) {
    return a.slice == b.slice && a.section == b.section && a.support_slice == b.support_slice &&
           a.counts.intersection == b.counts.intersection && a.counts.predicted == b.counts.predicted &&
           a.counts.truth == b.counts.truth && a.excluded == b.excluded;
  }
};

struct VolumeResult {
  std::string class_id;
  std::string support_scan;
  std::string query_scan;
  int fold = 0;
  std::vector<SliceRecord> slices;

  // Overlap summed over every evaluated slice, i.e. the stacked 3D labels.
  OverlapCounts totals() const;
  double dice() const { return protoprompt::dice(totals()); }
  double iou() const { return protoprompt::iou(totals()); }
  // Mean of slice scores, skipping excluded slices.
  double mean_slice_dice() const;
  friend bool operator==(const VolumeResult&, const VolumeResult&) = default;
};

// Query slices outside the query class span are not evaluated. Query section
// i is guided by support section floor(i * ns / nq) when the two scans yield a
// different number of non-empty sections.
VolumeResult evaluate_volume(const SegmentFn& segment, const VolumePair& pair, const EvaluationOptions& options = {});

// Runs evaluate_volume over `pairs` on `workers` threads; results keep the
// input order. The segment function must be safe to call concurrently.
std::vector<VolumeResult> evaluate_volumes(const SegmentFn& segment, const std::vector<VolumePair>& pairs,
                                           const EvaluationOptions& options = {}, int workers = 1);

inline constexpr int kReportSchemaVersion = 1;

struct EvalReport {
  int schema_version = kReportSchemaVersion;
  std::string dataset;
  std::uint64_t seed = 0;
  int folds = 5;
  nlohmann::json config = nlohmann::json::object();
  std::vector<VolumeResult> volumes;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct FoldScore {
  double dice = 0.0;  // mean volume Dice over the fold's volumes
  double iou = 0.0;
  int volumes = 0;
};

struct ClassSummary {
  std::string class_id;
  std::map<int, FoldScore> folds;
  Aggregate dice;
  Aggregate iou;
};

// Per-class fold means and their cross-validation aggregate, in canonical
// organ order (lk, rk, spleen, liver, then other classes alphabetically).
std::vector<ClassSummary> summarize(const EvalReport& report);

// Organ-averaged score per fold (folds where every class has results) and its
// aggregate; this fills the Mean column.
struct MeanSummary {
  std::map<int, FoldScore> folds;
  Aggregate dice;
  Aggregate iou;
};
MeanSummary summarize_mean(const std::vector<ClassSummary>& classes, int k);

std::vector<std::string> canonical_class_order(std::vector<std::string> classes);

struct WilcoxonRow {
  std::string label;  // "all" or a class id
  WilcoxonResult test;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

// Pairs fold-level Dice by (class, fold). Both reports must cover the same
// keys, otherwise invalid-comparison. The "all" row pools every pair; a
// per-class row is added when that class has at least five folds.
std::vector<WilcoxonRow> compare_reports(const EvalReport& a, const EvalReport& b);

const char* to_string(WilcoxonMethod method);

}  // namespace protoprompt
