#pragma once

// Coarse segmentation by prototype matching: local window prototypes and a
// mask-weighted global prototype per class are compared to every query cell
// with scaled cosine similarity, fused per class with a softmax over
// prototypes, and turned into a two-class probability map.

#include <optional>
#include <span>
#include <vector>

#include "protoprompt/encoder.hpp"
#include "protoprompt/types.hpp"

namespace protoprompt {

enum class PrototypeKind { kLocal, kGlobal };

struct WindowIndex {
  int m = 0;
  int n = 0;
  friend bool operator==(const WindowIndex&, const WindowIndex&) = default;
};

struct Prototype {
  std::vector<double> vector;
  ClassIndex class_id = ClassIndex::kForeground;
  PrototypeKind kind = PrototypeKind::kLocal;
  std::optional<WindowIndex> window;  // set for local prototypes only
};

struct PoolingWindow {
  int rows = 4;
  int cols = 4;
};

struct ProtoSegConfig {
  PoolingWindow window;
  double occupancy_threshold = 0.95;
  double alpha = 20.0;
};

struct PrototypeSet {
  std::vector<Prototype> background;
  std::vector<Prototype> foreground;
  PoolingWindow window;
  double occupancy_threshold = 0.95;

  const std::vector<Prototype>& of(ClassIndex cls) const {
    return cls == ClassIndex::kForeground ? foreground : background;
  }
};

struct SimilarityMap {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  ClassIndex class_id = ClassIndex::kForeground;
  int prototype_index = 0;

  Shape2D shape() const { return {rows, cols}; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

// One prototype per non-overlapping window (partial edge tiles dropped) whose
// mask occupancy is at least `threshold`; each is the unweighted mean of the
// window's feature vectors. `mask` must already be at feature resolution.
std::vector<Prototype> pool_local_prototypes(const FeatureMap& fmap, const BinaryMask& mask,
                                             PoolingWindow window, double threshold,
                                             ClassIndex cls = ClassIndex::kForeground);

// Mask-weighted mean feature. Throws empty-support when the weights sum to 0.
Prototype global_prototype(const FeatureMap& fmap, const BinaryMask& mask,
                           ClassIndex cls = ClassIndex::kForeground);
Prototype global_prototype(const FeatureMap& fmap, std::span<const double> weights,
                           ClassIndex cls = ClassIndex::kForeground);

// alpha * cos(prototype, cell). Cells with zero norm score 0.
SimilarityMap similarity_map(const Prototype& proto, const FeatureMap& fmap, double alpha,
                             int prototype_index = 0);

// Per pixel: sum_l S_l * softmax_l(S_l).
SimilarityMap fuse_similarities(std::span<const SimilarityMap> maps);

// Per-pixel softmax over {background, foreground}.
ProbabilityMask normalize_classes(const SimilarityMap& fg, const SimilarityMap& bg);

// Fraction of mask pixels falling in each cell of `grid` (area resampling).
std::vector<double> area_fractions(const BinaryMask& mask, Shape2D grid);

// Foreground prototypes from the support mask, background prototypes from its
// complement. A class without any support pixels gets no prototypes; an empty
// foreground is an empty-support error.
PrototypeSet build_prototypes(const FeatureMap& support, const BinaryMask& support_mask,
                              const ProtoSegConfig& config);

// Feature-resolution probability map. A class with no prototypes contributes a
// constant zero similarity.
ProbabilityMask match_prototypes(const PrototypeSet& prototypes, const FeatureMap& query, double alpha);

// Full coarse stage; the result is upsampled to the query's resolution.
ProbabilityMask coarse_segment(const Image2D& support_image, const BinaryMask& support_mask,
                               const Image2D& query, const EncoderBackend& backend,
                               const ProtoSegConfig& config);

}  // namespace protoprompt
