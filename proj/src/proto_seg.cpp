#include "protoprompt/proto_seg.hpp"

#include <algorithm>
#include <cmath>

#include "protoprompt/error.hpp"
#include "protoprompt/resize.hpp"

namespace protoprompt {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

SimilarityMap constant_map(Shape2D shape, ClassIndex cls, double value) {
  return SimilarityMap{shape.rows, shape.cols, std::vector<double>(shape.area(), value), cls, 0};
}

SimilarityMap class_similarity(const std::vector<Prototype>& protos, const FeatureMap& query,
                               double alpha, ClassIndex cls) {
  if (protos.empty()) return constant_map(query.shape(), cls, 0.0);
  std::vector<SimilarityMap> maps;
  maps.reserve(protos.size());
  for (std::size_t l = 0; l < protos.size(); ++l)
    maps.push_back(similarity_map(protos[l], query, alpha, static_cast<int>(l)));
  auto fused = fuse_similarities(maps);
  fused.class_id = cls;
  return fused;
}

}  // namespace

std::vector<Prototype> pool_local_prototypes(const FeatureMap& fmap, const BinaryMask& mask,
                                             PoolingWindow window, double threshold, ClassIndex cls) {
  require(mask.shape() == fmap.shape(),
          "pool_local_prototypes: mask " + to_string(mask.shape()) + " is not at feature resolution " +
              to_string(fmap.shape()));
  require(window.rows >= 1 && window.cols >= 1, "pool_local_prototypes: window must be at least 1x1");
  require(window.rows <= fmap.rows() && window.cols <= fmap.cols(),
          "pool_local_prototypes: window larger than feature map");
  require(threshold > 0.0 && threshold <= 1.0, "pool_local_prototypes: threshold must lie in (0, 1]");

  const int dim = fmap.dim();
  const double cells = static_cast<double>(window.rows) * window.cols;
  std::vector<Prototype> out;
  for (int m = 0; m < fmap.rows() / window.rows; ++m) {
    for (int n = 0; n < fmap.cols() / window.cols; ++n) {
      std::size_t occupied = 0;
      std::vector<double> sum(dim, 0.0);
      for (int r = m * window.rows; r < (m + 1) * window.rows; ++r) {
        for (int c = n * window.cols; c < (n + 1) * window.cols; ++c) {
          occupied += mask.at(r, c) ? 1 : 0;
          const auto f = fmap.cell(r, c);
          for (int d = 0; d < dim; ++d) sum[d] += f[d];
        }
      }
      if (static_cast<double>(occupied) / cells < threshold) continue;
      for (auto& v : sum) v /= cells;
      out.push_back(Prototype{std::move(sum), cls, PrototypeKind::kLocal, WindowIndex{m, n}});
    }
  }
  return out;
}

Prototype global_prototype(const FeatureMap& fmap, std::span<const double> weights, ClassIndex cls) {
  require(weights.size() == fmap.shape().area(), "global_prototype: weight map is not at feature resolution");
  const int dim = fmap.dim();
  std::vector<double> sum(dim, 0.0);
  double total = 0.0;
  for (int r = 0; r < fmap.rows(); ++r) {
    for (int c = 0; c < fmap.cols(); ++c) {
      const double w = weights[static_cast<std::size_t>(r) * fmap.cols() + c];
      if (w == 0.0) continue;
      total += w;
      const auto f = fmap.cell(r, c);
      for (int d = 0; d < dim; ++d) sum[d] += w * f[d];
    }
  }
  if (total <= 0.0) fail(ErrorCode::kEmptySupport, "global_prototype: support mask is empty at feature resolution");
  for (auto& v : sum) v /= total;
  return Prototype{std::move(sum), cls, PrototypeKind::kGlobal, std::nullopt};
}

Prototype global_prototype(const FeatureMap& fmap, const BinaryMask& mask, ClassIndex cls) {
  require(mask.shape() == fmap.shape(), "global_prototype: mask is not at feature resolution");
  std::vector<double> weights(mask.labels().begin(), mask.labels().end());
  return global_prototype(fmap, weights, cls);
}

SimilarityMap similarity_map(const Prototype& proto, const FeatureMap& fmap, double alpha, int prototype_index) {
  require(static_cast<int>(proto.vector.size()) == fmap.dim(),
          "similarity_map: prototype and feature dimensions differ");
  // Squared norms under one square root: sqrt(x * x) == x in IEEE arithmetic,
  // so a cell identical to the prototype scores exactly alpha.
  const double psq = dot(proto.vector, proto.vector);
  require(psq > 0.0, "similarity_map: prototype has zero norm");
  SimilarityMap out{fmap.rows(), fmap.cols(), std::vector<double>(fmap.shape().area(), 0.0),
                    proto.class_id, prototype_index};
  for (int r = 0; r < fmap.rows(); ++r) {
    for (int c = 0; c < fmap.cols(); ++c) {
      const auto f = fmap.cell(r, c);
      const double fsq = dot(f, f);
      if (fsq == 0.0) continue;
      const double cosine = std::clamp(dot(proto.vector, f) / std::sqrt(psq * fsq), -1.0, 1.0);
      out.values[static_cast<std::size_t>(r) * fmap.cols() + c] = alpha * cosine;
    }
  }
  return out;
}

SimilarityMap fuse_similarities(std::span<const SimilarityMap> maps) {
  require(!maps.empty(), "fuse_similarities: no similarity maps");
  const Shape2D shape = maps.front().shape();
  for (const auto& m : maps) require(m.shape() == shape, "fuse_similarities: maps differ in shape");
  SimilarityMap out{shape.rows, shape.cols, std::vector<double>(shape.area()), maps.front().class_id, 0};
  for (std::size_t i = 0; i < shape.area(); ++i) {
    double peak = maps.front().values[i];
    for (const auto& m : maps) peak = std::max(peak, m.values[i]);
    double denom = 0.0;
    double numer = 0.0;
    for (const auto& m : maps) {
      const double e = std::exp(m.values[i] - peak);
      denom += e;
      numer += m.values[i] * e;
    }
    out.values[i] = numer / denom;
  }
  return out;
}

ProbabilityMask normalize_classes(const SimilarityMap& fg, const SimilarityMap& bg) {
  require(fg.shape() == bg.shape(), "normalize_classes: foreground and background maps differ in shape");
  const std::size_t n = fg.shape().area();
  std::vector<double> pf(n), pb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double peak = std::max(fg.values[i], bg.values[i]);
    const double ef = std::exp(fg.values[i] - peak);
    const double eb = std::exp(bg.values[i] - peak);
    pf[i] = ef / (ef + eb);
    pb[i] = eb / (ef + eb);
  }
  return ProbabilityMask(fg.rows, fg.cols, std::move(pb), std::move(pf));
}

std::vector<double> area_fractions(const BinaryMask& mask, Shape2D grid) {
  std::vector<double> out(grid.area(), 0.0);
  auto bounds = [](int i, int in, int outn) {
    int lo = static_cast<int>(static_cast<long long>(i) * in / outn);
    int hi = static_cast<int>(static_cast<long long>(i + 1) * in / outn);
    lo = std::min(lo, in - 1);
    hi = std::max(hi, lo + 1);
    return std::pair{lo, hi};
  };
  for (int r = 0; r < grid.rows; ++r) {
    const auto [r0, r1] = bounds(r, mask.rows(), grid.rows);
    for (int c = 0; c < grid.cols; ++c) {
      const auto [c0, c1] = bounds(c, mask.cols(), grid.cols);
      std::size_t set = 0;
      for (int rr = r0; rr < r1; ++rr)
        for (int cc = c0; cc < c1; ++cc) set += mask.at(rr, cc) ? 1 : 0;
      out[static_cast<std::size_t>(r) * grid.cols + c] =
          static_cast<double>(set) / (static_cast<double>(r1 - r0) * (c1 - c0));
    }
  }
  return out;
}

PrototypeSet build_prototypes(const FeatureMap& support, const BinaryMask& support_mask,
                              const ProtoSegConfig& config) {
  if (!support_mask.any()) fail(ErrorCode::kEmptySupport, "support mask has no foreground pixels");
  PrototypeSet set;
  set.window = config.window;
  set.occupancy_threshold = config.occupancy_threshold;
  const PoolingWindow window{std::min(config.window.rows, support.rows()),
                             std::min(config.window.cols, support.cols())};

  auto build_class = [&](const BinaryMask& mask, ClassIndex cls) {
    std::vector<Prototype> protos;
    if (!mask.any()) return protos;
    const BinaryMask at_features = resize(mask, support.shape(), Interpolation::kNearest);
    protos = pool_local_prototypes(support, at_features, window, config.occupancy_threshold, cls);
    protos.push_back(global_prototype(support, area_fractions(mask, support.shape()), cls));
    return protos;
  };
  set.foreground = build_class(support_mask, ClassIndex::kForeground);
  set.background = build_class(support_mask.complement(), ClassIndex::kBackground);
  return set;
}

ProbabilityMask match_prototypes(const PrototypeSet& prototypes, const FeatureMap& query, double alpha) {
  const auto fg = class_similarity(prototypes.foreground, query, alpha, ClassIndex::kForeground);
  const auto bg = class_similarity(prototypes.background, query, alpha, ClassIndex::kBackground);
  return normalize_classes(fg, bg);
}

ProbabilityMask coarse_segment(const Image2D& support_image, const BinaryMask& support_mask,
                               const Image2D& query, const EncoderBackend& backend,
                               const ProtoSegConfig& config) {
  require(support_image.shape() == support_mask.shape(), "coarse_segment: support image and mask differ in shape");
  if (!support_mask.any()) fail(ErrorCode::kEmptySupport, "coarse_segment: support mask has no foreground pixels");
  const FeatureMap support_features = backend.encode(support_image);
  const FeatureMap query_features = backend.encode(query);
  require(support_features.dim() == query_features.dim(), "coarse_segment: feature dimensions differ");
  const auto prototypes = build_prototypes(support_features, support_mask, config);
  const auto coarse = match_prototypes(prototypes, query_features, config.alpha);
  return resize(coarse, query.shape());
}

}  // namespace protoprompt
