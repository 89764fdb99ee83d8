#include "protoprompt/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "protoprompt/error.hpp"

namespace protoprompt {
namespace {

// Union-find over provisional labels for the two-pass labelling.
class DisjointSet {
 public:
  int make() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

 private:
  std::vector<int> parent_;
};

// First `count` candidates by descending score; ties keep scan order.
template <typename Score>
std::vector<PixelCoord> top_pixels(std::vector<PixelCoord> candidates, int count, Score score) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const PixelCoord& a, const PixelCoord& b) { return score(a) > score(b); });
  if (static_cast<int>(candidates.size()) > count) candidates.resize(count);
  return candidates;
}

}  // namespace

PromptSet PromptSet::parse(std::string_view text) {
  PromptSet set;
  std::string token;
  auto flush = [&] {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) {
      token.clear();
      return;
    }
    const auto last = token.find_last_not_of(" \t");
    const auto kind = parse_prompt_kind(token.substr(first, last - first + 1));
    if (!kind) fail(ErrorCode::kConfigError, "unknown prompt kind '" + token + "' (expected bbox, cent, conf, neg)");
    set.insert(*kind);
    token.clear();
  };
  for (char ch : text) {
    if (ch == ',' || ch == '+') {
      flush();
    } else {
      token += ch;
    }
  }
  flush();
  return set;
}

std::vector<PromptKind> PromptSet::kinds() const {
  std::vector<PromptKind> out;
  for (auto k : {PromptKind::kCent, PromptKind::kConf, PromptKind::kNeg, PromptKind::kBbox})
    if (contains(k)) out.push_back(k);
  return out;
}

std::string PromptSet::to_string() const {
  std::string out;
  for (auto k : kinds()) {
    if (!out.empty()) out += "+";
    out += protoprompt::to_string(k);
  }
  return out;
}

BinaryMask PromptBundle::component_mask() const {
  std::vector<std::uint8_t> labels(frame.area(), 0);
  for (const auto& p : source_component.pixels) labels[static_cast<std::size_t>(p.row) * frame.cols + p.col] = 1;
  return BinaryMask(frame.rows, frame.cols, std::move(labels));
}

PromptSet PromptBundle::present() const {
  PromptSet set;
  if (bbox) set.insert(PromptKind::kBbox);
  for (const auto& p : points) set.insert(p.source);
  return set;
}

BinaryMask threshold_mask(const ProbabilityMask& probs, double tau) {
  require(tau > 0.0 && tau < 1.0, "threshold must lie in (0, 1)");
  const auto fg = probs.foreground_plane();
  std::vector<std::uint8_t> labels(fg.size());
  for (std::size_t i = 0; i < fg.size(); ++i) labels[i] = fg[i] >= tau ? 1 : 0;
  return BinaryMask(probs.rows(), probs.cols(), std::move(labels));
}

std::vector<std::vector<PixelCoord>> connected_components(const BinaryMask& mask, Connectivity connectivity) {
  const int rows = mask.rows();
  const int cols = mask.cols();
  std::vector<int> provisional(static_cast<std::size_t>(rows) * cols, -1);
  DisjointSet sets;
  const bool eight = connectivity == Connectivity::kEight;

  // First pass: label from the already-visited neighbours (up-left, up,
  // up-right, left).
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!mask.at(r, c)) continue;
      int label = -1;
      auto visit = [&](int rr, int cc) {
        if (rr < 0 || cc < 0 || cc >= cols) return;
        const int other = provisional[static_cast<std::size_t>(rr) * cols + cc];
        if (other < 0) return;
        if (label < 0) {
          label = other;
        } else {
          sets.unite(label, other);
        }
      };
      visit(r, c - 1);
      visit(r - 1, c);
      if (eight) {
        visit(r - 1, c - 1);
        visit(r - 1, c + 1);
      }
      provisional[static_cast<std::size_t>(r) * cols + c] = label >= 0 ? label : sets.make();
    }
  }

  // Second pass: resolve roots; components numbered by first appearance.
  std::vector<std::vector<PixelCoord>> components;
  std::vector<int> root_to_component;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int label = provisional[static_cast<std::size_t>(r) * cols + c];
      if (label < 0) continue;
      const int root = sets.find(label);
      if (root >= static_cast<int>(root_to_component.size())) root_to_component.resize(root + 1, -1);
      if (root_to_component[root] < 0) {
        root_to_component[root] = static_cast<int>(components.size());
        components.emplace_back();
      }
      components[root_to_component[root]].push_back({r, c});
    }
  }
  return components;
}

double component_confidence(std::span<const PixelCoord> component, const ProbabilityMask& probs) {
  require(!component.empty(), "component_confidence: empty component");
  double sum = 0.0;
  for (const auto& p : component) sum += probs.foreground(p.row, p.col);
  return sum / static_cast<double>(component.size());
}

std::vector<ConnectedComponent> rank_components(const ProbabilityMask& probs, const PromptConfig& config) {
  std::vector<ConnectedComponent> ranked;
  for (auto& pixels : connected_components(threshold_mask(probs, config.threshold), config.connectivity)) {
    const double conf = component_confidence(pixels, probs);
    ranked.push_back({std::move(pixels), conf});
  }
  std::sort(ranked.begin(), ranked.end(), [](const ConnectedComponent& a, const ConnectedComponent& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.pixels.size() != b.pixels.size()) return a.pixels.size() > b.pixels.size();
    return a.pixels.front() < b.pixels.front();
  });
  return ranked;
}

PixelCoord snap_to_component(double row, double col, std::span<const PixelCoord> component) {
  require(!component.empty(), "snap_to_component: empty component");
  PixelCoord best = component.front();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const auto& p : component) {
    const double dr = p.row - row;
    const double dc = p.col - col;
    const double d2 = dr * dr + dc * dc;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = p;
    }
  }
  return best;
}

std::optional<PromptBundle> extract_prompts(const ProbabilityMask& probs, const PromptSet& enabled,
                                            const PromptConfig& config) {
  require(!enabled.empty(), "extract_prompts: no prompt kinds enabled");
  require(config.threshold > 0.0 && config.threshold < 1.0, "extract_prompts: threshold must lie in (0, 1)");
  auto ranked = rank_components(probs, config);
  if (ranked.empty()) return std::nullopt;

  PromptBundle bundle;
  bundle.source_component = std::move(ranked.front());
  bundle.enabled = enabled;
  bundle.frame = probs.shape();
  const auto& pixels = bundle.source_component.pixels;

  if (enabled.contains(PromptKind::kBbox)) {
    BoundingBox box{pixels.front().row, pixels.front().col, pixels.front().row, pixels.front().col};
    for (const auto& p : pixels) {
      box.row_min = std::min(box.row_min, p.row);
      box.row_max = std::max(box.row_max, p.row);
      box.col_min = std::min(box.col_min, p.col);
      box.col_max = std::max(box.col_max, p.col);
    }
    bundle.bbox = box;
  }
  if (enabled.contains(PromptKind::kCent)) {
    double sr = 0.0, sc = 0.0;
    for (const auto& p : pixels) {
      sr += p.row;
      sc += p.col;
    }
    const auto n = static_cast<double>(pixels.size());
    const auto snapped = snap_to_component(sr / n, sc / n, pixels);
    bundle.points.push_back({snapped.row, snapped.col, Polarity::kPositive, PromptKind::kCent});
  }
  if (enabled.contains(PromptKind::kConf)) {
    for (const auto& p : top_pixels(pixels, config.conf_points,
                                    [&](const PixelCoord& q) { return probs.foreground(q.row, q.col); }))
      bundle.points.push_back({p.row, p.col, Polarity::kPositive, PromptKind::kConf});
  }
  if (enabled.contains(PromptKind::kNeg)) {
    const auto inside = bundle.component_mask();
    std::vector<PixelCoord> exterior;
    for (int r = 0; r < probs.rows(); ++r)
      for (int c = 0; c < probs.cols(); ++c)
        if (!inside.at(r, c)) exterior.push_back({r, c});
    // A component covering the whole frame leaves nowhere for a negative point.
    for (const auto& p : top_pixels(std::move(exterior), config.neg_points,
                                    [&](const PixelCoord& q) { return probs.background(q.row, q.col); }))
      bundle.points.push_back({p.row, p.col, Polarity::kNegative, PromptKind::kNeg});
  }
  return bundle;
}

}  // namespace protoprompt
