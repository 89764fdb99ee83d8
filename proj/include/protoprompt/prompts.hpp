#pragma once

#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protoprompt/types.hpp"

namespace protoprompt {

// Set of prompt kinds, e.g. {bbox, conf, cent}.
class PromptSet {
 public:
  PromptSet() = default;
  PromptSet(std::initializer_list<PromptKind> kinds) {
    for (auto k : kinds) insert(k);
  }

  // Accepts "bbox,conf,cent" or "bbox+conf+cent" (case-insensitive).
  static PromptSet parse(std::string_view text);
  static PromptSet all() { return {PromptKind::kBbox, PromptKind::kCent, PromptKind::kConf, PromptKind::kNeg}; }

  void insert(PromptKind kind) { bits_ |= bit(kind); }
  bool contains(PromptKind kind) const { return (bits_ & bit(kind)) != 0; }
  bool empty() const { return bits_ == 0; }
  bool subset_of(const PromptSet& other) const { return (bits_ & ~other.bits_) == 0; }
  std::vector<PromptKind> kinds() const;

  // Canonical order cent, conf, neg, bbox joined with '+'.
  std::string to_string() const;
  friend bool operator==(const PromptSet&, const PromptSet&) = default;

 private:
  static unsigned bit(PromptKind kind) { return 1u << static_cast<unsigned>(kind); }
  unsigned bits_ = 0;
};

enum class Connectivity { kFour = 4, kEight = 8 };

struct PixelCoord {
  int row = 0;
  int col = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

struct ConnectedComponent {
  std::vector<PixelCoord> pixels;  // scan order
  double confidence = 0.0;
};

struct PromptConfig {
  double threshold = 0.5;
  Connectivity connectivity = Connectivity::kEight;
  int conf_points = 1;
  int neg_points = 1;
};

struct PromptBundle {
  std::optional<BoundingBox> bbox;
  std::vector<PointPrompt> points;
  ConnectedComponent source_component;
  PromptSet enabled;
  Shape2D frame;  // image shape the coordinates refer to

  BinaryMask component_mask() const;
  // Kinds actually carried by the bundle.
  PromptSet present() const;
};

// 1 where the foreground probability is >= tau.
BinaryMask threshold_mask(const ProbabilityMask& probs, double tau);

// Maximal connected sets of foreground pixels. Components are ordered by
// their first pixel in scan order and list their pixels in scan order.
std::vector<std::vector<PixelCoord>> connected_components(const BinaryMask& mask, Connectivity connectivity);

// Mean foreground probability over the component's pixels.
double component_confidence(std::span<const PixelCoord> component, const ProbabilityMask& probs);

// Components of the thresholded map ordered best first: confidence descending,
// then pixel count descending, then first pixel in scan order.
std::vector<ConnectedComponent> rank_components(const ProbabilityMask& probs, const PromptConfig& config);

// Component pixel nearest (Euclidean) to a real-valued location; ties go to
// the earliest pixel in scan order.
PixelCoord snap_to_component(double row, double col, std::span<const PixelCoord> component);

// Prompts from the most confident component. nullopt signals an empty
// prediction (no pixel reached the threshold).
std::optional<PromptBundle> extract_prompts(const ProbabilityMask& probs, const PromptSet& enabled,
                                            const PromptConfig& config);

}  // namespace protoprompt
