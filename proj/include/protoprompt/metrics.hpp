#pragma once

// Overlap metrics and the statistics used to compare evaluation runs.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "protoprompt/types.hpp"

namespace protoprompt {

struct OverlapCounts {
  std::size_t intersection = 0;
  std::size_t predicted = 0;
  std::size_t truth = 0;

  std::size_t union_size() const { return predicted + truth - intersection; }
  OverlapCounts& operator+=(const OverlapCounts& other);
};

OverlapCounts overlap(const BinaryMask& prediction, const BinaryMask& truth);

// Both-empty inputs score 1.0.
double dice(const OverlapCounts& counts);
double iou(const OverlapCounts& counts);
double dice(const BinaryMask& a, const BinaryMask& b);
double iou(const BinaryMask& a, const BinaryMask& b);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation over folds
  std::vector<int> folds;
  std::vector<int> missing_folds;

  bool complete() const { return missing_folds.empty(); }
  // "mean±std" in percent with two decimals, plus a note when folds are missing.
  std::string format_percent() const;
};

// Mean and sample std over the fold scores present; folds 0..k-1 that are
// absent are listed in missing_folds. At least two folds are required.
Aggregate crossval_aggregate(const std::map<int, double>& fold_scores, int k);

enum class WilcoxonMethod { kExact, kNormal, kAllZero };

struct WilcoxonResult {
  double p_value = 1.0;
  double w_plus = 0.0;  // sum of ranks of positive differences
  int n_used = 0;       // pairs left after dropping zero differences
  WilcoxonMethod method = WilcoxonMethod::kAllZero;
};

// Two-sided paired signed-rank test on x - y. Zero differences are dropped
// and tied magnitudes get average ranks. The null distribution is exact for
// up to kWilcoxonExactLimit non-zero pairs and normal (tie-corrected, no
// continuity correction) above.
inline constexpr int kWilcoxonExactLimit = 25;
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

}  // namespace protoprompt
