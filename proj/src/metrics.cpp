#include "protoprompt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "protoprompt/error.hpp"

namespace protoprompt {

OverlapCounts& OverlapCounts::operator+=(const OverlapCounts& other) {
  intersection += other.intersection;
  predicted += other.predicted;
  truth += other.truth;
  return *this;
}

OverlapCounts overlap(const BinaryMask& prediction, const BinaryMask& truth) {
  require(prediction.shape() == truth.shape(), "overlap: mask shapes differ (" + to_string(prediction.shape()) +
                                                   " vs " + to_string(truth.shape()) + ")");
  OverlapCounts c;
  const auto a = prediction.labels(), b = truth.labels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    c.predicted += a[i];
    c.truth += b[i];
    c.intersection += a[i] & b[i];
  }
  return c;
}

double dice(const OverlapCounts& c) {
  if (c.predicted + c.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(c.intersection) / static_cast<double>(c.predicted + c.truth);
}

double iou(const OverlapCounts& c) {
  if (c.union_size() == 0) return 1.0;
  return static_cast<double>(c.intersection) / static_cast<double>(c.union_size());
}

double dice(const BinaryMask& a, const BinaryMask& b) { return dice(overlap(a, b)); }
double iou(const BinaryMask& a, const BinaryMask& b) { return iou(overlap(a, b)); }

std::string Aggregate::format_percent() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", 100.0 * mean, 100.0 * std);
  std::string out = buf;
  if (!missing_folds.empty()) {
    out += " (missing fold";
    for (int f : missing_folds) out += " " + std::to_string(f);
    out += ")";
  }
  return out;
}

Aggregate crossval_aggregate(const std::map<int, double>& fold_scores, int k) {
  require(k >= 2, "crossval_aggregate: k must be >= 2");
  Aggregate agg;
  std::vector<double> values;
  for (int f = 0; f < k; ++f) {
    const auto it = fold_scores.find(f);
    if (it == fold_scores.end()) {
      agg.missing_folds.push_back(f);
      continue;
    }
    agg.folds.push_back(f);
    values.push_back(it->second);
  }
  for (const auto& [fold, _] : fold_scores)
    require(fold >= 0 && fold < k, "crossval_aggregate: fold " + std::to_string(fold) + " outside 0.." +
                                       std::to_string(k - 1));
  require(values.size() >= 2, "crossval_aggregate: need at least two folds with results, got " +
                                  std::to_string(values.size()));
  const double n = static_cast<double>(values.size());
  agg.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
  agg.std = std::sqrt(ss / (n - 1.0));
  return agg;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "wilcoxon: samples must be paired (equal length)");
  require(x.size() >= 5, "wilcoxon: need at least 5 pairs, got " + std::to_string(x.size()));
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(std::isfinite(x[i]) && std::isfinite(y[i]), "wilcoxon: non-finite sample");
    if (x[i] != y[i]) diffs.push_back(x[i] - y[i]);
  }
  WilcoxonResult result;
  result.n_used = static_cast<int>(diffs.size());
  if (diffs.empty()) return result;

  // Average ranks of |d|, kept doubled so that they are integers.
  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    const long doubled = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1..j+1
    for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = doubled;
    const double tie = static_cast<double>(j - i + 1);
    tie_term += tie * tie * tie - tie;
    i = j + 1;
  }
  long w2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (diffs[i] > 0) w2 += rank2[i];
  result.w_plus = w2 / 2.0;

  if (static_cast<int>(n) <= kWilcoxonExactLimit) {
    result.method = WilcoxonMethod::kExact;
    const long total = std::accumulate(rank2.begin(), rank2.end(), 0L);
    // counts[s]: number of sign assignments whose doubled positive-rank sum is s.
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    long reach = 0;
    for (long r : rank2) {
      for (long s = reach; s >= 0; --s)
        if (counts[s] != 0.0) counts[s + r] += counts[s];
      reach += r;
    }
    double lower = 0.0, upper = 0.0, all = 0.0;
    for (long s = 0; s <= total; ++s) {
      all += counts[s];
      if (s <= w2) lower += counts[s];
      if (s >= w2) upper += counts[s];
    }
    result.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    return result;
  }

  result.method = WilcoxonMethod::kNormal;
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return result;
  const double z = (result.w_plus - mean) / std::sqrt(var);
  result.p_value = std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
  return result;
}

}  // namespace protoprompt
