#include "protoprompt/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "protoprompt/error.hpp"

namespace protoprompt {

std::vector<SliceRange> split_range(const SliceRange& range, int sections) {
  require(sections >= 1, "split_range: sections must be >= 1");
  require(range.size() >= 1, "split_range: empty range");
  const int n = range.size();
  const int base = n / sections;
  const int extra = n % sections;
  std::vector<SliceRange> out;
  int start = range.first;
  for (int i = 0; i < sections; ++i) {
    const int len = base + (i < extra ? 1 : 0);
    if (len == 0) continue;
    out.push_back({start, start + len - 1});
    start += len;
  }
  return out;
}

SliceRange class_span(const std::vector<BinaryMask>& class_masks) {
  int first = -1, last = -1;
  for (int i = 0; i < static_cast<int>(class_masks.size()); ++i) {
    if (class_masks[i].count() == 0) continue;
    if (first < 0) first = i;
    last = i;
  }
  if (first < 0) fail(ErrorCode::kClassNotFound, "class is absent from every slice of the volume");
  return {first, last};
}

std::vector<SliceRange> chunk_sections(const std::vector<BinaryMask>& class_masks, int sections) {
  require(sections >= 1, "chunk_sections: C must be >= 1");
  return split_range(class_span(class_masks), sections);
}

void VolumePair::validate() const {
  require(!support.empty() && !query.empty(), "VolumePair: support and query stacks must be non-empty");
  require(support_scan != query_scan,
          "VolumePair: support and query must come from different scans (both '" + query_scan + "')");
  for (const auto* stack : {&support, &query}) {
    for (const auto& s : *stack)
      require(s.image.shape() == s.mask.shape(), "VolumePair: slice image and mask differ in shape");
  }
}

SegmentFn segment_with(const Pipeline& pipeline) {
  return [&pipeline](const Image2D& support_image, const BinaryMask& support_mask, const Image2D& query) {
    return pipeline.segment(support_image, support_mask, query);
  };
}

OverlapCounts VolumeResult::totals() const {
  OverlapCounts sum;
  for (const auto& s : slices) sum += s.counts;
  return sum;
}

double VolumeResult::mean_slice_dice() const {
  double total = 0.0;
  int n = 0;
  for (const auto& s : slices) {
    if (s.excluded) continue;
    total += s.dice();
    ++n;
  }
  return n > 0 ? total / n : 0.0;
}

namespace {

std::vector<BinaryMask> masks_of(const std::vector<AnnotatedSlice>& stack) {
  std::vector<BinaryMask> out;
  out.reserve(stack.size());
  for (const auto& s : stack) out.push_back(s.mask);
  return out;
}

}  // namespace

VolumeResult evaluate_volume(const SegmentFn& segment, const VolumePair& pair, const EvaluationOptions& options) {
  pair.validate();
  const auto query_sections = chunk_sections(masks_of(pair.query), options.sections);
  const auto support_sections = chunk_sections(masks_of(pair.support), options.sections);

  VolumeResult result{pair.class_id, pair.support_scan, pair.query_scan, pair.fold, {}};
  const std::size_t nq = query_sections.size(), ns = support_sections.size();
  for (std::size_t i = 0; i < nq; ++i) {
    const int support_slice = support_sections[i * ns / nq].middle();
    const auto& guide = pair.support[support_slice];
    for (int q = query_sections[i].first; q <= query_sections[i].last; ++q) {
      const auto& target = pair.query[q];
      const BinaryMask prediction = segment(guide.image, guide.mask, target.image);
      require(prediction.shape() == target.mask.shape(), "evaluate_volume: prediction shape " +
                                                             to_string(prediction.shape()) + " differs from slice " +
                                                             to_string(target.mask.shape()));
      SliceRecord rec;
      rec.slice = q;
      rec.section = static_cast<int>(i);
      rec.support_slice = support_slice;
      rec.counts = overlap(prediction, target.mask);
      rec.excluded = options.exclude_empty_slices && rec.counts.predicted == 0 && rec.counts.truth == 0;
      result.slices.push_back(rec);
    }
  }
  return result;
}

std::vector<VolumeResult> evaluate_volumes(const SegmentFn& segment, const std::vector<VolumePair>& pairs,
                                           const EvaluationOptions& options, int workers) {
  require(workers >= 1, "evaluate_volumes: workers must be >= 1");
  std::vector<VolumeResult> results(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      try {
        results[i] = evaluate_volume(segment, pairs[i], options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::min<int>(workers, static_cast<int>(pairs.size()));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::vector<std::string> canonical_class_order(std::vector<std::string> classes) {
  static const std::vector<std::string> organs = {"lk", "rk", "spleen", "liver"};
  auto rank = [](const std::string& c) {
    const auto it = std::find(organs.begin(), organs.end(), c);
    return it == organs.end() ? organs.size() : static_cast<std::size_t>(it - organs.begin());
  };
  std::sort(classes.begin(), classes.end(), [&](const std::string& a, const std::string& b) {
    const auto ra = rank(a), rb = rank(b);
    return ra != rb ? ra < rb : a < b;
  });
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

namespace {

Aggregate aggregate_or_empty(const std::map<int, double>& scores, int k) {
  // Fewer than two folds cannot carry a std; report what exists with every
  // other fold listed as missing.
  if (scores.size() >= 2) return crossval_aggregate(scores, k);
  Aggregate agg;
  for (int f = 0; f < k; ++f) {
    if (scores.count(f)) {
      agg.folds.push_back(f);
      agg.mean = scores.at(f);
    } else {
      agg.missing_folds.push_back(f);
    }
  }
  return agg;
}

}  // namespace

std::vector<ClassSummary> summarize(const EvalReport& report) {
  std::vector<std::string> ids;
  for (const auto& v : report.volumes) ids.push_back(v.class_id);
  std::vector<ClassSummary> out;
  for (const auto& id : canonical_class_order(ids)) {
    ClassSummary cs;
    cs.class_id = id;
    for (const auto& v : report.volumes) {
      if (v.class_id != id) continue;
      auto& fs = cs.folds[v.fold];
      fs.dice += v.dice();
      fs.iou += v.iou();
      ++fs.volumes;
    }
    std::map<int, double> dice_by_fold, iou_by_fold;
    for (auto& [fold, fs] : cs.folds) {
      fs.dice /= fs.volumes;
      fs.iou /= fs.volumes;
      dice_by_fold[fold] = fs.dice;
      iou_by_fold[fold] = fs.iou;
    }
    cs.dice = aggregate_or_empty(dice_by_fold, report.folds);
    cs.iou = aggregate_or_empty(iou_by_fold, report.folds);
    out.push_back(std::move(cs));
  }
  return out;
}

MeanSummary summarize_mean(const std::vector<ClassSummary>& classes, int k) {
  MeanSummary ms;
  std::map<int, double> dice_by_fold, iou_by_fold;
  for (int f = 0; f < k && !classes.empty(); ++f) {
    FoldScore fs;
    bool complete = true;
    for (const auto& cs : classes) {
      const auto it = cs.folds.find(f);
      if (it == cs.folds.end()) {
        complete = false;
        break;
      }
      fs.dice += it->second.dice;
      fs.iou += it->second.iou;
      fs.volumes += it->second.volumes;
    }
    if (!complete) continue;
    fs.dice /= static_cast<double>(classes.size());
    fs.iou /= static_cast<double>(classes.size());
    ms.folds[f] = fs;
    dice_by_fold[f] = fs.dice;
    iou_by_fold[f] = fs.iou;
  }
  ms.dice = aggregate_or_empty(dice_by_fold, k);
  ms.iou = aggregate_or_empty(iou_by_fold, k);
  return ms;
}

std::vector<WilcoxonRow> compare_reports(const EvalReport& a, const EvalReport& b) {
  const auto sa = summarize(a), sb = summarize(b);
  using Key = std::pair<std::string, int>;
  auto keyed = [](const std::vector<ClassSummary>& s) {
    std::map<Key, double> m;
    for (const auto& cs : s)
      for (const auto& [fold, fs] : cs.folds) m[{cs.class_id, fold}] = fs.dice;
    return m;
  };
  const auto ka = keyed(sa), kb = keyed(sb);
  for (const auto* pair : {&ka, &kb}) {
    const auto& other = pair == &ka ? kb : ka;
    for (const auto& [key, _] : *pair) {
      if (!other.count(key)) {
        fail(ErrorCode::kInvalidComparison, "reports do not cover the same (class, fold) pairs: '" + key.first +
                                                "' fold " + std::to_string(key.second) + " is only in one report");
      }
    }
  }
  auto row = [](const std::string& label, const std::vector<double>& x, const std::vector<double>& y) {
    WilcoxonRow r;
    r.label = label;
    r.test = wilcoxon_signed_rank(x, y);
    for (double v : x) r.mean_a += v / static_cast<double>(x.size());
    for (double v : y) r.mean_b += v / static_cast<double>(y.size());
    return r;
  };
  std::vector<WilcoxonRow> rows;
  std::vector<double> all_a, all_b;
  for (const auto& cs : sa) {
    for (const auto& [fold, _] : cs.folds) {
      all_a.push_back(ka.at({cs.class_id, fold}));
      all_b.push_back(kb.at({cs.class_id, fold}));
    }
  }
  if (all_a.size() < 5) {
    fail(ErrorCode::kInvalidComparison,
         "need at least 5 paired (class, fold) scores for a signed-rank test, got " + std::to_string(all_a.size()));
  }
  rows.push_back(row("all", all_a, all_b));
  for (const auto& cs : sa) {
    if (cs.folds.size() < 5) continue;
    std::vector<double> x, y;
    for (const auto& [fold, _] : cs.folds) {
      x.push_back(ka.at({cs.class_id, fold}));
      y.push_back(kb.at({cs.class_id, fold}));
    }
    rows.push_back(row(cs.class_id, x, y));
  }
  return rows;
}

const char* to_string(WilcoxonMethod method) {
  switch (method) {
    case WilcoxonMethod::kExact: return "exact";
    case WilcoxonMethod::kNormal: return "normal";
    case WilcoxonMethod::kAllZero: return "all-zero";
  }
  return "?";
}

}  // namespace protoprompt
