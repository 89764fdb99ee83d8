#include "protoprompt/pipeline.hpp"

#include <chrono>

#include "protoprompt/error.hpp"
#include "protoprompt/resize.hpp"

namespace protoprompt {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Forwards to another backend, holding a lock around encode() when the inner
// backend is not thread-safe.
class LockingEncoder : public EncoderBackend {
 public:
  LockingEncoder(const EncoderBackend& inner, std::mutex& mutex) : inner_(inner), mutex_(mutex) {}

  std::string name() const override { return inner_.name(); }
  int feature_dim() const override { return inner_.feature_dim(); }
  int patch_stride() const override { return inner_.patch_stride(); }
  bool thread_safe() const override { return true; }

  FeatureMap encode(const Image2D& image) const override {
    if (inner_.thread_safe()) return inner_.encode(image);
    std::lock_guard lock(mutex_);
    return inner_.encode(image);
  }

 private:
  const EncoderBackend& inner_;
  std::mutex& mutex_;
};

class LockingSegmenter : public PromptableSegmenter {
 public:
  LockingSegmenter(const PromptableSegmenter& inner, std::mutex& mutex) : inner_(inner), mutex_(mutex) {}

  std::string name() const override { return inner_.name(); }
  PromptSet accepts() const override { return inner_.accepts(); }

 protected:
  std::vector<SegmentationCandidate> predict(const Image2D& image, const PromptBundle& prompts) const override {
    if (inner_.thread_safe()) return {inner_.segment(image, prompts)};
    std::lock_guard lock(mutex_);
    return {inner_.segment(image, prompts)};
  }

 private:
  const PromptableSegmenter& inner_;
  std::mutex& mutex_;
};

}  // namespace

RefineResult refine(const ProbabilityMask& coarse, const Image2D& image, const PromptableSegmenter& segmenter,
                    const PromptSet& enabled, const PromptConfig& config) {
  require(coarse.shape() == image.shape(), "refine: coarse map and image differ in shape");
  RefineResult result;
  result.prompts = extract_prompts(coarse, enabled, config);
  if (!result.prompts) {
    result.mask = BinaryMask::filled(image.shape(), false);
    return result;
  }
  auto candidate = segmenter.segment(image, *result.prompts);
  result.mask = std::move(candidate.mask);
  result.score = candidate.score;
  result.segmenter_calls = 1;
  return result;
}

Pipeline::Pipeline(std::shared_ptr<const EncoderBackend> encoder, std::shared_ptr<const PromptableSegmenter> segmenter,
                   PipelineConfig config)
    : encoder_(std::move(encoder)), segmenter_(std::move(segmenter)), config_(std::move(config)) {
  require(encoder_ != nullptr && segmenter_ != nullptr, "Pipeline: backends must not be null");
  require(config_.image_size >= 0, "Pipeline: image_size must be >= 0");
  require(!config_.enabled.empty(), "Pipeline: no prompt kinds enabled");
}

PipelineResult Pipeline::run(const Image2D& support_image, const BinaryMask& support_mask, const Image2D& query) const {
  require(support_image.shape() == support_mask.shape(), "Pipeline: support image and mask differ in shape");
  PipelineResult result;
  const Shape2D working =
      config_.image_size > 0 ? Shape2D{config_.image_size, config_.image_size} : query.shape();
  const Shape2D support_working =
      config_.image_size > 0 ? Shape2D{config_.image_size, config_.image_size} : support_image.shape();
  result.working_shape = working;

  const Image2D support_w = resize(support_image, support_working, Interpolation::kBilinear);
  const BinaryMask mask_w = resize(support_mask, support_working, Interpolation::kNearest);
  const Image2D query_w = resize(query, working, Interpolation::kBilinear);

  auto t0 = Clock::now();
  const LockingEncoder encoder(*encoder_, encoder_mutex_);
  result.coarse = coarse_segment(support_w, mask_w, query_w, encoder, config_.protoseg);
  result.timings.coarse_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const LockingSegmenter segmenter(*segmenter_, segmenter_mutex_);
  auto refined = refine(result.coarse, query_w, segmenter, config_.enabled, config_.prompts);
  result.timings.refine_ms = elapsed_ms(t0);
  result.prompts = std::move(refined.prompts);
  result.segmenter_score = refined.score;
  result.segmenter_calls = refined.segmenter_calls;
  result.final_mask = resize(refined.mask, query.shape(), Interpolation::kNearest);
  return result;
}

}  // namespace protoprompt
