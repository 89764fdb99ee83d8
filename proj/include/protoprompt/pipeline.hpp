#pragma once

#include <memory>
#include <mutex>
#include <optional>

#include "protoprompt/encoder.hpp"
#include "protoprompt/prompts.hpp"
#include "protoprompt/proto_seg.hpp"
#include "protoprompt/segmenter.hpp"

namespace protoprompt {

struct PipelineConfig {
  // Square working resolution for both images; 0 keeps the native size.
  int image_size = 672;
  ProtoSegConfig protoseg;
  PromptConfig prompts;
  PromptSet enabled{PromptKind::kBbox, PromptKind::kConf, PromptKind::kCent};
};

struct RefineResult {
  std::optional<PromptBundle> prompts;  // nullopt: empty coarse prediction
  BinaryMask mask;
  double score = 0.0;
  int segmenter_calls = 0;
};

// Coarse map -> prompts -> promptable segmenter. An empty coarse prediction
// yields an empty mask without calling the segmenter.
RefineResult refine(const ProbabilityMask& coarse, const Image2D& image, const PromptableSegmenter& segmenter,
                    const PromptSet& enabled, const PromptConfig& config);

struct PipelineTimings {
  double coarse_ms = 0.0;
  double refine_ms = 0.0;  // prompt extraction + segmenter
};

struct PipelineResult {
  Shape2D working_shape;
  ProbabilityMask coarse;               // working frame
  std::optional<PromptBundle> prompts;  // working frame
  BinaryMask final_mask;                // native query frame
  double segmenter_score = 0.0;
  int segmenter_calls = 0;
  PipelineTimings timings;

  bool empty_prediction() const { return !prompts.has_value(); }
};

class Pipeline {
 public:
  Pipeline(std::shared_ptr<const EncoderBackend> encoder, std::shared_ptr<const PromptableSegmenter> segmenter,
           PipelineConfig config);

  PipelineResult run(const Image2D& support_image, const BinaryMask& support_mask, const Image2D& query) const;
  BinaryMask segment(const Image2D& support_image, const BinaryMask& support_mask, const Image2D& query) const {
    return run(support_image, support_mask, query).final_mask;
  }

  const PipelineConfig& config() const { return config_; }
  const EncoderBackend& encoder() const { return *encoder_; }
  const PromptableSegmenter& segmenter() const { return *segmenter_; }

 private:
  std::shared_ptr<const EncoderBackend> encoder_;
  std::shared_ptr<const PromptableSegmenter> segmenter_;
  PipelineConfig config_;
  mutable std::mutex encoder_mutex_;
  mutable std::mutex segmenter_mutex_;
};

}  // namespace protoprompt
