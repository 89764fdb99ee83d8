#pragma once

// Self-supervised episodic fine-tuning of a low-rank feature adapter:
// superpixel pseudo-labels, augmented query views, a cross-entropy
// segmentation loss and a reversed-role prototype alignment loss.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "protoprompt/augment.hpp"
#include "protoprompt/encoder.hpp"
#include "protoprompt/proto_seg.hpp"
#include "protoprompt/superpixel.hpp"

namespace protoprompt {

inline constexpr double kProbabilityFloor = 1e-8;

struct TrainEpisode {
  Image2D support_image;
  BinaryMask support_mask;  // indicator of the sampled superpixel
  Image2D query;            // geometric(intensity(support_image))
  BinaryMask query_truth;   // geometric(support_mask)
  int segment = 0;
  AffineTransform geometric;
  IntensityTransform intensity;
};

TrainEpisode build_episode(const Image2D& image, const SuperpixelLabelMap& superpixels, int segment,
                           const AffineTransform& geometric, const IntensityTransform& intensity);
// Samples the segment uniformly and both transforms from `config`.
TrainEpisode build_episode(const Image2D& image, const SuperpixelLabelMap& superpixels, std::mt19937_64& rng,
                           const AugmentConfig& config);

// Mean pixelwise two-class cross-entropy with probabilities floored at
// kProbabilityFloor.
double seg_loss(const ProbabilityMask& prediction, const BinaryMask& truth);

// Thresholded query prediction carried back to the support frame through the
// inverse geometric transform (nearest neighbour).
BinaryMask prediction_in_support_frame(const ProbabilityMask& query_prediction, const AffineTransform& geometric,
                                       double threshold = 0.5);

// Prototypes from (support_image, pred_as_label) segment support_image; the
// result is scored against original_label. An empty pred_as_label scores an
// all-background prediction.
double alignment_loss(const Image2D& support_image, const BinaryMask& pred_as_label, const BinaryMask& original_label,
                      const EncoderBackend& backend, const ProtoSegConfig& config);

// Frozen stub encoder plus a low-rank residual adapter on its output features:
// f = f0 + B A f0 with A (rank x D) and B (D x rank). B starts at zero, so a
// fresh adapter reproduces the base encoder exactly.
class TrainableStubEncoder : public EncoderBackend {
 public:
  TrainableStubEncoder(StubEncoderOptions base, int rank, std::uint64_t adapter_seed = 0);

  std::string name() const override { return "stub+adapter"; }
  int feature_dim() const override { return base_.feature_dim(); }
  int patch_stride() const override { return base_.patch_stride(); }
  FeatureMap encode(const Image2D& image) const override { return adapt(base_.encode(image)); }

  const StubEncoder& base() const { return base_; }
  int rank() const { return rank_; }
  std::span<const double> parameters() const { return params_; }
  void set_parameters(std::span<const double> params);
  std::size_t parameter_count() const { return params_.size(); }

  FeatureMap adapt(const FeatureMap& base_features) const;
  // Adds d(loss)/d(params) given d(loss)/d(adapted features), cell-major.
  void accumulate_gradient(const FeatureMap& base_features, std::span<const double> feature_grad,
                           std::span<double> param_grad) const;

 private:
  StubEncoder base_;
  int rank_;
  std::vector<double> params_;  // A row-major, then B row-major
};

// Forward value and feature gradients of seg_loss(match(prototypes from
// (proto_features, proto_mask)), truth) at truth's resolution.
struct PrototypeLossGradient {
  double loss = 0.0;
  ProbabilityMask prediction;
  std::vector<double> proto_grad;  // cell-major, like FeatureMap values
  std::vector<double> query_grad;
};
PrototypeLossGradient prototype_loss_gradient(const FeatureMap& proto_features, const BinaryMask& proto_mask,
                                              const FeatureMap& query_features, const BinaryMask& truth,
                                              const ProtoSegConfig& config);

struct EpisodeLoss {
  double seg = 0.0;
  double reg = 0.0;
  double total = 0.0;
  std::vector<double> gradient;  // empty unless requested
};
EpisodeLoss episode_loss(const TrainEpisode& episode, const TrainableStubEncoder& encoder,
                         const ProtoSegConfig& config, double reg_weight, bool with_gradient);

struct TrainConfig {
  int steps = 100000;
  double learning_rate = 1e-4;
  int image_size = 256;
  int adapter_rank = 4;
  std::uint64_t seed = 0;
  double reg_weight = 1.0;
  int checkpoint_interval = 1000;
  std::filesystem::path output_dir = "runs/finetune";
  AugmentConfig augment;
  ProtoSegConfig protoseg;
  SuperpixelParams superpixels;
};

struct TrainingImage {
  Image2D image;
  SuperpixelLabelMap superpixels;
};

struct StepLoss {
  int step = 0;
  double seg = 0.0;
  double reg = 0.0;
};

struct TrainReport {
  std::vector<StepLoss> history;  // steps run in this call
  std::filesystem::path last_checkpoint;
};

// Adam on the adapter parameters. Each step draws its episode from an RNG
// seeded with (seed, step), so a run resumed from a checkpoint matches an
// uninterrupted one. Writes `adapter_step{N}.json` every checkpoint_interval
// steps and at the end, and appends {step, l_seg, l_reg} lines to train_log.jsonl.
TrainReport train(const std::vector<TrainingImage>& images, TrainableStubEncoder& encoder, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& resume_from = std::nullopt);

struct AdapterCheckpoint {
  int step = 0;
  int rank = 0;
  StubEncoderOptions base;
  std::vector<double> params;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
};

void save_checkpoint(const std::filesystem::path& path, const AdapterCheckpoint& checkpoint);
AdapterCheckpoint load_checkpoint(const std::filesystem::path& path);
// Encoder with the checkpoint's base options and adapter parameters.
TrainableStubEncoder encoder_from_checkpoint(const AdapterCheckpoint& checkpoint);

}  // namespace protoprompt
