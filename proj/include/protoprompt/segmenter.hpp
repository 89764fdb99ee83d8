#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "protoprompt/prompts.hpp"
#include "protoprompt/types.hpp"

namespace protoprompt {

struct SegmentationCandidate {
  BinaryMask mask;
  double score = 0.0;
};

// Promptable refinement model: (image, prompts) -> mask.
class PromptableSegmenter {
 public:
  virtual ~PromptableSegmenter() = default;

  virtual std::string name() const = 0;
  virtual PromptSet accepts() const = 0;
  virtual bool thread_safe() const { return true; }

  // Validates the bundle against accepts() and returns the highest-scoring
  // candidate (first one on ties).
  SegmentationCandidate segment(const Image2D& image, const PromptBundle& prompts) const;

 protected:
  virtual std::vector<SegmentationCandidate> predict(const Image2D& image, const PromptBundle& prompts) const = 0;
};

enum class StubSegmenterMode {
  // Fills the bounding-box prompt; without one, the box spanned by the
  // positive points.
  kBoxFill,
  // Returns the prompt bundle's source component.
  kComponentEcho,
};

class StubSegmenter : public PromptableSegmenter {
 public:
  explicit StubSegmenter(StubSegmenterMode mode, PromptSet accepts = PromptSet::all())
      : mode_(mode), accepts_(accepts) {}

  std::string name() const override;
  PromptSet accepts() const override { return accepts_; }
  StubSegmenterMode mode() const { return mode_; }

 protected:
  std::vector<SegmentationCandidate> predict(const Image2D& image, const PromptBundle& prompts) const override;

 private:
  StubSegmenterMode mode_;
  PromptSet accepts_;
};

enum class ExternalSegmenterVariant { kHuge, kBase, kMedSamBase };

struct ExternalSegmenterOptions {
  ExternalSegmenterVariant variant = ExternalSegmenterVariant::kHuge;
  std::string command = "python3 tools/external_backend.py";
  std::filesystem::path weights_path;
  std::string device = "cpu";
};

// Adapter for a SAM-class model served by a helper process.
// Protocol: `<command> segment --model M --weights W --device D --image in.npy
// --prompts prompts.json --output masks.npy --scores scores.json`. in.npy is
// float32 (H, W, C); prompts.json holds pixel coordinates in the image frame
// (see prompts_to_json); masks.npy is uint8 (K, H, W) and scores.json a list
// of K numbers.
class ExternalSegmenter : public PromptableSegmenter {
 public:
  explicit ExternalSegmenter(ExternalSegmenterOptions options);

  std::string name() const override;
  // The MedSAM variant accepts boxes only.
  PromptSet accepts() const override;
  bool thread_safe() const override { return false; }

  static std::string model_id(ExternalSegmenterVariant variant);

 protected:
  std::vector<SegmentationCandidate> predict(const Image2D& image, const PromptBundle& prompts) const override;

 private:
  ExternalSegmenterOptions options_;
};

// Names: stub-box-fill, stub-component-echo, external-huge, external-base,
// external-medsam-base.
std::unique_ptr<PromptableSegmenter> make_segmenter(const std::string& name,
                                                    const ExternalSegmenterOptions& external = {});

// Wire form of a bundle: {"frame":[H,W],"bbox":[r0,c0,r1,c1]|null,
// "points":[{"row":r,"col":c,"label":1|0,"kind":"conf"}]}.
std::string prompts_to_json(const PromptBundle& prompts);

}  // namespace protoprompt
