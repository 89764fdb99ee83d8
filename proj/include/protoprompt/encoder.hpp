#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "protoprompt/types.hpp"

namespace protoprompt {

// Dense feature extractor. encode() returns a map of
// ceil(H / patch_stride) x ceil(W / patch_stride) cells; inputs whose sides
// are not stride multiples are reflect-padded first.
class EncoderBackend {
 public:
  virtual ~EncoderBackend() = default;

  virtual std::string name() const = 0;
  virtual int feature_dim() const = 0;
  virtual int patch_stride() const = 0;
  // Backends returning false get their calls serialised by the pipeline.
  virtual bool thread_safe() const { return true; }

  virtual FeatureMap encode(const Image2D& image) const = 0;

  Shape2D output_shape(Shape2D input) const;
};

// Reflect-pads (no edge repeat) to the next multiple of `stride` on each side.
Image2D reflect_pad_to_multiple(const Image2D& image, int stride);

struct StubEncoderOptions {
  int feature_dim = 128;
  int patch_stride = 14;
  std::uint64_t seed = 0;
  // Kernel width of the random Fourier projection, in descriptor units.
  double bandwidth = 0.15;
};

// Deterministic backbone-free encoder. Each stride x stride patch is summarised
// by a 7-value descriptor (per-channel mean and standard deviation plus mean
// gradient magnitude) and lifted to D dimensions with seeded random Fourier
// features, so cosine similarity between cells approximates a Gaussian kernel
// on their descriptors.
class StubEncoder : public EncoderBackend {
 public:
  static constexpr int kDescriptorSize = 7;

  explicit StubEncoder(StubEncoderOptions options = {});

  std::string name() const override { return "stub"; }
  int feature_dim() const override { return options_.feature_dim; }
  int patch_stride() const override { return options_.patch_stride; }
  const StubEncoderOptions& options() const { return options_; }

  FeatureMap encode(const Image2D& image) const override;

  // Per-cell descriptors, cell-major, kDescriptorSize values per cell.
  std::vector<double> descriptors(const Image2D& image) const;

 private:
  StubEncoderOptions options_;
  std::vector<double> weights_;  // feature_dim x kDescriptorSize
  std::vector<double> phases_;   // feature_dim
};

struct ExternalEncoderOptions {
  std::string command = "python3 tools/external_backend.py";
  std::filesystem::path weights_path;
  std::string device = "cpu";
  std::string model = "dinov2_vitl14";
  int feature_dim = 1024;
  int patch_stride = 14;
};

// Adapter for a pretrained vision transformer served by a helper process.
// Protocol: `<command> encode --model M --weights W --device D --input in.npy
// --output out.npy`, where in.npy is float32 (H, W, C) in [0, 1] already padded
// to stride multiples and out.npy is float32 (D, H / stride, W / stride).
class ExternalEncoder : public EncoderBackend {
 public:
  explicit ExternalEncoder(ExternalEncoderOptions options);

  std::string name() const override { return "external:" + options_.model; }
  int feature_dim() const override { return options_.feature_dim; }
  int patch_stride() const override { return options_.patch_stride; }
  bool thread_safe() const override { return false; }

  FeatureMap encode(const Image2D& image) const override;

 private:
  ExternalEncoderOptions options_;
};

}  // namespace protoprompt
