#include "protoprompt/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "protoprompt/error.hpp"
#include "protoprompt/npy.hpp"
#include "subprocess.hpp"

namespace protoprompt {
namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

Shape2D EncoderBackend::output_shape(Shape2D input) const {
  return {ceil_div(input.rows, patch_stride()), ceil_div(input.cols, patch_stride())};
}

Image2D reflect_pad_to_multiple(const Image2D& image, int stride) {
  require(stride >= 1, "reflect_pad_to_multiple: stride must be positive");
  const int rows = ceil_div(image.rows(), stride) * stride;
  const int cols = ceil_div(image.cols(), stride) * stride;
  if (rows == image.rows() && cols == image.cols()) return image;
  const int ch = image.channels();
  std::vector<float> out(static_cast<std::size_t>(rows) * cols * ch);
  for (int r = 0; r < rows; ++r) {
    const int sr = reflect_index(r, image.rows());
    for (int c = 0; c < cols; ++c) {
      const int sc = reflect_index(c, image.cols());
      for (int k = 0; k < ch; ++k)
        out[(static_cast<std::size_t>(r) * cols + c) * ch + k] = image.at(sr, sc, k);
    }
  }
  return Image2D(rows, cols, ch, std::move(out), image.id(), image.spacing());
}

StubEncoder::StubEncoder(StubEncoderOptions options) : options_(options) {
  require(options_.feature_dim >= 1, "StubEncoder: feature_dim must be >= 1");
  require(options_.patch_stride >= 1, "StubEncoder: patch_stride must be >= 1");
  require(options_.bandwidth > 0.0, "StubEncoder: bandwidth must be positive");
  std::mt19937_64 rng(options_.seed);
  std::normal_distribution<double> normal(0.0, 1.0 / options_.bandwidth);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  weights_.resize(static_cast<std::size_t>(options_.feature_dim) * kDescriptorSize);
  for (auto& w : weights_) w = normal(rng);
  phases_.resize(options_.feature_dim);
  for (auto& p : phases_) p = phase(rng);
}

std::vector<double> StubEncoder::descriptors(const Image2D& image) const {
  const int stride = options_.patch_stride;
  const Image2D padded = reflect_pad_to_multiple(image, stride);
  const Shape2D grid = output_shape(image.shape());
  const int rows = padded.rows();
  const int cols = padded.cols();

  std::vector<double> gray(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) gray[static_cast<std::size_t>(r) * cols + c] = padded.gray(r, c);
  auto g = [&](int r, int c) {
    r = std::clamp(r, 0, rows - 1);
    c = std::clamp(c, 0, cols - 1);
    return gray[static_cast<std::size_t>(r) * cols + c];
  };

  std::vector<double> out(grid.area() * kDescriptorSize, 0.0);
  const double n = static_cast<double>(stride) * stride;
  for (int gr = 0; gr < grid.rows; ++gr) {
    for (int gc = 0; gc < grid.cols; ++gc) {
      double sum[3] = {0, 0, 0};
      double sq[3] = {0, 0, 0};
      double grad = 0.0;
      for (int r = gr * stride; r < (gr + 1) * stride; ++r) {
        for (int c = gc * stride; c < (gc + 1) * stride; ++c) {
          for (int k = 0; k < 3; ++k) {
            const double v = padded.at(r, c, padded.channels() == 3 ? k : 0);
            sum[k] += v;
            sq[k] += v * v;
          }
          const double dy = 0.5 * (g(r + 1, c) - g(r - 1, c));
          const double dx = 0.5 * (g(r, c + 1) - g(r, c - 1));
          grad += std::sqrt(dx * dx + dy * dy);
        }
      }
      double* d = out.data() + (static_cast<std::size_t>(gr) * grid.cols + gc) * kDescriptorSize;
      for (int k = 0; k < 3; ++k) {
        const double mean = sum[k] / n;
        d[k] = mean;
        d[3 + k] = std::sqrt(std::max(0.0, sq[k] / n - mean * mean));
      }
      d[6] = grad / n;
    }
  }
  return out;
}

FeatureMap StubEncoder::encode(const Image2D& image) const {
  const Shape2D grid = output_shape(image.shape());
  const auto desc = descriptors(image);
  const int dim = options_.feature_dim;
  const double gain = std::sqrt(2.0 / dim);
  std::vector<double> values(grid.area() * dim);
  for (std::size_t cell = 0; cell < grid.area(); ++cell) {
    const double* z = desc.data() + cell * kDescriptorSize;
    for (int d = 0; d < dim; ++d) {
      const double* w = weights_.data() + static_cast<std::size_t>(d) * kDescriptorSize;
      double proj = phases_[d];
      for (int j = 0; j < kDescriptorSize; ++j) proj += w[j] * z[j];
      values[cell * dim + d] = gain * std::cos(proj);
    }
  }
  return FeatureMap(dim, grid.rows, grid.cols, std::move(values));
}

ExternalEncoder::ExternalEncoder(ExternalEncoderOptions options) : options_(std::move(options)) {
  require(options_.feature_dim >= 1, "ExternalEncoder: feature_dim must be >= 1");
  require(options_.patch_stride >= 1, "ExternalEncoder: patch_stride must be >= 1");
}

FeatureMap ExternalEncoder::encode(const Image2D& image) const {
  if (options_.weights_path.empty() || !std::filesystem::exists(options_.weights_path)) {
    fail(ErrorCode::kBackendUnavailable,
         "external encoder weights not found at '" + options_.weights_path.string() +
             "'; download the checkpoint and set encoder.weights_path, or use encoder.backend=stub");
  }
  const Image2D padded = reflect_pad_to_multiple(image, options_.patch_stride);
  detail::TempDir tmp;
  const auto input = tmp.path() / "image.npy";
  const auto output = tmp.path() / "features.npy";

  npy::Array arr;
  arr.dtype = npy::DType::kFloat32;
  arr.shape = {static_cast<std::size_t>(padded.rows()), static_cast<std::size_t>(padded.cols()),
               static_cast<std::size_t>(padded.channels())};
  arr.values.assign(padded.pixels().begin(), padded.pixels().end());
  npy::write(input, arr);

  const auto result = detail::run_command(
      options_.command, {"encode", "--model", options_.model, "--weights", options_.weights_path.string(),
                         "--device", options_.device, "--input", input.string(), "--output", output.string()});
  if (result.exit_code != 0 || !std::filesystem::exists(output)) {
    fail(ErrorCode::kBackendUnavailable, "external encoder command '" + options_.command +
                                             "' failed (exit " + std::to_string(result.exit_code) +
                                             "): " + result.output);
  }
  const auto features = npy::read(output);
  const Shape2D expected = output_shape(image.shape());
  if (features.shape.size() != 3 || features.shape[0] != static_cast<std::size_t>(options_.feature_dim) ||
      features.shape[1] != static_cast<std::size_t>(expected.rows) ||
      features.shape[2] != static_cast<std::size_t>(expected.cols)) {
    fail(ErrorCode::kBackendUnavailable,
         "external encoder returned features of unexpected shape; expected (" +
             std::to_string(options_.feature_dim) + ", " + std::to_string(expected.rows) + ", " +
             std::to_string(expected.cols) + ")");
  }
  return FeatureMap::from_channel_major(options_.feature_dim, expected.rows, expected.cols, features.values);
}

}  // namespace protoprompt
