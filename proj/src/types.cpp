#include "protoprompt/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "protoprompt/error.hpp"

namespace protoprompt {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kEmptySupport: return "empty-support";
    case ErrorCode::kBackendUnavailable: return "backend-unavailable";
    case ErrorCode::kClassNotFound: return "class-not-found";
    case ErrorCode::kCorruptDataset: return "corrupt-dataset";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kSchemaError: return "schema-error";
    case ErrorCode::kInvalidComparison: return "invalid-comparison";
    case ErrorCode::kNonFiniteLoss: return "non-finite-loss";
    case ErrorCode::kConfigError: return "config-error";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

std::string to_string(const Shape2D& shape) {
  return std::to_string(shape.rows) + "x" + std::to_string(shape.cols);
}

Image2D::Image2D(int rows, int cols, int channels, std::vector<float> pixels, std::string id,
                 std::optional<std::array<double, 2>> spacing)
    : rows_(rows), cols_(cols), channels_(channels), pixels_(std::move(pixels)),
      id_(std::move(id)), spacing_(spacing) {
  require(rows >= 1 && cols >= 1, "Image2D: dimensions must be positive");
  require(channels == 1 || channels == 3, "Image2D: channels must be 1 or 3");
  require(pixels_.size() == static_cast<std::size_t>(rows) * cols * channels,
          "Image2D: pixel buffer size does not match shape");
  require(std::all_of(pixels_.begin(), pixels_.end(), [](float v) { return std::isfinite(v); }),
          "Image2D: non-finite pixel value");
}

Image2D Image2D::constant(Shape2D shape, float value, int channels) {
  return Image2D(shape.rows, shape.cols, channels,
                 std::vector<float>(shape.area() * channels, value));
}

float Image2D::gray(int r, int c) const {
  if (channels_ == 1) return at(r, c);
  return (at(r, c, 0) + at(r, c, 1) + at(r, c, 2)) / 3.0f;
}

Image2D Image2D::with_id(std::string id) const {
  Image2D copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

BinaryMask::BinaryMask(int rows, int cols, std::vector<std::uint8_t> labels)
    : rows_(rows), cols_(cols), labels_(std::move(labels)) {
  require(rows >= 1 && cols >= 1, "BinaryMask: dimensions must be positive");
  require(labels_.size() == static_cast<std::size_t>(rows) * cols,
          "BinaryMask: label buffer size does not match shape");
  for (auto& v : labels_) v = v != 0 ? 1 : 0;
}

BinaryMask BinaryMask::filled(Shape2D shape, bool value) {
  return BinaryMask(shape.rows, shape.cols,
                    std::vector<std::uint8_t>(shape.area(), value ? 1 : 0));
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

BinaryMask BinaryMask::complement() const {
  std::vector<std::uint8_t> out(labels_.size());
  std::transform(labels_.begin(), labels_.end(), out.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 0 : 1; });
  return BinaryMask(rows_, cols_, std::move(out));
}

FeatureMap::FeatureMap(int dim, int rows, int cols, std::vector<double> values)
    : dim_(dim), rows_(rows), cols_(cols), values_(std::move(values)) {
  require(dim >= 1, "FeatureMap: feature dimension must be >= 1");
  require(rows >= 1 && cols >= 1, "FeatureMap: spatial dimensions must be positive");
  require(values_.size() == static_cast<std::size_t>(dim) * rows * cols,
          "FeatureMap: value buffer size does not match shape");
  require(std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }),
          "FeatureMap: non-finite feature value");
}

FeatureMap FeatureMap::from_channel_major(int dim, int rows, int cols,
                                          std::span<const double> values) {
  require(values.size() == static_cast<std::size_t>(dim) * rows * cols,
          "FeatureMap: value buffer size does not match shape");
  std::vector<double> out(values.size());
  const std::size_t plane = static_cast<std::size_t>(rows) * cols;
  for (int d = 0; d < dim; ++d)
    for (std::size_t i = 0; i < plane; ++i) out[i * dim + d] = values[d * plane + i];
  return FeatureMap(dim, rows, cols, std::move(out));
}

FeatureMap FeatureMap::scaled(double factor) const {
  std::vector<double> out(values_);
  for (auto& v : out) v *= factor;
  return FeatureMap(dim_, rows_, cols_, std::move(out));
}

ProbabilityMask::ProbabilityMask(int rows, int cols, std::vector<double> background,
                                 std::vector<double> foreground)
    : rows_(rows), cols_(cols), bg_(std::move(background)), fg_(std::move(foreground)) {
  require(rows >= 1 && cols >= 1, "ProbabilityMask: dimensions must be positive");
  const auto n = static_cast<std::size_t>(rows) * cols;
  require(bg_.size() == n && fg_.size() == n, "ProbabilityMask: plane size does not match shape");
  for (std::size_t i = 0; i < n; ++i) {
    require(bg_[i] >= 0.0 && bg_[i] <= 1.0 && fg_[i] >= 0.0 && fg_[i] <= 1.0,
            "ProbabilityMask: probability outside [0, 1]");
    require(std::abs(bg_[i] + fg_[i] - 1.0) <= kSumTolerance,
            "ProbabilityMask: class probabilities do not sum to 1");
  }
}

ProbabilityMask ProbabilityMask::from_foreground(int rows, int cols, std::vector<double> foreground) {
  std::vector<double> background(foreground.size());
  std::transform(foreground.begin(), foreground.end(), background.begin(),
                 [](double p) { return 1.0 - p; });
  return ProbabilityMask(rows, cols, std::move(background), std::move(foreground));
}

double ProbabilityMask::max_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < fg_.size(); ++i) worst = std::max(worst, std::abs(bg_[i] + fg_[i] - 1.0));
  return worst;
}

bool BoundingBox::valid_for(Shape2D shape) const {
  return row_min <= row_max && col_min <= col_max && shape.contains(row_min, col_min) &&
         shape.contains(row_max, col_max);
}

std::optional<BoundingBox> bounding_box(const BinaryMask& mask) {
  std::optional<BoundingBox> box;
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (!mask.at(r, c)) continue;
      if (!box) {
        box = BoundingBox{r, c, r, c};
        continue;
      }
      box->row_min = std::min(box->row_min, r);
      box->row_max = std::max(box->row_max, r);
      box->col_min = std::min(box->col_min, c);
      box->col_max = std::max(box->col_max, c);
    }
  }
  return box;
}

const char* to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kBbox: return "bbox";
    case PromptKind::kCent: return "cent";
    case PromptKind::kConf: return "conf";
    case PromptKind::kNeg: return "neg";
  }
  return "?";
}

std::optional<PromptKind> parse_prompt_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "bbox") return PromptKind::kBbox;
  if (lower == "cent") return PromptKind::kCent;
  if (lower == "conf") return PromptKind::kConf;
  if (lower == "neg") return PromptKind::kNeg;
  return std::nullopt;
}

void Episode::validate() const {
  require(support_image.shape() == support_mask.shape(),
          "Episode: support image " + to_string(support_image.shape()) + " and mask " +
              to_string(support_mask.shape()) + " differ in shape");
  if (query_truth)
    require(query.shape() == query_truth->shape(),
            "Episode: query image and query truth differ in shape");
}

}  // namespace protoprompt
