#pragma once

// Value types shared by every stage of the pipeline. Coordinates are
// (row, col) with the origin at the top-left pixel; all storage is row-major.
// Objects are validated on construction and never mutated afterwards.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace protoprompt {

struct Shape2D {
  int rows = 0;
  int cols = 0;

  std::size_t area() const { return static_cast<std::size_t>(rows) * cols; }
  bool contains(int r, int c) const { return r >= 0 && c >= 0 && r < rows && c < cols; }
  friend bool operator==(const Shape2D&, const Shape2D&) = default;
};

std::string to_string(const Shape2D& shape);

// Pixels are stored interleaved (H x W x C), C in {1, 3}.
class Image2D {
 public:
  Image2D() = default;
  Image2D(int rows, int cols, int channels, std::vector<float> pixels, std::string id = {},
          std::optional<std::array<double, 2>> spacing = std::nullopt);

  static Image2D constant(Shape2D shape, float value, int channels = 1);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  Shape2D shape() const { return {rows_, cols_}; }
  bool empty() const { return pixels_.empty(); }

  float at(int r, int c, int ch = 0) const {
    return pixels_[(static_cast<std::size_t>(r) * cols_ + c) * channels_ + ch];
  }
  // Channel mean at a pixel; grayscale view of an RGB image.
  float gray(int r, int c) const;

  std::span<const float> pixels() const { return pixels_; }
  const std::string& id() const { return id_; }
  const std::optional<std::array<double, 2>>& spacing() const { return spacing_; }

  Image2D with_id(std::string id) const;
  friend bool operator==(const Image2D&, const Image2D&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 1;
  std::vector<float> pixels_;
  std::string id_;
  std::optional<std::array<double, 2>> spacing_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  // Any nonzero input value is stored as 1.
  BinaryMask(int rows, int cols, std::vector<std::uint8_t> labels);

  static BinaryMask filled(Shape2D shape, bool value);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Shape2D shape() const { return {rows_, cols_}; }

  bool at(int r, int c) const { return labels_[static_cast<std::size_t>(r) * cols_ + c] != 0; }
  std::span<const std::uint8_t> labels() const { return labels_; }

  std::size_t count() const;
  bool any() const { return count() > 0; }
  BinaryMask complement() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> labels_;
};

// D x H x W feature tensor. Storage is cell-major: the D values of one
// spatial cell are contiguous, so `cell(r, c)` is a plain span.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int dim, int rows, int cols, std::vector<double> cell_major_values);

  // Builds from channel-major (D, H, W) data, the layout used on the wire.
  static FeatureMap from_channel_major(int dim, int rows, int cols, std::span<const double> values);

  int dim() const { return dim_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Shape2D shape() const { return {rows_, cols_}; }

  std::span<const double> cell(int r, int c) const {
    return {values_.data() + (static_cast<std::size_t>(r) * cols_ + c) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  double at(int d, int r, int c) const { return cell(r, c)[d]; }
  std::span<const double> values() const { return values_; }

  FeatureMap scaled(double factor) const;
  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  int dim_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> values_;
};

enum class ClassIndex { kBackground = 0, kForeground = 1 };

// Two-plane per-pixel class distribution (plane 0 background, plane 1
// foreground). Each pixel sums to 1 within 1e-6.
class ProbabilityMask {
 public:
  static constexpr double kSumTolerance = 1e-6;

  ProbabilityMask() = default;
  ProbabilityMask(int rows, int cols, std::vector<double> background, std::vector<double> foreground);
  static ProbabilityMask from_foreground(int rows, int cols, std::vector<double> foreground);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Shape2D shape() const { return {rows_, cols_}; }

  double foreground(int r, int c) const { return fg_[index(r, c)]; }
  double background(int r, int c) const { return bg_[index(r, c)]; }
  double at(ClassIndex cls, int r, int c) const {
    return cls == ClassIndex::kForeground ? foreground(r, c) : background(r, c);
  }
  std::span<const double> foreground_plane() const { return fg_; }
  std::span<const double> background_plane() const { return bg_; }

  // Largest |bg + fg - 1| over all pixels.
  double max_sum_error() const;

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> bg_;
  std::vector<double> fg_;
};

// Inclusive pixel bounds.
struct BoundingBox {
  int row_min = 0;
  int col_min = 0;
  int row_max = 0;
  int col_max = 0;

  bool valid_for(Shape2D shape) const;
  bool contains(int r, int c) const {
    return r >= row_min && r <= row_max && c >= col_min && c <= col_max;
  }
  std::size_t area() const {
    return static_cast<std::size_t>(row_max - row_min + 1) * (col_max - col_min + 1);
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Tight box around the set pixels of a mask; nullopt for an empty mask.
std::optional<BoundingBox> bounding_box(const BinaryMask& mask);

enum class Polarity { kPositive, kNegative };

enum class PromptKind { kBbox, kCent, kConf, kNeg };

const char* to_string(PromptKind kind);
std::optional<PromptKind> parse_prompt_kind(std::string_view name);

struct PointPrompt {
  int row = 0;
  int col = 0;
  Polarity polarity = Polarity::kPositive;
  PromptKind source = PromptKind::kConf;

  friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

struct Episode {
  Image2D support_image;
  BinaryMask support_mask;
  Image2D query;
  std::optional<BinaryMask> query_truth;
  std::string class_id;

  // Throws invalid-argument when shapes disagree.
  void validate() const;
};

}  // namespace protoprompt
