#include "protoprompt/raster.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include <png.h>

#include "protoprompt/error.hpp"

namespace protoprompt {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return f;
}

// libpng reports failures by longjmp; objects with destructors live in the
// callers so that no frame holding one is skipped.
bool read_rows(std::FILE* file, RawRaster& out, std::vector<png_byte>& buffer) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_set_strip_alpha(png);
  const int passes = png_set_interlace_handling(png);
  png_read_update_info(png, info);

  out.rows = static_cast<int>(png_get_image_height(png, info));
  out.cols = static_cast<int>(png_get_image_width(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * static_cast<std::size_t>(out.rows));
  for (int pass = 0; pass < passes; ++pass)
    for (int r = 0; r < out.rows; ++r) png_read_row(png, buffer.data() + stride * r, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool write_rows(std::FILE* file, const RawRaster& raster, const std::vector<png_byte>& buffer) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, raster.cols, raster.rows, raster.bit_depth,
               raster.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (raster.bit_depth == 16) png_set_swap(png);
  const std::size_t stride = buffer.size() / raster.rows;
  for (int r = 0; r < raster.rows; ++r) png_write_row(png, buffer.data() + stride * r);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

RawRaster read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIoError, "file not found: '" + path.string() + "'");
  auto file = open_file(path, "rb");
  png_byte sig[8] = {};
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorCode::kCorruptDataset, "'" + path.string() + "' is not a PNG file");
  std::rewind(file.get());
  RawRaster out;
  std::vector<png_byte> buffer;
  if (!read_rows(file.get(), out, buffer)) fail(ErrorCode::kCorruptDataset, "failed to decode PNG '" + path.string() + "'");
  out.samples.resize(static_cast<std::size_t>(out.rows) * out.cols * out.channels);
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = out.bit_depth == 16 ? static_cast<std::uint16_t>(buffer[2 * i] | buffer[2 * i + 1] << 8)
                                         : buffer[i];
  }
  return out;
}

void write_png(const std::filesystem::path& path, const RawRaster& raster) {
  require(raster.rows > 0 && raster.cols > 0, "write_png: empty raster");
  require(raster.channels == 1 || raster.channels == 3, "write_png: channels must be 1 or 3");
  require(raster.bit_depth == 8 || raster.bit_depth == 16, "write_png: bit depth must be 8 or 16");
  require(raster.samples.size() == static_cast<std::size_t>(raster.rows) * raster.cols * raster.channels,
          "write_png: sample count does not match shape");
  std::vector<png_byte> buffer(raster.samples.size() * (raster.bit_depth / 8));
  for (std::size_t i = 0; i < raster.samples.size(); ++i) {
    if (raster.bit_depth == 16) {
      buffer[2 * i] = static_cast<png_byte>(raster.samples[i] & 0xff);
      buffer[2 * i + 1] = static_cast<png_byte>(raster.samples[i] >> 8);
    } else {
      require(raster.samples[i] <= 255, "write_png: 8-bit sample out of range");
      buffer[i] = static_cast<png_byte>(raster.samples[i]);
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto file = open_file(path, "wb");
  if (!write_rows(file.get(), raster, buffer)) fail(ErrorCode::kIoError, "failed to encode PNG '" + path.string() + "'");
}

Image2D read_image_png(const std::filesystem::path& path) {
  const auto raw = read_png(path);
  std::vector<float> px(raw.samples.size());
  const double scale = raw.max_value();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(raw.samples[i] / scale);
  return Image2D(raw.rows, raw.cols, raw.channels, std::move(px));
}

BinaryMask read_mask_png(const std::filesystem::path& path) {
  const auto raw = read_png(path);
  const unsigned threshold = raw.bit_depth == 16 ? 32768u : 128u;
  std::vector<std::uint8_t> labels(static_cast<std::size_t>(raw.rows) * raw.cols);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // Colour masks count as foreground when any channel is set.
    bool on = false;
    for (int ch = 0; ch < raw.channels; ++ch) on = on || raw.samples[i * raw.channels + ch] >= threshold;
    labels[i] = on ? 1 : 0;
  }
  return BinaryMask(raw.rows, raw.cols, std::move(labels));
}

void write_image_png(const std::filesystem::path& path, const Image2D& image) {
  RawRaster raw{image.rows(), image.cols(), image.channels(), 8, {}};
  raw.samples.reserve(image.pixels().size());
  for (float v : image.pixels())
    raw.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  write_png(path, raw);
}

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask) {
  RawRaster raw{mask.rows(), mask.cols(), 1, 8, {}};
  raw.samples.reserve(mask.shape().area());
  for (auto v : mask.labels()) raw.samples.push_back(v ? 255 : 0);
  write_png(path, raw);
}

}  // namespace protoprompt
