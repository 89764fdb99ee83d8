#include "protoprompt/resize.hpp"

#include <algorithm>
#include <cmath>

#include "protoprompt/error.hpp"

namespace protoprompt {
namespace {

void check_target(Shape2D target) {
  require(target.rows >= 1 && target.cols >= 1,
          "resize: target dimensions must be positive, got " + to_string(target));
}

}  // namespace

int nearest_source_index(int dst, int in_size, int out_size) {
  // floor((dst + 0.5) * in / out) in exact integer arithmetic.
  const long long idx = ((2LL * dst + 1) * in_size) / (2LL * out_size);
  return static_cast<int>(std::min<long long>(idx, in_size - 1));
}

std::vector<LinearTap> bilinear_taps(int in_size, int out_size) {
  std::vector<LinearTap> taps(out_size);
  const double scale = static_cast<double>(in_size) / out_size;
  for (int i = 0; i < out_size; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, in_size - 1);
    const double frac = src - lo;
    taps[i] = {lo, hi, 1.0 - frac, frac};
  }
  return taps;
}

std::vector<double> resize_plane(std::span<const double> plane, Shape2D from, Shape2D to) {
  check_target(to);
  require(plane.size() == from.area(), "resize_plane: plane size does not match shape");
  const auto rt = bilinear_taps(from.rows, to.rows);
  const auto ct = bilinear_taps(from.cols, to.cols);
  std::vector<double> out(to.area());
  for (int r = 0; r < to.rows; ++r) {
    const auto& ty = rt[r];
    const double* top = plane.data() + static_cast<std::size_t>(ty.lo) * from.cols;
    const double* bottom = plane.data() + static_cast<std::size_t>(ty.hi) * from.cols;
    for (int c = 0; c < to.cols; ++c) {
      const auto& tx = ct[c];
      const double upper = tx.w_lo * top[tx.lo] + tx.w_hi * top[tx.hi];
      const double lower = tx.w_lo * bottom[tx.lo] + tx.w_hi * bottom[tx.hi];
      out[static_cast<std::size_t>(r) * to.cols + c] = ty.w_lo * upper + ty.w_hi * lower;
    }
  }
  return out;
}

std::vector<double> resize_plane_adjoint(std::span<const double> grad_out, Shape2D from, Shape2D to) {
  require(grad_out.size() == to.area(), "resize_plane_adjoint: gradient size does not match shape");
  const auto rt = bilinear_taps(from.rows, to.rows);
  const auto ct = bilinear_taps(from.cols, to.cols);
  std::vector<double> grad_in(from.area(), 0.0);
  for (int r = 0; r < to.rows; ++r) {
    const auto& ty = rt[r];
    for (int c = 0; c < to.cols; ++c) {
      const auto& tx = ct[c];
      const double g = grad_out[static_cast<std::size_t>(r) * to.cols + c];
      if (g == 0.0) continue;
      auto add = [&](int rr, int cc, double w) {
        grad_in[static_cast<std::size_t>(rr) * from.cols + cc] += w * g;
      };
      add(ty.lo, tx.lo, ty.w_lo * tx.w_lo);
      add(ty.lo, tx.hi, ty.w_lo * tx.w_hi);
      add(ty.hi, tx.lo, ty.w_hi * tx.w_lo);
      add(ty.hi, tx.hi, ty.w_hi * tx.w_hi);
    }
  }
  return grad_in;
}

Image2D resize(const Image2D& image, Shape2D target, Interpolation mode) {
  check_target(target);
  const int ch = image.channels();
  std::vector<float> out(target.area() * ch);
  if (mode == Interpolation::kNearest) {
    for (int r = 0; r < target.rows; ++r) {
      const int sr = nearest_source_index(r, image.rows(), target.rows);
      for (int c = 0; c < target.cols; ++c) {
        const int sc = nearest_source_index(c, image.cols(), target.cols);
        for (int k = 0; k < ch; ++k)
          out[(static_cast<std::size_t>(r) * target.cols + c) * ch + k] = image.at(sr, sc, k);
      }
    }
  } else {
    const auto rt = bilinear_taps(image.rows(), target.rows);
    const auto ct = bilinear_taps(image.cols(), target.cols);
    for (int r = 0; r < target.rows; ++r) {
      const auto& ty = rt[r];
      for (int c = 0; c < target.cols; ++c) {
        const auto& tx = ct[c];
        for (int k = 0; k < ch; ++k) {
          const double upper = tx.w_lo * image.at(ty.lo, tx.lo, k) + tx.w_hi * image.at(ty.lo, tx.hi, k);
          const double lower = tx.w_lo * image.at(ty.hi, tx.lo, k) + tx.w_hi * image.at(ty.hi, tx.hi, k);
          out[(static_cast<std::size_t>(r) * target.cols + c) * ch + k] =
              static_cast<float>(ty.w_lo * upper + ty.w_hi * lower);
        }
      }
    }
  }
  return Image2D(target.rows, target.cols, ch, std::move(out), image.id(), image.spacing());
}

BinaryMask resize(const BinaryMask& mask, Shape2D target, Interpolation mode) {
  check_target(target);
  std::vector<std::uint8_t> out(target.area());
  if (mode == Interpolation::kNearest) {
    for (int r = 0; r < target.rows; ++r) {
      const int sr = nearest_source_index(r, mask.rows(), target.rows);
      for (int c = 0; c < target.cols; ++c)
        out[static_cast<std::size_t>(r) * target.cols + c] =
            mask.at(sr, nearest_source_index(c, mask.cols(), target.cols));
    }
  } else {
    std::vector<double> plane(mask.labels().begin(), mask.labels().end());
    const auto soft = resize_plane(plane, mask.shape(), target);
    for (std::size_t i = 0; i < soft.size(); ++i) out[i] = soft[i] >= 0.5 ? 1 : 0;
  }
  return BinaryMask(target.rows, target.cols, std::move(out));
}

ProbabilityMask resize(const ProbabilityMask& probs, Shape2D target) {
  check_target(target);
  auto bg = resize_plane(probs.background_plane(), probs.shape(), target);
  auto fg = resize_plane(probs.foreground_plane(), probs.shape(), target);
  for (std::size_t i = 0; i < fg.size(); ++i) {
    const double total = bg[i] + fg[i];
    if (total > 0.0) {
      fg[i] = std::clamp(fg[i] / total, 0.0, 1.0);
    } else {
      fg[i] = 0.5;
    }
    bg[i] = 1.0 - fg[i];
  }
  return ProbabilityMask(target.rows, target.cols, std::move(bg), std::move(fg));
}

}  // namespace protoprompt
