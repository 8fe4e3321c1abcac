#include "unroll/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "unroll/errors.hpp"

namespace unroll {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw InputError("image dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

std::span<float> Image::row(int y) noexcept {
  const std::size_t stride = static_cast<std::size_t>(width_) * channels_;
  return std::span<float>(data_).subspan(y * stride, stride);
}

std::span<const float> Image::row(int y) const noexcept {
  const std::size_t stride = static_cast<std::size_t>(width_) * channels_;
  return std::span<const float>(data_).subspan(y * stride, stride);
}

Image luma(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(image.width(), image.height(), 1);
  auto src = image.pixels();
  auto dst = out.pixels();
  const int ch = image.channels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const float* p = &src[i * ch];
    dst[i] = ch >= 3 ? 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2] : p[0];
  }
  return out;
}

Image rotate90(const Image& image, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  if (turns == 0) return image;
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  const bool swap = turns % 2 == 1;
  Image out(swap ? h : w, swap ? w : h, ch);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      int sx = 0;
      int sy = 0;
      switch (turns) {
        case 1: sx = w - 1 - y; sy = x; break;
        case 2: sx = w - 1 - x; sy = h - 1 - y; break;
        default: sx = y; sy = h - 1 - x; break;
      }
      for (int c = 0; c < ch; ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  }
  return out;
}

Image flip_horizontal(const Image& image) {
  Image out(image.width(), image.height(), image.channels());
  const int w = image.width();
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(w - 1 - x, y, c);
    }
  }
  return out;
}

float sample_bilinear(const Image& image, double x, double y, int channel) noexcept {
  const int w = image.width();
  const int h = image.height();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = image.at(x0, y0, channel) + fx * (image.at(x1, y0, channel) - image.at(x0, y0, channel));
  const double bottom = image.at(x0, y1, channel) + fx * (image.at(x1, y1, channel) - image.at(x0, y1, channel));
  return static_cast<float>(top + fy * (bottom - top));
}

Image clamp01(Image image) {
  for (float& v : image.pixels()) v = std::clamp(v, 0.0f, 1.0f);
  return image;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw InputError(std::string(what) + ": shape mismatch " + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                     std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                     std::to_string(b.channels()));
  }
}

}  // namespace unroll
