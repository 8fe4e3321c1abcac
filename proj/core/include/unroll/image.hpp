#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace unroll {

// Interleaved float image. Pixel (x, y) has its center at integer coordinates;
// values are nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t size() const noexcept { return data_.size(); }

  float& at(int x, int y, int c = 0) noexcept { return data_[offset(x, y, c)]; }
  float at(int x, int y, int c = 0) const noexcept { return data_[offset(x, y, c)]; }

  std::span<float> pixels() noexcept { return data_; }
  std::span<const float> pixels() const noexcept { return data_; }
  std::span<float> row(int y) noexcept;
  std::span<const float> row(int y) const noexcept;

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t offset(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// BT.601 luma for three-channel input; a copy of single-channel input.
Image luma(const Image& image);

// Counter-clockwise rotation by quarter_turns * 90 degrees (any integer).
Image rotate90(const Image& image, int quarter_turns);
Image flip_horizontal(const Image& image);

// Bilinear lookup with clamp-to-edge addressing.
float sample_bilinear(const Image& image, double x, double y, int channel = 0) noexcept;

Image clamp01(Image image);

// Throws InputError unless the two images have identical shape.
void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace unroll
