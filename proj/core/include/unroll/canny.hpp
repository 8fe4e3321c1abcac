#pragma once

#include "unroll/image.hpp"

namespace unroll {

struct CannyOptions {
  double sigma = 1.0;  // Gaussian pre-smoothing
  double low = 0.1;    // hysteresis thresholds on the [0, 1] gradient magnitude
  double high = 0.2;
};

// Sobel gradient magnitude after Gaussian smoothing, scaled so a unit step reads 1
// before smoothing, clamped to [0, 1]. Single-channel input.
Image gradient_magnitude(const Image& image, double sigma = 1.0);

// Binary edge map (0 / 1): smoothing, Sobel, non-maximum suppression, hysteresis
// with 8-connectivity.
Image canny(const Image& image, const CannyOptions& options = {});

// 3x3 binary dilation.
Image dilate(const Image& mask);

}  // namespace unroll
