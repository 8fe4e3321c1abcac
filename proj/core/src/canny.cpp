#include "unroll/canny.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "unroll/errors.hpp"

namespace unroll {

namespace {

Image gaussian_blur(const Image& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  const int w = in.width();
  const int h = in.height();
  Image tmp(w, h, 1);
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * in.at(std::clamp(x + i, 0, w - 1), y);
      tmp.at(x, y) = static_cast<float>(acc);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(x, std::clamp(y + i, 0, h - 1));
      out.at(x, y) = static_cast<float>(acc);
    }
  }
  return out;
}

struct Gradients {
  Image gx;
  Image gy;
  Image magnitude;
};

Gradients sobel(const Image& s) {
  const int w = s.width();
  const int h = s.height();
  Gradients g{Image(w, h, 1), Image(w, h, 1), Image(w, h, 1)};
  auto px = [&](int x, int y) { return static_cast<double>(s.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1))); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1) - px(x - 1, y - 1) -
                         2 * px(x - 1, y) - px(x - 1, y + 1)) / 4.0;
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1) - px(x - 1, y - 1) -
                         2 * px(x, y - 1) - px(x + 1, y - 1)) / 4.0;
      g.gx.at(x, y) = static_cast<float>(gx);
      g.gy.at(x, y) = static_cast<float>(gy);
      g.magnitude.at(x, y) = static_cast<float>(std::min(1.0, std::hypot(gx, gy)));
    }
  }
  return g;
}

void require_gray(const Image& image) {
  if (image.channels() != 1) throw InputError("edge detection expects a single-channel image");
}

}  // namespace

Image gradient_magnitude(const Image& image, double sigma) {
  require_gray(image);
  return sobel(gaussian_blur(image, sigma)).magnitude;
}

Image canny(const Image& image, const CannyOptions& options) {
  require_gray(image);
  if (!(options.low >= 0.0 && options.low <= options.high)) throw InputError("canny thresholds must satisfy 0 <= low <= high");
  const int w = image.width();
  const int h = image.height();
  const Gradients g = sobel(gaussian_blur(image, options.sigma));
  auto mag = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0f;
    return g.magnitude.at(x, y);
  };

  // Non-maximum suppression along the quantized gradient direction. The comparison
  // is strict on one side only so a plateau of two equal maxima keeps one pixel.
  Image thin(w, h, 1);
  constexpr double kTan22 = 0.41421356237309503;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float m = g.magnitude.at(x, y);
      if (m <= 0.0f) continue;
      const double ax = std::abs(g.gx.at(x, y));
      const double ay = std::abs(g.gy.at(x, y));
      int dx;
      int dy;
      if (ay <= kTan22 * ax) {
        dx = 1, dy = 0;
      } else if (ax <= kTan22 * ay) {
        dx = 0, dy = 1;
      } else {
        dx = 1;
        dy = (g.gx.at(x, y) > 0) == (g.gy.at(x, y) > 0) ? 1 : -1;
      }
      if (m > mag(x - dx, y - dy) && m >= mag(x + dx, y + dy)) thin.at(x, y) = m;
    }
  }

  Image edges(w, h, 1);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (thin.at(x, y) >= options.high && edges.at(x, y) == 0.0f) {
        edges.at(x, y) = 1.0f;
        stack.emplace_back(x, y);
      }
    }
  }
  while (!stack.empty()) {
    const auto [x, y] = stack.back();
    stack.pop_back();
    for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1); ++yy) {
      for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
        if (edges.at(xx, yy) == 0.0f && thin.at(xx, yy) >= options.low) {
          edges.at(xx, yy) = 1.0f;
          stack.emplace_back(xx, yy);
        }
      }
    }
  }
  return edges;
}

Image dilate(const Image& mask) {
  require_gray(mask);
  const int w = mask.width();
  const int h = mask.height();
  Image out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool on = false;
      for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1) && !on; ++yy) {
        for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
          if (mask.at(xx, yy) != 0.0f) {
            on = true;
            break;
          }
        }
      }
      out.at(x, y) = on ? 1.0f : 0.0f;
    }
  }
  return out;
}

}  // namespace unroll
