#include "unroll/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "unroll/errors.hpp"

namespace unroll {

namespace {

// Single-channel float plane used inside the estimator.
struct Plane {
  int w = 0;
  int h = 0;
  std::vector<float> d;

  Plane() = default;
  Plane(int width, int height, float fill = 0.0f) : w(width), h(height), d(static_cast<std::size_t>(width) * height, fill) {}
  float& at(int x, int y) { return d[static_cast<std::size_t>(y) * w + x]; }
  float at(int x, int y) const { return d[static_cast<std::size_t>(y) * w + x]; }
  float clamped(int x, int y) const { return at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); }
  float bilinear(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const float fx = static_cast<float>(x - x0);
    const float fy = static_cast<float>(y - y0);
    const float top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
    const float bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
    return top + fy * (bottom - top);
  }
};

Plane to_plane(const Image& image) {
  const Image y = luma(image);
  Plane p(y.width(), y.height());
  std::copy(y.pixels().begin(), y.pixels().end(), p.d.begin());
  return p;
}

Image to_image(const Plane& p) {
  Image out(p.w, p.h, 1);
  std::copy(p.d.begin(), p.d.end(), out.pixels().begin());
  return out;
}

// 5-tap binomial blur followed by 2x decimation.
Plane downsample(const Plane& src) {
  static constexpr float k[5] = {1.f / 16, 4.f / 16, 6.f / 16, 4.f / 16, 1.f / 16};
  Plane tmp(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.0f;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * src.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  Plane out((src.w + 1) / 2, (src.h + 1) / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      float acc = 0.0f;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.clamped(2 * x, 2 * y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

// Box sum over a (2r+1)^2 window with clamped borders, separable.
Plane box_sum(const Plane& src, int r) {
  Plane tmp(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += src.clamped(x + i, y);
      tmp.at(x, y) = acc;
    }
  }
  Plane out(src.w, src.h);
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += tmp.clamped(x, y + i);
      out.at(x, y) = acc;
    }
  }
  return out;
}

Plane median3(const Plane& src) {
  Plane out(src.w, src.h);
  std::array<float, 9> window{};
  for (int y = 0; y < src.h; ++y) {
    for (int x = 0; x < src.w; ++x) {
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) window[n++] = src.clamped(x + dx, y + dy);
      }
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      out.at(x, y) = window[4];
    }
  }
  return out;
}

struct RawFlow {
  Plane u;
  Plane v;
  Plane min_eigen;  // smallest structure-tensor eigenvalue at the finest level, per window pixel
};

RawFlow lucas_kanade(const std::vector<Plane>& pyr_a, const std::vector<Plane>& pyr_b, const FlowOptions& opt) {
  const int levels = static_cast<int>(pyr_a.size());
  Plane u(pyr_a.back().w, pyr_a.back().h);
  Plane v(pyr_a.back().w, pyr_a.back().h);
  Plane min_eigen;
  const int r = opt.window_radius;
  const float window_area = static_cast<float>((2 * r + 1) * (2 * r + 1));

  for (int level = levels - 1; level >= 0; --level) {
    const Plane& a = pyr_a[level];
    const Plane& b = pyr_b[level];
    if (level != levels - 1) {
      // Coarse pixel X sits at fine coordinate 2X + 0.5.
      Plane up_u(a.w, a.h);
      Plane up_v(a.w, a.h);
      for (int y = 0; y < a.h; ++y) {
        for (int x = 0; x < a.w; ++x) {
          const double cx = (x - 0.5) / 2.0;
          const double cy = (y - 0.5) / 2.0;
          up_u.at(x, y) = 2.0f * u.bilinear(cx, cy);
          up_v.at(x, y) = 2.0f * v.bilinear(cx, cy);
        }
      }
      u = std::move(up_u);
      v = std::move(up_v);
    }

    Plane ax(a.w, a.h);
    Plane ay(a.w, a.h);
    for (int y = 0; y < a.h; ++y) {
      for (int x = 0; x < a.w; ++x) {
        ax.at(x, y) = 0.5f * (a.clamped(x + 1, y) - a.clamped(x - 1, y));
        ay.at(x, y) = 0.5f * (a.clamped(x, y + 1) - a.clamped(x, y - 1));
      }
    }

    for (int iter = 0; iter < opt.iterations; ++iter) {
      Plane ixx(a.w, a.h), ixy(a.w, a.h), iyy(a.w, a.h), ixt(a.w, a.h), iyt(a.w, a.h);
      for (int y = 0; y < a.h; ++y) {
        for (int x = 0; x < a.w; ++x) {
          const double sx = x + u.at(x, y);
          const double sy = y + v.at(x, y);
          const bool inside = sx >= 0.0 && sy >= 0.0 && sx <= b.w - 1 && sy <= b.h - 1;
          if (!inside) continue;
          const float bw = b.bilinear(sx, sy);
          const float bx = 0.5f * (b.bilinear(sx + 1.0, sy) - b.bilinear(sx - 1.0, sy));
          const float by = 0.5f * (b.bilinear(sx, sy + 1.0) - b.bilinear(sx, sy - 1.0));
          const float gx = 0.5f * (ax.at(x, y) + bx);
          const float gy = 0.5f * (ay.at(x, y) + by);
          const float it = bw - a.at(x, y);
          ixx.at(x, y) = gx * gx;
          ixy.at(x, y) = gx * gy;
          iyy.at(x, y) = gy * gy;
          ixt.at(x, y) = gx * it;
          iyt.at(x, y) = gy * it;
        }
      }
      const Plane sxx = box_sum(ixx, r);
      const Plane sxy = box_sum(ixy, r);
      const Plane syy = box_sum(iyy, r);
      const Plane sxt = box_sum(ixt, r);
      const Plane syt = box_sum(iyt, r);
      const float reg = static_cast<float>(opt.regularization) * window_area * 1e-2f;
      for (std::size_t i = 0; i < u.d.size(); ++i) {
        const double m00 = sxx.d[i] + reg;
        const double m01 = sxy.d[i];
        const double m11 = syy.d[i] + reg;
        const double det = m00 * m11 - m01 * m01;
        if (det <= 0.0) continue;
        double du = -(m11 * sxt.d[i] - m01 * syt.d[i]) / det;
        double dv = -(-m01 * sxt.d[i] + m00 * syt.d[i]) / det;
        du = std::clamp(du, -opt.max_step, opt.max_step);
        dv = std::clamp(dv, -opt.max_step, opt.max_step);
        u.d[i] += static_cast<float>(du);
        v.d[i] += static_cast<float>(dv);
      }
      u = median3(u);
      v = median3(v);

      if (level == 0 && iter == opt.iterations - 1) {
        min_eigen = Plane(a.w, a.h);
        for (std::size_t i = 0; i < u.d.size(); ++i) {
          const double tr = 0.5 * (sxx.d[i] + syy.d[i]);
          const double diff = 0.5 * (sxx.d[i] - syy.d[i]);
          const double root = std::sqrt(diff * diff + static_cast<double>(sxy.d[i]) * sxy.d[i]);
          min_eigen.d[i] = static_cast<float>((tr - root) / window_area);
        }
      }
    }
  }
  return {std::move(u), std::move(v), std::move(min_eigen)};
}

std::vector<Plane> pyramid(Plane base, int levels) {
  std::vector<Plane> pyr;
  pyr.push_back(std::move(base));
  while (static_cast<int>(pyr.size()) < levels && pyr.back().w >= 16 && pyr.back().h >= 16) {
    pyr.push_back(downsample(pyr.back()));
  }
  return pyr;
}

FlowField finish(const RawFlow& fwd, const RawFlow& bwd, const FlowOptions& opt) {
  FlowField out;
  out.u = to_image(fwd.u);
  out.v = to_image(fwd.v);
  out.confidence = Image(fwd.u.w, fwd.u.h, 1);
  for (int y = 0; y < fwd.u.h; ++y) {
    for (int x = 0; x < fwd.u.w; ++x) {
      const double fu = fwd.u.at(x, y);
      const double fv = fwd.v.at(x, y);
      const double bu = bwd.u.bilinear(x + fu, y + fv);
      const double bv = bwd.v.bilinear(x + fu, y + fv);
      const double err = std::hypot(fu + bu, fv + bv);
      const bool textured = fwd.min_eigen.at(x, y) > opt.min_structure;
      out.confidence.at(x, y) = (textured && err <= opt.consistency_px) ? 1.0f : 0.0f;
    }
  }
  return out;
}

}  // namespace

FlowPair estimate_flow_pair(const Image& a, const Image& b, const FlowOptions& options) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InputError("estimate_flow: frame dimensions differ");
  }
  if (a.empty()) throw InputError("estimate_flow: empty frame");
  const auto pa = pyramid(to_plane(a), options.levels);
  const auto pb = pyramid(to_plane(b), options.levels);
  const RawFlow fwd = lucas_kanade(pa, pb, options);
  const RawFlow bwd = lucas_kanade(pb, pa, options);
  return {finish(fwd, bwd, options), finish(bwd, fwd, options)};
}

FlowField estimate_flow(const Image& a, const Image& b, const FlowOptions& options) {
  return estimate_flow_pair(a, b, options).forward;
}

}  // namespace unroll
