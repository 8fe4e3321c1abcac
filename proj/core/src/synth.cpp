#include "unroll/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "unroll/errors.hpp"
#include "unroll/parallel.hpp"

namespace unroll {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x100000001b3ULL ^
                                                       splitmix64(static_cast<std::uint64_t>(iy))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double f) { return f * f * (3.0 - 2.0 * f); }

double value_noise(double x, double y, double scale, std::uint64_t seed) {
  const double fx = x / scale;
  const double fy = y / scale;
  const double x0 = std::floor(fx);
  const double y0 = std::floor(fy);
  const auto ix = static_cast<std::int64_t>(x0);
  const auto iy = static_cast<std::int64_t>(y0);
  const double sx = smooth(fx - x0);
  const double sy = smooth(fy - y0);
  const double a = lattice(ix, iy, seed);
  const double b = lattice(ix + 1, iy, seed);
  const double c = lattice(ix, iy + 1, seed);
  const double d = lattice(ix + 1, iy + 1, seed);
  const double top = a + sx * (b - a);
  const double bottom = c + sx * (d - c);
  return top + sy * (bottom - top);
}

// Binary patterns are stored as a one-texel-per-pixel sprite and resampled bilinearly,
// so edge values vary continuously with subpixel position.
double pattern_texel(const Texture& tex, std::int64_t ix, std::int64_t iy) {
  const auto cx = static_cast<std::int64_t>(std::floor((static_cast<double>(ix) + 0.5) / tex.scale));
  if (tex.kind == Texture::Kind::stripes) return (cx & 1) ? 1.0 : 0.0;
  const auto cy = static_cast<std::int64_t>(std::floor((static_cast<double>(iy) + 0.5) / tex.scale));
  return ((cx + cy) & 1) ? 1.0 : 0.0;
}

double sprite_sample(const Texture& tex, Point2 u) {
  const double fx = u.x - 0.5;
  const double fy = u.y - 0.5;
  const double x0 = std::floor(fx);
  const double y0 = std::floor(fy);
  const auto ix = static_cast<std::int64_t>(x0);
  const auto iy = static_cast<std::int64_t>(y0);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const double top = pattern_texel(tex, ix, iy) + ax * (pattern_texel(tex, ix + 1, iy) - pattern_texel(tex, ix, iy));
  const double bottom =
      pattern_texel(tex, ix, iy + 1) + ax * (pattern_texel(tex, ix + 1, iy + 1) - pattern_texel(tex, ix, iy + 1));
  return top + ay * (bottom - top);
}

// Deterministic uniform draw independent of the standard library's distributions.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

double signed_magnitude(std::mt19937_64& rng, double lo, double hi) {
  const double m = uniform(rng, lo, hi);
  return (rng() & 1U) ? m : -m;
}

}  // namespace

SceneRenderer::SceneRenderer(SceneSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
  spec_.validate();
  element_seeds_.push_back(splitmix64(seed_ ^ splitmix64(spec_.background.texture.seed)));
  for (std::size_t i = 0; i < spec_.elements.size(); ++i) {
    element_seeds_.push_back(splitmix64(seed_ + 0x632be59bd9b4e019ULL * (i + 1)) ^
                             splitmix64(spec_.elements[i].texture.seed));
  }
}

Point2 SceneRenderer::forward(const Element& e, Point2 p, double t) const {
  for (const Motion& m : e.motions) {
    switch (m.kind) {
      case Motion::Kind::translate:
        p = {p.x + m.vx * t, p.y + m.vy * t};
        break;
      case Motion::Kind::rotate: {
        const double c = std::cos(m.omega * t);
        const double s = std::sin(m.omega * t);
        const double dx = p.x - m.cx;
        const double dy = p.y - m.cy;
        p = {m.cx + c * dx - s * dy, m.cy + s * dx + c * dy};
        break;
      }
      case Motion::Kind::zoom: {
        const double k = std::pow(m.scale, t);
        p = {m.cx + k * (p.x - m.cx), m.cy + k * (p.y - m.cy)};
        break;
      }
      case Motion::Kind::affine: {
        const auto& a = m.affine;
        const double dx = p.x - m.cx;
        const double dy = p.y - m.cy;
        p = {p.x + t * (a[0] * dx + a[1] * dy + a[4]), p.y + t * (a[2] * dx + a[3] * dy + a[5])};
        break;
      }
      case Motion::Kind::nonrigid:
        p.x += m.amplitude * std::sin(2.0 * std::numbers::pi * (m.frequency * t + (p.y - e.y) / m.wavelength));
        break;
    }
  }
  return p;
}

Point2 SceneRenderer::inverse(const Element& e, Point2 p, double t) const {
  for (auto it = e.motions.rbegin(); it != e.motions.rend(); ++it) {
    const Motion& m = *it;
    switch (m.kind) {
      case Motion::Kind::translate:
        p = {p.x - m.vx * t, p.y - m.vy * t};
        break;
      case Motion::Kind::rotate: {
        const double c = std::cos(m.omega * t);
        const double s = std::sin(m.omega * t);
        const double dx = p.x - m.cx;
        const double dy = p.y - m.cy;
        p = {m.cx + c * dx + s * dy, m.cy - s * dx + c * dy};
        break;
      }
      case Motion::Kind::zoom: {
        const double k = std::pow(m.scale, -t);
        p = {m.cx + k * (p.x - m.cx), m.cy + k * (p.y - m.cy)};
        break;
      }
      case Motion::Kind::affine: {
        // (I + tL)(q - c) + c + t d = p
        const auto& a = m.affine;
        const double m00 = 1.0 + t * a[0];
        const double m01 = t * a[1];
        const double m10 = t * a[2];
        const double m11 = 1.0 + t * a[3];
        const double rx = p.x - m.cx - t * a[4];
        const double ry = p.y - m.cy - t * a[5];
        const double det = m00 * m11 - m01 * m10;
        p = {m.cx + (m11 * rx - m01 * ry) / det, m.cy + (-m10 * rx + m00 * ry) / det};
        break;
      }
      case Motion::Kind::nonrigid:
        p.x -= m.amplitude * std::sin(2.0 * std::numbers::pi * (m.frequency * t + (p.y - e.y) / m.wavelength));
        break;
    }
  }
  return p;
}

bool SceneRenderer::covers(const Element& e, Point2 u) const {
  const Shape& s = e.shape;
  switch (s.kind) {
    case Shape::Kind::full: return true;
    case Shape::Kind::rect: return std::abs(u.x) <= 0.5 * s.width && std::abs(u.y) <= 0.5 * s.height;
    case Shape::Kind::disc: return u.x * u.x + u.y * u.y <= s.radius * s.radius;
    case Shape::Kind::ring: {
      if (u.x * u.x + u.y * u.y > s.radius * s.radius) return false;
      const double hx = u.x - s.hole_dx;
      const double hy = u.y - s.hole_dy;
      return hx * hx + hy * hy > s.hole_radius * s.hole_radius;
    }
  }
  return false;
}

void SceneRenderer::texture(const Element& e, std::uint64_t seed, Point2 u, std::span<float> out) const {
  const Texture& tex = e.texture;
  double v = 0.0;
  switch (tex.kind) {
    case Texture::Kind::flat: v = 0.0; break;
    case Texture::Kind::noise: {
      const double n = (value_noise(u.x, u.y, tex.scale, seed) +
                        0.5 * value_noise(u.x, u.y, 0.5 * tex.scale, splitmix64(seed))) / 1.5;
      v = std::clamp(0.5 + tex.contrast * (n - 0.5), 0.0, 1.0);
      break;
    }
    case Texture::Kind::checker:
    case Texture::Kind::stripes:
      v = sprite_sample(tex, u);
      break;
  }
  float rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<float>(tex.color[c] + (tex.color2[c] - tex.color[c]) * v);
  if (out.size() == 1) {
    out[0] = 0.299f * rgb[0] + 0.587f * rgb[1] + 0.114f * rgb[2];
  } else {
    for (int c = 0; c < 3; ++c) out[c] = rgb[c];
  }
}

void SceneRenderer::shade(double x, double y, double t, std::span<float> out) const {
  for (int i = static_cast<int>(spec_.elements.size()) - 1; i >= 0; --i) {
    const Element& e = spec_.elements[i];
    const Point2 q = inverse(e, {x, y}, t);
    const Point2 local{q.x - e.x, q.y - e.y};
    if (covers(e, local)) {
      texture(e, element_seeds_[i + 1], local, out);
      return;
    }
  }
  const Element& bg = spec_.background;
  const Point2 q = inverse(bg, {x, y}, t);
  texture(bg, element_seeds_[0], {q.x - bg.x, q.y - bg.y}, out);
}

void SceneRenderer::render_pixel(int x, int y, double t, std::span<float> out) const {
  static constexpr double kOffsets[2] = {-0.25, 0.25};
  float acc[3] = {0.0f, 0.0f, 0.0f};
  float sample[3];
  const std::size_t ch = out.size();
  for (double oy : kOffsets) {
    for (double ox : kOffsets) {
      shade(x + ox, y + oy, t, std::span<float>(sample, ch));
      for (std::size_t c = 0; c < ch; ++c) acc[c] += sample[c];
    }
  }
  for (std::size_t c = 0; c < ch; ++c) out[c] = 0.25f * acc[c];
}

Image SceneRenderer::render_frame(double t) const {
  Image frame(spec_.width, spec_.height, spec_.channels);
  const int ch = spec_.channels;
  parallel_for(static_cast<std::size_t>(spec_.height), [&](std::size_t y) {
    auto row = frame.row(static_cast<int>(y));
    for (int x = 0; x < spec_.width; ++x) {
      render_pixel(x, static_cast<int>(y), t, row.subspan(static_cast<std::size_t>(x) * ch, ch));
    }
  });
  return frame;
}

int SceneRenderer::element_at(double x, double y, double t) const {
  for (int i = static_cast<int>(spec_.elements.size()) - 1; i >= 0; --i) {
    const Element& e = spec_.elements[i];
    const Point2 q = inverse(e, {x, y}, t);
    if (covers(e, {q.x - e.x, q.y - e.y})) return i + 1;
  }
  return 0;
}

Point2 SceneRenderer::element_center(int element, double t) const {
  if (element < 0 || element >= static_cast<int>(spec_.elements.size())) {
    throw RangeError("element index " + std::to_string(element) + " out of range");
  }
  const Element& e = spec_.elements[element];
  return forward(e, {e.x, e.y}, t);
}

bool SceneRenderer::exits_margin() const {
  const double m = spec_.margin;
  for (int i = 0; i < static_cast<int>(spec_.elements.size()); ++i) {
    for (int step = 0; step <= 4 * spec_.frames; ++step) {
      const Point2 c = element_center(i, 0.25 * step);
      if (c.x < -m || c.y < -m || c.x > spec_.width + m || c.y > spec_.height + m) return true;
    }
  }
  return false;
}

SpaceTimeVolume SceneRenderer::volume() const {
  auto self = std::make_shared<const SceneRenderer>(*this);
  const int r = spec_.oversampling;
  return SpaceTimeVolume::procedural(
      spec_.width, spec_.height, spec_.channels, r, spec_.frames * r,
      [self, r](int index, int x, int y, std::span<float> out) {
        self->render_pixel(x, y, static_cast<double>(index) / r, out);
      });
}

SpaceTimeVolume render_volume(const SceneSpec& spec, std::uint64_t seed) {
  return SceneRenderer(spec, seed).volume();
}

PairedSample make_pair(const SceneSpec& spec, std::uint64_t seed, bool with_masks) {
  spec.validate();
  if (spec.oversampling % spec.height != 0) {
    throw InputError("paired sampling needs R to be a multiple of H (R=" + std::to_string(spec.oversampling) +
                     ", H=" + std::to_string(spec.height) + ")");
  }
  const SceneRenderer renderer(spec, seed);
  const SpaceTimeVolume volume = renderer.volume();

  PairedSample sample;
  sample.provenance = spec;
  sample.seed = seed;
  sample.margin_warning = renderer.exits_margin();

  // Row-parallel versions of sample_gs / sample_rs: identical values, the procedural
  // volume renders only the rows each sampling touches.
  const int k_count = spec.frames;
  const int n = spec.height;
  const int ch = spec.channels;
  sample.gs.shutter = Shutter::global;
  sample.rs.shutter = Shutter::rolling;
  sample.gs.frames.assign(k_count, Image(spec.width, spec.height, ch));
  sample.rs.frames.assign(k_count, Image(spec.width, spec.height, ch));
  parallel_for(static_cast<std::size_t>(k_count) * spec.height, [&](std::size_t item) {
    const int k = static_cast<int>(item / spec.height);
    const int j = static_cast<int>(item % spec.height);
    auto gs_row = sample.gs.frames[k].row(j);
    auto rs_row = sample.rs.frames[k].row(j);
    for (int i = 0; i < spec.width; ++i) {
      volume.sample(static_cast<std::int64_t>(k), 1, i, j, gs_row.subspan(static_cast<std::size_t>(i) * ch, ch));
      volume.sample(static_cast<std::int64_t>(k) * n + j, n, i, j,
                    rs_row.subspan(static_cast<std::size_t>(i) * ch, ch));
    }
  });

  if (with_masks) {
    std::vector<Image> ids(k_count, Image(spec.width, spec.height, 1));
    parallel_for(static_cast<std::size_t>(k_count), [&](std::size_t k) {
      for (int j = 0; j < spec.height; ++j) {
        const double t = static_cast<double>(k) + static_cast<double>(j) / n;
        for (int i = 0; i < spec.width; ++i) {
          ids[k].at(i, j) = static_cast<float>(renderer.element_at(i, j, t));
        }
      }
    });
    sample.occlusion_masks.assign(k_count, Image(spec.width, spec.height, 1, 1.0f));
    for (int k = 1; k < k_count; ++k) {
      auto prev = ids[k - 1].pixels();
      auto cur = ids[k].pixels();
      auto mask = sample.occlusion_masks[k].pixels();
      for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = prev[p] == cur[p] ? 1.0f : 0.0f;
    }
  }
  return sample;
}

namespace {

Texture random_texture(std::mt19937_64& rng, bool allow_flat) {
  Texture t;
  const double pick = uniform(rng, 0.0, 1.0);
  if (allow_flat && pick < 0.15) {
    t.kind = Texture::Kind::flat;
  } else if (pick < 0.3) {
    t.kind = Texture::Kind::checker;
  } else {
    t.kind = Texture::Kind::noise;
  }
  for (int c = 0; c < 3; ++c) {
    t.color[c] = static_cast<float>(uniform(rng, 0.0, 0.45));
    t.color2[c] = static_cast<float>(uniform(rng, 0.55, 1.0));
  }
  t.scale = t.kind == Texture::Kind::checker ? uniform(rng, 6.0, 14.0) : uniform(rng, 5.0, 14.0);
  t.contrast = uniform(rng, 1.2, 2.0);
  t.seed = rng();
  return t;
}

Motion camera_motion(MotionFamily family, std::mt19937_64& rng, double cx, double cy) {
  Motion m;
  m.cx = cx;
  m.cy = cy;
  switch (family) {
    case MotionFamily::translation: {
      const double speed = uniform(rng, 1.0, 4.0);
      const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      m.kind = Motion::Kind::translate;
      m.vx = speed * std::cos(angle);
      m.vy = speed * std::sin(angle);
      break;
    }
    case MotionFamily::rotation:
      m.kind = Motion::Kind::rotate;
      m.omega = signed_magnitude(rng, 0.015, 0.05);
      break;
    case MotionFamily::zoom:
      m.kind = Motion::Kind::zoom;
      m.scale = 1.0 + signed_magnitude(rng, 0.008, 0.02);
      break;
    case MotionFamily::affine:
    case MotionFamily::mixed:
    case MotionFamily::nonrigid: {
      m.kind = Motion::Kind::affine;
      const double zoom = signed_magnitude(rng, 0.0, 0.02);
      const double omega = signed_magnitude(rng, 0.0, 0.05);
      const double shear = signed_magnitude(rng, 0.0, 0.01);
      m.affine = {zoom, -omega + shear, omega + shear, zoom, uniform(rng, -2.0, 2.0), uniform(rng, -2.0, 2.0)};
      break;
    }
  }
  return m;
}

}  // namespace

SceneSpec random_scene(MotionFamily family, std::uint64_t seed, const SceneGeometry& geometry) {
  std::mt19937_64 rng(seed);
  if (family == MotionFamily::mixed) {
    static constexpr MotionFamily kFamilies[] = {MotionFamily::translation, MotionFamily::rotation,
                                                 MotionFamily::zoom, MotionFamily::affine, MotionFamily::nonrigid};
    family = kFamilies[rng() % 5];
  }
  SceneSpec spec;
  spec.width = geometry.width;
  spec.height = geometry.height;
  spec.frames = geometry.frames;
  spec.channels = geometry.channels;
  spec.oversampling = geometry.height;

  const double cx = uniform(rng, 0.35, 0.65) * spec.width;
  const double cy = uniform(rng, 0.35, 0.65) * spec.height;
  spec.background.texture = random_texture(rng, false);
  spec.background.texture.scale = uniform(rng, 6.0, 16.0);

  const Motion camera = family == MotionFamily::nonrigid
                            ? Motion{.kind = Motion::Kind::translate, .vx = uniform(rng, -1.5, 1.5),
                                     .vy = uniform(rng, -1.0, 1.0)}
                            : camera_motion(family, rng, cx, cy);
  spec.background.motions.push_back(camera);

  const int sprites = 1 + static_cast<int>(rng() % 3);
  const double extent = std::min(spec.width, spec.height);
  for (int s = 0; s < sprites; ++s) {
    Element e;
    const double pick = uniform(rng, 0.0, 1.0);
    if (pick < 0.35) {
      e.shape.kind = Shape::Kind::rect;
      e.shape.width = uniform(rng, 0.12, 0.35) * extent;
      e.shape.height = uniform(rng, 0.12, 0.35) * extent;
    } else if (pick < 0.7) {
      e.shape.kind = Shape::Kind::disc;
      e.shape.radius = uniform(rng, 0.08, 0.18) * extent;
    } else {
      e.shape.kind = Shape::Kind::ring;
      e.shape.radius = uniform(rng, 0.1, 0.2) * extent;
      e.shape.hole_radius = 0.3 * e.shape.radius;
      e.shape.hole_dx = 0.4 * e.shape.radius;
    }
    e.texture = random_texture(rng, true);
    e.x = uniform(rng, 0.25, 0.75) * spec.width;
    e.y = uniform(rng, 0.25, 0.75) * spec.height;
    if (family == MotionFamily::nonrigid) {
      Motion limb;
      limb.kind = Motion::Kind::nonrigid;
      limb.amplitude = uniform(rng, 1.5, 4.0);
      limb.frequency = uniform(rng, 0.05, 0.15);
      limb.wavelength = uniform(rng, 12.0, 32.0);
      e.motions.push_back(limb);
    }
    if (family == MotionFamily::translation || family == MotionFamily::nonrigid) {
      Motion own;
      own.kind = Motion::Kind::translate;
      own.vx = uniform(rng, -2.0, 2.0);
      own.vy = uniform(rng, -2.0, 2.0);
      e.motions.push_back(own);
    } else {
      e.motions.push_back(camera);
    }
    spec.elements.push_back(e);
  }
  spec.validate();
  return spec;
}

double identity_baseline_psnr(const VideoClip& a, const VideoClip& b) {
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < std::min(a.frame_count(), b.frame_count()); ++k) {
    auto pa = a.frames[k].pixels();
    auto pb = b.frames[k].pixels();
    double mse = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = static_cast<double>(pa[i]) - pb[i];
      mse += d * d;
    }
    mse /= static_cast<double>(pa.size());
    if (mse > 0.0) {
      sum += 10.0 * std::log10(1.0 / mse);
      ++used;
    }
  }
  return used > 0 ? sum / used : std::numeric_limits<double>::infinity();
}

std::vector<PairedSample> make_training_set(int count, std::uint64_t seed, MotionFamily family,
                                            const SceneGeometry& geometry) {
  if (count < 1) throw InputError("training set count must be at least 1");
  std::vector<PairedSample> out;
  out.reserve(count);
  std::mt19937_64 seeds(seed);
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0;; ++attempt) {
      const std::uint64_t scene_seed = seeds();
      SceneSpec spec = random_scene(family, scene_seed, geometry);
      PairedSample sample = make_pair(spec, scene_seed);
      if (identity_baseline_psnr(sample.rs, sample.gs) < 40.0 || attempt >= 16) {
        out.push_back(std::move(sample));
        break;
      }
    }
  }
  return out;
}

}  // namespace unroll
