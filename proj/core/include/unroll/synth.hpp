#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "unroll/image.hpp"
#include "unroll/scene_spec.hpp"
#include "unroll/volume.hpp"

namespace unroll {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Analytic 2D layered scene. Every query is a pure function of (spec, seed, x, y, t),
// so frames can be rendered in any order and in parallel.
class SceneRenderer {
 public:
  SceneRenderer(SceneSpec spec, std::uint64_t seed);

  const SceneSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Point sample of the scene color at canvas point (x, y), time t.
  void shade(double x, double y, double t, std::span<float> out) const;
  // Pixel value: 2x2 supersampled around the pixel center.
  void render_pixel(int x, int y, double t, std::span<float> out) const;
  Image render_frame(double t) const;

  // 0 for background, i + 1 for elements[i]; evaluated at the point itself.
  int element_at(double x, double y, double t) const;
  // Canvas position of element i's anchor at time t (the analytic trajectory).
  Point2 element_center(int element, double t) const;
  // True if any element anchor leaves the canvas expanded by spec.margin during the clip.
  bool exits_margin() const;

  // Procedural volume with R stored frames per period and frames * R stored frames.
  SpaceTimeVolume volume() const;

 private:
  Point2 forward(const Element& e, Point2 p, double t) const;
  Point2 inverse(const Element& e, Point2 p, double t) const;
  bool covers(const Element& e, Point2 local) const;
  void texture(const Element& e, std::uint64_t seed, Point2 local, std::span<float> out) const;

  SceneSpec spec_;
  std::uint64_t seed_;
  std::vector<std::uint64_t> element_seeds_;  // [0] background, [i + 1] elements
};

SpaceTimeVolume render_volume(const SceneSpec& spec, std::uint64_t seed);

struct PairedSample {
  VideoClip gs;
  VideoClip rs;
  // Per RS frame k: 1 where the same layer covers the pixel in RS frames k - 1 and k.
  // Frame 0 has no predecessor and is all ones.
  std::vector<Image> occlusion_masks;
  SceneSpec provenance;
  std::uint64_t seed = 0;
  bool margin_warning = false;
};

// Requires R to be a multiple of H so every RS row time is a stored frame.
PairedSample make_pair(const SceneSpec& spec, std::uint64_t seed, bool with_masks = true);

enum class MotionFamily { translation, rotation, zoom, affine, nonrigid, mixed };

struct SceneGeometry {
  int width = 128;
  int height = 128;
  int frames = 12;
  int channels = 3;
};

// Randomized scene of the given family. Ranges: |v| <= 4 px/frame, |omega| <= 0.05 rad/frame,
// zoom within 2%/frame; affine draws combine all three with |d| <= 2 px/frame.
SceneSpec random_scene(MotionFamily family, std::uint64_t seed, const SceneGeometry& geometry = {});

// count pairs; draws whose RS-vs-GS identity baseline reaches 40 dB are redrawn.
std::vector<PairedSample> make_training_set(int count, std::uint64_t seed, MotionFamily family,
                                            const SceneGeometry& geometry = {});

// Mean over frames of the identity-baseline PSNR between two clips (no +inf frames counted).
double identity_baseline_psnr(const VideoClip& a, const VideoClip& b);

}  // namespace unroll
