#include "unroll/augmentation.hpp"

#include <algorithm>
#include <string>

#include "unroll/errors.hpp"

namespace unroll {

Augmentation Augmentation::from_id(int id) {
  if (id < 0 || id >= 16) throw RangeError("augmentation id " + std::to_string(id) + " outside [0, 16)");
  return Augmentation{id, (id & 8) != 0, (id >> 1) & 3, (id & 1) != 0};
}

std::array<Augmentation, 16> Augmentation::all() {
  std::array<Augmentation, 16> out;
  for (int i = 0; i < 16; ++i) out[i] = from_id(i);
  return out;
}

Image Augmentation::apply(const Image& frame) const {
  Image out = rotate90(frame, rotation);
  return hflip ? flip_horizontal(out) : out;
}

Image Augmentation::invert(const Image& frame) const {
  return rotate90(hflip ? flip_horizontal(frame) : frame, -rotation);
}

PixelCoord Augmentation::forward_coord(PixelCoord p, int width, int height) const noexcept {
  int w = width;
  int h = height;
  for (int t = 0; t < rotation; ++t) {
    // One counter-clockwise turn: (x, y) -> (y, w - 1 - x), dims (w, h) -> (h, w).
    p = {p.y, w - 1 - p.x};
    std::swap(w, h);
  }
  if (hflip) p.x = w - 1 - p.x;
  return p;
}

PixelCoord Augmentation::inverse_coord(PixelCoord p, int width, int height) const noexcept {
  int w = rotation % 2 ? height : width;
  int h = rotation % 2 ? width : height;
  if (hflip) p.x = w - 1 - p.x;
  for (int t = 0; t < rotation; ++t) {
    // Undo one turn: augmented (x, y) in a (w, h) frame came from (h - 1 - y, x) in (h, w).
    p = {h - 1 - p.y, p.x};
    std::swap(w, h);
  }
  return p;
}

VideoClip apply_augmentation(const VideoClip& clip, const Augmentation& aug) {
  VideoClip out = clip;
  out.frames.clear();
  out.frames.reserve(clip.frames.size());
  for (const Image& f : clip.frames) out.frames.push_back(aug.apply(f));
  if (aug.time_reverse) std::reverse(out.frames.begin(), out.frames.end());
  return out;
}

VideoClip invert_augmentation(const VideoClip& clip, const Augmentation& aug) {
  VideoClip out = clip;
  out.frames.clear();
  out.frames.reserve(clip.frames.size());
  for (const Image& f : clip.frames) out.frames.push_back(aug.invert(f));
  if (aug.time_reverse) std::reverse(out.frames.begin(), out.frames.end());
  return out;
}

}  // namespace unroll
