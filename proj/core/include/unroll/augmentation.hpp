#pragma once

#include <array>

#include "unroll/image.hpp"
#include "unroll/volume.hpp"

namespace unroll {

struct PixelCoord {
  int x = 0;
  int y = 0;
};

// One of the 16 clip augmentations: optional time reversal, a k * 90 degree rotation
// and an optional horizontal flip (applied after the rotation).
// id = 8 * time_reverse + 2 * rotation + hflip.
struct Augmentation {
  int id = 0;
  bool time_reverse = false;
  int rotation = 0;  // quarter turns, counter-clockwise
  bool hflip = false;

  static Augmentation from_id(int id);
  static std::array<Augmentation, 16> all();

  Image apply(const Image& frame) const;
  Image invert(const Image& frame) const;

  // Augmented-frame coordinates of original pixel (x, y) in a width x height frame.
  PixelCoord forward_coord(PixelCoord p, int width, int height) const noexcept;
  // Original coordinates of augmented-frame pixel p; width/height are the original dims.
  PixelCoord inverse_coord(PixelCoord p, int width, int height) const noexcept;
};

VideoClip apply_augmentation(const VideoClip& clip, const Augmentation& aug);
VideoClip invert_augmentation(const VideoClip& clip, const Augmentation& aug);

}  // namespace unroll
