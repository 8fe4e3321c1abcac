#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "unroll/image.hpp"

namespace unroll {

enum class Shutter { global, rolling };
enum class Readout { vertical, diagonal };

// A frame sequence with its shutter model. Time is measured in frame periods
// (the frame period is 1); frames[k] starts at time first_time + k.
struct VideoClip {
  std::vector<Image> frames;
  Shutter shutter = Shutter::global;
  int rows = 0;  // readout rows N; 0 means "frame height"
  Readout readout = Readout::vertical;
  int first_time = 0;

  int frame_count() const noexcept { return static_cast<int>(frames.size()); }
  int width() const noexcept { return frames.empty() ? 0 : frames.front().width(); }
  int height() const noexcept { return frames.empty() ? 0 : frames.front().height(); }
  int channels() const noexcept { return frames.empty() ? 0 : frames.front().channels(); }
  int readout_rows() const noexcept { return rows > 0 ? rows : height(); }

  // Sub-frame offset in units of 1/N at which pixel (i, j) is read out.
  int readout_slot(int i, int j) const noexcept;
  // Capture time of pixel (i, j) of frame k, relative to first_time.
  double pixel_time(int k, int i, int j) const noexcept;

  // Throws InputError if frames disagree in shape or the clip is empty.
  void validate() const;
};

// Readout slot of row j under vertical readout: floor(j N / H), i.e. j when N = H.
int vertical_readout_slot(int row, int height, int rows) noexcept;

// Dense discretization of the continuous scene S(x, y, t): stored frame s sits at
// time s / R. Frames are either held in memory or produced on demand by a pure
// pixel source (the synthetic renderer), which keeps large R affordable.
class SpaceTimeVolume {
 public:
  using PixelSource = std::function<void(int index, int x, int y, std::span<float> out)>;

  SpaceTimeVolume() = default;
  static SpaceTimeVolume from_frames(std::vector<Image> frames, int oversampling);
  static SpaceTimeVolume procedural(int width, int height, int channels, int oversampling,
                                    int stored_frames, PixelSource source);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  int oversampling() const noexcept { return oversampling_; }
  int stored_frames() const noexcept { return stored_frames_; }
  bool is_dense() const noexcept { return frames_ != nullptr; }
  // Last representable time, in frame periods.
  double duration() const noexcept;

  void pixel(int index, int x, int y, std::span<float> out) const;
  Image frame(int index) const;

  // S(x, y, numerator / denominator). Exact stored-frame lookup when the time lands
  // on a stored sample, otherwise a linear blend of the two bracketing frames.
  void sample(std::int64_t numerator, std::int64_t denominator, int x, int y, std::span<float> out) const;
  // Same, for a real-valued time; times within 1e-7 of a stored sample snap to it.
  void sample(double time, int x, int y, std::span<float> out) const;

  SpaceTimeVolume materialize() const;

 private:
  void blend(std::int64_t lower, double weight, int x, int y, std::span<float> out) const;

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  int oversampling_ = 1;
  int stored_frames_ = 0;
  std::shared_ptr<const std::vector<Image>> frames_;
  PixelSource source_;
};

// Frame k is the stored frame at time k (index k * R).
VideoClip sample_gs(const SpaceTimeVolume& volume, int count);

// Row j of frame k is S(., j, k + slot(j)/N) with slot(j) = floor(j N / H); diagonal readout uses offset ((i + j) mod N) / N.
// rows = 0 selects N = H.
VideoClip sample_rs(const SpaceTimeVolume& volume, int count, Readout readout = Readout::vertical,
                    int rows = 0);

struct XTSlice {
  Image data;  // width x frame_count; x horizontal, t vertical
  int row = 0;
  Shutter source_shutter = Shutter::global;
};

XTSlice xt_slice(const VideoClip& clip, int row);

struct ShiftOptions {
  double search_min = -0.5;
  double search_max = 1.5;
  double step = 0.01;
  double min_variance = 1e-6;
};

// Temporal shift s such that rs_slice(x, k) ~ gs_slice(x, k + s) at the given row.
// Each x-column is registered independently (cubic resampling along t, SSD search
// with parabolic refinement); the median over textured columns is returned.
double verify_shift_relation(const VideoClip& gs, const VideoClip& rs, int row,
                             const ShiftOptions& options = {});

}  // namespace unroll
