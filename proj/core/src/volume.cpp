#include "unroll/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "unroll/errors.hpp"

namespace unroll {

int vertical_readout_slot(int row, int height, int rows) noexcept {
  if (height == rows) return row;
  return static_cast<int>(static_cast<std::int64_t>(row) * rows / height);
}

int VideoClip::readout_slot(int i, int j) const noexcept {
  const int n = readout_rows();
  if (shutter == Shutter::global) return 0;
  if (readout == Readout::diagonal) return (i + j) % n;
  return vertical_readout_slot(j, height(), n);
}

double VideoClip::pixel_time(int k, int i, int j) const noexcept {
  return k + static_cast<double>(readout_slot(i, j)) / readout_rows();
}

void VideoClip::validate() const {
  if (frames.empty()) throw InputError("video clip has no frames");
  for (const Image& f : frames) require_same_shape(frames.front(), f, "video clip frames");
  if (readout_rows() < 2) throw InputError("readout rows must be at least 2");
}

SpaceTimeVolume SpaceTimeVolume::from_frames(std::vector<Image> frames, int oversampling) {
  if (frames.empty()) throw InputError("space-time volume needs at least one frame");
  if (oversampling < 1) throw InputError("temporal oversampling must be positive");
  for (const Image& f : frames) require_same_shape(frames.front(), f, "space-time volume frames");
  SpaceTimeVolume v;
  v.width_ = frames.front().width();
  v.height_ = frames.front().height();
  v.channels_ = frames.front().channels();
  v.oversampling_ = oversampling;
  v.stored_frames_ = static_cast<int>(frames.size());
  v.frames_ = std::make_shared<const std::vector<Image>>(std::move(frames));
  return v;
}

SpaceTimeVolume SpaceTimeVolume::procedural(int width, int height, int channels, int oversampling,
                                            int stored_frames, PixelSource source) {
  if (width < 1 || height < 1 || channels < 1 || stored_frames < 1) {
    throw InputError("procedural volume dimensions must be positive");
  }
  if (oversampling < 1) throw InputError("temporal oversampling must be positive");
  SpaceTimeVolume v;
  v.width_ = width;
  v.height_ = height;
  v.channels_ = channels;
  v.oversampling_ = oversampling;
  v.stored_frames_ = stored_frames;
  v.source_ = std::move(source);
  return v;
}

double SpaceTimeVolume::duration() const noexcept {
  return static_cast<double>(stored_frames_ - 1) / oversampling_;
}

void SpaceTimeVolume::pixel(int index, int x, int y, std::span<float> out) const {
  if (index < 0 || index >= stored_frames_) {
    throw RangeError("stored frame " + std::to_string(index) + " outside volume of " +
                     std::to_string(stored_frames_) + " frames");
  }
  if (frames_) {
    const Image& f = (*frames_)[index];
    for (int c = 0; c < channels_; ++c) out[c] = f.at(x, y, c);
  } else {
    source_(index, x, y, out);
  }
}

Image SpaceTimeVolume::frame(int index) const {
  if (frames_ && index >= 0 && index < stored_frames_) return (*frames_)[index];
  Image out(width_, height_, channels_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      pixel(index, x, y, out.row(y).subspan(static_cast<std::size_t>(x) * channels_, channels_));
    }
  }
  return out;
}

void SpaceTimeVolume::blend(std::int64_t lower, double weight, int x, int y, std::span<float> out) const {
  float a[8];
  float b[8];
  std::vector<float> heap;
  std::span<float> sa(a, channels_ <= 8 ? channels_ : 0);
  std::span<float> sb(b, channels_ <= 8 ? channels_ : 0);
  if (channels_ > 8) {
    heap.resize(2 * channels_);
    sa = std::span<float>(heap).first(channels_);
    sb = std::span<float>(heap).last(channels_);
  }
  pixel(static_cast<int>(lower), x, y, sa);
  pixel(static_cast<int>(lower + 1), x, y, sb);
  for (int c = 0; c < channels_; ++c) {
    out[c] = static_cast<float>((1.0 - weight) * sa[c] + weight * sb[c]);
  }
}

void SpaceTimeVolume::sample(std::int64_t numerator, std::int64_t denominator, int x, int y,
                             std::span<float> out) const {
  if (denominator <= 0) throw InputError("sample time denominator must be positive");
  const std::int64_t scaled = numerator * oversampling_;
  if (scaled < 0) throw RangeError("sample time before the start of the volume");
  const std::int64_t lower = scaled / denominator;
  const std::int64_t remainder = scaled % denominator;
  if (remainder == 0) {
    pixel(static_cast<int>(lower), x, y, out);
    return;
  }
  if (lower + 1 >= stored_frames_) {
    throw RangeError("sample time beyond the end of the volume");
  }
  blend(lower, static_cast<double>(remainder) / denominator, x, y, out);
}

void SpaceTimeVolume::sample(double time, int x, int y, std::span<float> out) const {
  const double scaled = time * oversampling_;
  const double nearest = std::round(scaled);
  if (std::abs(scaled - nearest) <= 1e-7) {
    if (nearest < 0 || nearest >= stored_frames_) throw RangeError("sample time outside the volume");
    pixel(static_cast<int>(nearest), x, y, out);
    return;
  }
  const double lower = std::floor(scaled);
  if (lower < 0 || lower + 1 >= stored_frames_) throw RangeError("sample time outside the volume");
  blend(static_cast<std::int64_t>(lower), scaled - lower, x, y, out);
}

SpaceTimeVolume SpaceTimeVolume::materialize() const {
  if (frames_) return *this;
  std::vector<Image> frames;
  frames.reserve(stored_frames_);
  for (int i = 0; i < stored_frames_; ++i) frames.push_back(frame(i));
  return from_frames(std::move(frames), oversampling_);
}

VideoClip sample_gs(const SpaceTimeVolume& volume, int count) {
  if (count < 1) throw InputError("GS sample count must be positive");
  const std::int64_t last = static_cast<std::int64_t>(count - 1) * volume.oversampling();
  if (last >= volume.stored_frames()) {
    throw RangeError("requested " + std::to_string(count) + " GS frames but the volume spans " +
                     std::to_string(volume.duration()) + " frame periods");
  }
  VideoClip clip;
  clip.shutter = Shutter::global;
  clip.frames.reserve(count);
  for (int k = 0; k < count; ++k) clip.frames.push_back(volume.frame(k * volume.oversampling()));
  return clip;
}

VideoClip sample_rs(const SpaceTimeVolume& volume, int count, Readout readout, int rows) {
  if (count < 1) throw InputError("RS sample count must be positive");
  const int n = rows > 0 ? rows : volume.height();
  if (n < 2) throw InputError("readout rows must be at least 2");
  if (volume.oversampling() < n) {
    throw InputError("temporal oversampling R=" + std::to_string(volume.oversampling()) +
                     " is below the readout row count N=" + std::to_string(n));
  }
  VideoClip clip;
  clip.shutter = Shutter::rolling;
  clip.rows = rows > 0 ? rows : 0;
  clip.readout = readout;

  // Latest readout offset across the frame decides the volume span needed.
  const std::int64_t last_slot = readout == Readout::vertical
                                      ? vertical_readout_slot(volume.height() - 1, volume.height(), n)
                                      : std::min(n - 1, volume.width() + volume.height() - 2);
  const std::int64_t last_num = static_cast<std::int64_t>(count - 1) * n + last_slot;
  const std::int64_t scaled = last_num * volume.oversampling();
  const std::int64_t needed = scaled / n + (scaled % n != 0 ? 1 : 0);
  if (needed >= volume.stored_frames()) {
    throw RangeError("last RS row at time " + std::to_string(static_cast<double>(last_num) / n) +
                     " exceeds the volume duration " + std::to_string(volume.duration()));
  }

  const int ch = volume.channels();
  clip.frames.assign(count, Image(volume.width(), volume.height(), ch));
  for (int k = 0; k < count; ++k) {
    Image& frame = clip.frames[k];
    for (int j = 0; j < volume.height(); ++j) {
      auto row = frame.row(j);
      for (int i = 0; i < volume.width(); ++i) {
        const int slot = readout == Readout::diagonal ? (i + j) % n : vertical_readout_slot(j, volume.height(), n);
        volume.sample(static_cast<std::int64_t>(k) * n + slot, n, i, j,
                      row.subspan(static_cast<std::size_t>(i) * ch, ch));
      }
    }
  }
  return clip;
}

XTSlice xt_slice(const VideoClip& clip, int row) {
  clip.validate();
  if (row < 0 || row >= clip.height()) {
    throw RangeError("xt-slice row " + std::to_string(row) + " outside [0, " +
                     std::to_string(clip.height()) + ")");
  }
  const int w = clip.width();
  const int ch = clip.channels();
  XTSlice slice;
  slice.row = row;
  slice.source_shutter = clip.shutter;
  slice.data = Image(w, clip.frame_count(), ch);
  for (int k = 0; k < clip.frame_count(); ++k) {
    auto src = clip.frames[k].row(row);
    std::copy(src.begin(), src.end(), slice.data.row(k).begin());
  }
  return slice;
}

namespace {

// Catmull-Rom interpolation of a uniformly sampled signal, clamped at the ends.
double cubic_at(std::span<const double> s, double t) {
  const int n = static_cast<int>(s.size());
  const int i1 = static_cast<int>(std::floor(t));
  const double f = t - i1;
  auto at = [&](int i) { return s[std::clamp(i, 0, n - 1)]; };
  const double p0 = at(i1 - 1);
  const double p1 = at(i1);
  const double p2 = at(i1 + 1);
  const double p3 = at(i1 + 2);
  return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
}

double variance(std::span<const double> s) {
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  double acc = 0.0;
  for (double v : s) acc += (v - mean) * (v - mean);
  return acc / s.size();
}

// SSD between r(k) and g(k + shift) over the samples where k + shift lies inside g.
double shifted_cost(std::span<const double> g, std::span<const double> r, double shift) {
  const int n = static_cast<int>(g.size());
  double acc = 0.0;
  int used = 0;
  for (int k = 0; k < n; ++k) {
    const double t = k + shift;
    if (t < 0.0 || t > n - 1) continue;
    const double d = r[k] - cubic_at(g, t);
    acc += d * d;
    ++used;
  }
  return used >= 3 ? acc / used : std::numeric_limits<double>::infinity();
}

}  // namespace

double verify_shift_relation(const VideoClip& gs, const VideoClip& rs, int row, const ShiftOptions& options) {
  gs.validate();
  rs.validate();
  require_same_shape(gs.frames.front(), rs.frames.front(), "verify_shift_relation");
  if (gs.frame_count() != rs.frame_count()) throw InputError("verify_shift_relation: frame counts differ");
  if (gs.frame_count() < 4) throw InputError("verify_shift_relation needs at least 4 frames");

  const Image g_slice = luma(xt_slice(gs, row).data);
  const Image r_slice = luma(xt_slice(rs, row).data);
  const int w = g_slice.width();
  const int k = g_slice.height();

  {
    std::vector<double> all(g_slice.pixels().begin(), g_slice.pixels().end());
    if (variance(all) < options.min_variance) {
      throw IndeterminateShiftError("xt-slice at row " + std::to_string(row) + " is textureless");
    }
  }

  const int steps = static_cast<int>(std::lround((options.search_max - options.search_min) / options.step));
  std::vector<double> estimates;
  std::vector<double> g(k);
  std::vector<double> r(k);
  std::vector<double> cost(steps + 1);
  for (int x = 0; x < w; ++x) {
    for (int t = 0; t < k; ++t) {
      g[t] = g_slice.at(x, t);
      r[t] = r_slice.at(x, t);
    }
    if (variance(g) < options.min_variance) continue;
    for (int s = 0; s <= steps; ++s) cost[s] = shifted_cost(g, r, options.search_min + s * options.step);
    const int best = static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    double shift = options.search_min + best * options.step;
    if (best > 0 && best < steps) {
      const double c0 = cost[best - 1];
      const double c1 = cost[best];
      const double c2 = cost[best + 1];
      const double denom = c0 - 2.0 * c1 + c2;
      if (denom > 0.0) shift += 0.5 * options.step * (c0 - c2) / denom;
    }
    estimates.push_back(shift);
  }
  if (estimates.empty()) {
    throw IndeterminateShiftError("no textured column in the xt-slice at row " + std::to_string(row));
  }
  const auto mid = estimates.begin() + estimates.size() / 2;
  std::nth_element(estimates.begin(), mid, estimates.end());
  if (estimates.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(estimates.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace unroll
