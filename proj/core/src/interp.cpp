#include "unroll/interp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "unroll/errors.hpp"
#include "unroll/parallel.hpp"

namespace unroll {

void PairInterpolation::pixels(double tau, std::span<const PixelCoord> coords, std::span<float> out) const {
  const Image f = frame(tau);
  const int ch = f.channels();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (int c = 0; c < ch; ++c) out[i * ch + c] = f.at(coords[i].x, coords[i].y, c);
  }
}

void PairInterpolation::prefetch(std::span<const double>) const {}

namespace {

void gather(const Image& src, std::span<const PixelCoord> coords, std::span<float> out) {
  const int ch = src.channels();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (int c = 0; c < ch; ++c) out[i * ch + c] = src.at(coords[i].x, coords[i].y, c);
  }
}

std::vector<PixelCoord> all_coords(int width, int height) {
  std::vector<PixelCoord> coords;
  coords.reserve(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) coords.push_back({x, y});
  }
  return coords;
}

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw RangeError("interpolation fraction " + std::to_string(tau) + " outside [0, 1]");
}

class BuiltinPair final : public PairInterpolation {
 public:
  BuiltinPair(Image a, Image b, const FlowOptions& options, double floor)
      : a_(std::move(a)), b_(std::move(b)), flows_(estimate_flow_pair(a_, b_, options)), floor_(floor) {}

  Image frame(double tau) const override {
    check_tau(tau);
    if (tau == 0.0) return a_;
    if (tau == 1.0) return b_;
    Image out(a_.width(), a_.height(), a_.channels());
    const auto coords = all_coords(a_.width(), a_.height());
    blend(tau, coords, out.pixels());
    return out;
  }

  void pixels(double tau, std::span<const PixelCoord> coords, std::span<float> out) const override {
    check_tau(tau);
    if (tau == 0.0) return gather(a_, coords, out);
    if (tau == 1.0) return gather(b_, coords, out);
    blend(tau, coords, out);
  }

 private:
  void blend(double tau, std::span<const PixelCoord> coords, std::span<float> out) const {
    const FlowField& fwd = flows_.forward;
    const FlowField& bwd = flows_.backward;
    const int ch = a_.channels();
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const int x = coords[i].x;
      const int y = coords[i].y;
      const double ax = x - tau * fwd.u.at(x, y);
      const double ay = y - tau * fwd.v.at(x, y);
      const double bx = x - (1.0 - tau) * bwd.u.at(x, y);
      const double by = y - (1.0 - tau) * bwd.v.at(x, y);
      const double wa = (1.0 - tau) * (fwd.confidence.at(x, y) + floor_);
      const double wb = tau * (bwd.confidence.at(x, y) + floor_);
      const double norm = 1.0 / (wa + wb);
      for (int c = 0; c < ch; ++c) {
        const double va = sample_bilinear(a_, ax, ay, c);
        const double vb = sample_bilinear(b_, bx, by, c);
        out[i * ch + c] = static_cast<float>((wa * va + wb * vb) * norm);
      }
    }
  }

  Image a_;
  Image b_;
  FlowPair flows_;
  double floor_;
};

class OraclePair final : public PairInterpolation {
 public:
  OraclePair(const SpaceTimeVolume& volume, int rows, Readout readout, Image a, Image b, PairContext context)
      : volume_(volume), rows_(rows), readout_(readout), a_(std::move(a)), b_(std::move(b)), context_(context) {}

  Image frame(double tau) const override {
    check_tau(tau);
    if (tau == 0.0) return a_;
    if (tau == 1.0) return b_;
    Image out(a_.width(), a_.height(), volume_.channels());
    const auto coords = all_coords(a_.width(), a_.height());
    pixels(tau, coords, out.pixels());
    return out;
  }

  void pixels(double tau, std::span<const PixelCoord> coords, std::span<float> out) const override {
    check_tau(tau);
    if (tau == 0.0) return gather(a_, coords, out);
    if (tau == 1.0) return gather(b_, coords, out);
    const int ch = volume_.channels();
    const double base = context_.frame_a + tau * (context_.frame_b - context_.frame_a);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const PixelCoord p = context_.augmentation.inverse_coord(coords[i], volume_.width(), volume_.height());
      const int slot = readout_ == Readout::diagonal ? (p.x + p.y) % rows_ : vertical_readout_slot(p.y, volume_.height(), rows_);
      volume_.sample(base + static_cast<double>(slot) / rows_, p.x, p.y, out.subspan(i * ch, ch));
    }
  }

 private:
  const SpaceTimeVolume& volume_;
  int rows_;
  Readout readout_;
  Image a_;
  Image b_;
  PairContext context_;
};

}  // namespace

BuiltinInterpolator::BuiltinInterpolator(FlowOptions options, double confidence_floor)
    : options_(options), confidence_floor_(confidence_floor) {}

InterpolatorCapabilities BuiltinInterpolator::capabilities() const {
  return {8.0 * (1 << (options_.levels - 1)) / 4.0, 0, true};
}

std::unique_ptr<PairInterpolation> BuiltinInterpolator::prepare(const Image& a, const Image& b,
                                                                const PairContext&) const {
  require_same_shape(a, b, "interpolation endpoints");
  return std::make_unique<BuiltinPair>(a, b, options_, confidence_floor_);
}

OracleInterpolator::OracleInterpolator(SpaceTimeVolume volume, int rows, Readout readout)
    : volume_(std::move(volume)), rows_(rows > 0 ? rows : volume_.height()), readout_(readout) {}

InterpolatorCapabilities OracleInterpolator::capabilities() const {
  return {std::numeric_limits<double>::infinity(), 0, true};
}

std::unique_ptr<PairInterpolation> OracleInterpolator::prepare(const Image& a, const Image& b,
                                                               const PairContext& context) const {
  require_same_shape(a, b, "interpolation endpoints");
  const PixelCoord dims = context.augmentation.rotation % 2 ? PixelCoord{volume_.height(), volume_.width()}
                                                            : PixelCoord{volume_.width(), volume_.height()};
  if (a.width() != dims.x || a.height() != dims.y) {
    throw InputError("oracle interpolator: endpoint frames do not match the volume geometry");
  }
  return std::make_unique<OraclePair>(volume_, rows_, readout_, a, b, context);
}

Image interpolate(const Image& a, const Image& b, double tau) {
  check_tau(tau);
  if (tau == 0.0) {
    require_same_shape(a, b, "interpolate");
    return a;
  }
  if (tau == 1.0) {
    require_same_shape(a, b, "interpolate");
    return b;
  }
  return BuiltinInterpolator().prepare(a, b, {})->frame(tau);
}

std::vector<Image> upsample_pair(const Image& a, const Image& b, int rows, const Interpolator& interpolator,
                                 const PairContext& context) {
  if (rows < 2) throw InputError("upsampling factor N must be at least 2");
  const auto pair = interpolator.prepare(a, b, context);
  std::vector<double> taus(rows + 1);
  for (int m = 0; m <= rows; ++m) taus[m] = static_cast<double>(m) / rows;
  pair->prefetch(taus);
  std::vector<Image> frames;
  frames.reserve(rows + 1);
  for (int m = 0; m <= rows; ++m) frames.push_back(pair->frame(taus[m]));
  return frames;
}

int interpolated_index_for_row(int row, int height, int rows) {
  return rows - vertical_readout_slot(row, height, rows);
}

GSProposal compose_gs(std::span<const Image> upsampled, int rows) {
  if (rows < 2) throw InputError("compose_gs: N must be at least 2");
  if (static_cast<int>(upsampled.size()) != rows + 1) {
    throw InputError("compose_gs: expected " + std::to_string(rows + 1) + " frames, got " +
                     std::to_string(upsampled.size()));
  }
  for (const Image& f : upsampled) require_same_shape(upsampled.front(), f, "compose_gs frames");
  const int h = upsampled.front().height();
  GSProposal out;
  out.source = "compose";
  out.frame = Image(upsampled.front().width(), h, upsampled.front().channels());
  for (int j = 0; j < h; ++j) {
    const auto src = upsampled[interpolated_index_for_row(j, h, rows)].row(j);
    std::copy(src.begin(), src.end(), out.frame.row(j).begin());
  }
  return out;
}

namespace {

int strided_index(int m, int rows, int stride) {
  if (stride <= 1 || m == rows) return m;
  const int lower = (m / stride) * stride;
  const int upper = std::min(lower + stride, rows);
  return (m - lower) < (upper - m) ? lower : upper;
}

}  // namespace

Image compose_pair(const PairInterpolation& pair, int width, int height, int channels, int rows,
                   const Augmentation& augmentation, const ComposeOptions& options) {
  if (rows < 2) throw InputError("compose: N must be at least 2");
  // Interpolated index -> output rows it feeds.
  std::map<int, std::vector<int>> rows_by_index;
  for (int j = 0; j < height; ++j) {
    rows_by_index[strided_index(interpolated_index_for_row(j, height, rows), rows, options.stride)].push_back(j);
  }
  auto fraction = [&](int m) {
    // Time-reversed clips traverse the pair backwards.
    return augmentation.time_reverse ? static_cast<double>(rows - m) / rows : static_cast<double>(m) / rows;
  };
  std::vector<double> taus;
  taus.reserve(rows_by_index.size());
  for (const auto& [m, unused] : rows_by_index) taus.push_back(fraction(m));
  pair.prefetch(taus);

  Image out(width, height, channels);
  std::vector<PixelCoord> coords(width);
  for (const auto& [m, output_rows] : rows_by_index) {
    for (int j : output_rows) {
      for (int x = 0; x < width; ++x) coords[x] = augmentation.forward_coord({x, j}, width, height);
      pair.pixels(fraction(m), coords, out.row(j));
    }
  }
  return out;
}

VideoClip reconstruct_clip(const VideoClip& rs, const Interpolator& interpolator, const ComposeOptions& options) {
  rs.validate();
  if (rs.shutter != Shutter::rolling) throw InputError("reconstruct_clip expects a rolling-shutter clip");
  if (rs.frame_count() < 2) throw InputError("reconstruct_clip needs at least two RS frames");
  VideoClip gs;
  gs.shutter = Shutter::global;
  gs.rows = rs.rows;
  gs.first_time = rs.first_time + 1;
  gs.frames.resize(rs.frame_count() - 1);
  const Augmentation identity{};
  parallel_for(gs.frames.size(), [&](std::size_t p) {
    const PairContext ctx{rs.first_time + static_cast<int>(p), rs.first_time + static_cast<int>(p) + 1, identity};
    const auto pair = interpolator.prepare(rs.frames[p], rs.frames[p + 1], ctx);
    gs.frames[p] = compose_pair(*pair, rs.width(), rs.height(), rs.channels(), rs.readout_rows(), identity, options);
  });
  return gs;
}

}  // namespace unroll
