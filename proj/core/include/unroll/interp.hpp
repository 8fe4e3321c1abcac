#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "unroll/augmentation.hpp"
#include "unroll/flow.hpp"
#include "unroll/image.hpp"
#include "unroll/volume.hpp"

namespace unroll {

// Where an endpoint pair sits in the original (un-augmented) clip. frame_a / frame_b are
// absolute frame times; for time-reversed augmentations frame_b = frame_a - 1.
struct PairContext {
  int frame_a = 0;
  int frame_b = 1;
  Augmentation augmentation{};
};

struct InterpolatorCapabilities {
  double max_displacement = 0.0;  // px between endpoints
  int max_batch = 0;              // fractions per request; 0 = unlimited
  bool stateless = true;          // false: one instance per worker
};

// Frames between one endpoint pair. Implementations must satisfy endpoint identity:
// frame(0) == a and frame(1) == b exactly.
class PairInterpolation {
 public:
  virtual ~PairInterpolation() = default;

  virtual Image frame(double tau) const = 0;
  // Values at the given pixels of frame(tau), channel-interleaved into out.
  virtual void pixels(double tau, std::span<const PixelCoord> coords, std::span<float> out) const;
  // Hint that these fractions will be requested; batched implementations fetch them at once.
  virtual void prefetch(std::span<const double> taus) const;
};

class Interpolator {
 public:
  virtual ~Interpolator() = default;
  virtual std::string name() const = 0;
  virtual InterpolatorCapabilities capabilities() const = 0;
  virtual std::unique_ptr<PairInterpolation> prepare(const Image& a, const Image& b,
                                                     const PairContext& context) const = 0;
};

// Flow-based interpolator: one forward/backward flow pair per endpoint pair, reused for
// every fraction. F_tau = normalized, confidence-weighted blend of
// (1 - tau) * A(x - tau * f_ab) and tau * B(x - (1 - tau) * f_ba).
class BuiltinInterpolator final : public Interpolator {
 public:
  explicit BuiltinInterpolator(FlowOptions options = {}, double confidence_floor = 0.05);
  std::string name() const override { return "builtin"; }
  InterpolatorCapabilities capabilities() const override;
  std::unique_ptr<PairInterpolation> prepare(const Image& a, const Image& b,
                                             const PairContext& context) const override;

 private:
  FlowOptions options_;
  double confidence_floor_;
};

// Test oracle backed by the true space-time volume: the frame at fraction tau between
// RS frames k and k+1 is the slanted-plane sample at times k + tau + (row offset)/N,
// expressed in the augmented orientation given by the pair context.
class OracleInterpolator final : public Interpolator {
 public:
  OracleInterpolator(SpaceTimeVolume volume, int rows = 0, Readout readout = Readout::vertical);
  std::string name() const override { return "oracle"; }
  InterpolatorCapabilities capabilities() const override;
  std::unique_ptr<PairInterpolation> prepare(const Image& a, const Image& b,
                                             const PairContext& context) const override;

 private:
  SpaceTimeVolume volume_;
  int rows_;
  Readout readout_;
};

struct GSProposal {
  Image frame;
  int time = 0;        // aligned with the top-row time of the later RS frame
  std::string source;  // augmentation id, "builtin", "oracle", ...
};

// Built-in single interpolation between two frames.
Image interpolate(const Image& a, const Image& b, double tau);

// F_0..F_N with F_m = frame(m / N).
std::vector<Image> upsample_pair(const Image& a, const Image& b, int rows, const Interpolator& interpolator,
                                 const PairContext& context = {});

// Index m of the interpolated frame that supplies output row j: N minus the row's
// readout slot, so m + slot = N lands on the top-row time of the later frame.
int interpolated_index_for_row(int row, int height, int rows);

// Row j of the GS frame comes from F_{m(j)}. Throws on length mismatch.
GSProposal compose_gs(std::span<const Image> upsampled, int rows);

struct ComposeOptions {
  int stride = 1;  // > 1 evaluates every stride-th fraction and reuses the nearest one
};

// Streaming compose for one endpoint pair under an augmentation. a and b are the
// augmented endpoints; only the pixels feeding the output are requested from the
// interpolator. width/height are the original (un-augmented) frame dims.
Image compose_pair(const PairInterpolation& pair, int width, int height, int channels, int rows,
                   const Augmentation& augmentation, const ComposeOptions& options = {});

// GS clip with K - 1 frames at top-row times first_time + 1 .. first_time + K - 1.
VideoClip reconstruct_clip(const VideoClip& rs, const Interpolator& interpolator,
                           const ComposeOptions& options = {});

}  // namespace unroll
