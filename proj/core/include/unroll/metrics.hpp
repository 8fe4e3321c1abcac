#pragma once

#include <limits>
#include <string>
#include <vector>

#include "unroll/image.hpp"
#include "unroll/volume.hpp"

namespace unroll {

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

// Mean squared error over all samples, or over pixels where mask != 0 (mask is
// single-channel, or has the image's channel count).
double mse(const Image& a, const Image& b, const Image* mask = nullptr);
// 10 log10(1 / MSE) for [0, 1] data; +inf when the images agree.
double psnr(const Image& a, const Image& b, const Image* mask = nullptr);
// Per-frame PSNR averaged over frames (+inf only if every frame is +inf).
double psnr(const VideoClip& a, const VideoClip& b, const std::vector<Image>* masks = nullptr);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0;
};

// Mean SSIM over valid window centers (windows fully inside the frame), averaged over
// channels. With a mask, only centers where the mask is set are averaged.
double ssim(const Image& a, const Image& b, const Image* mask = nullptr, const SsimOptions& options = {});
double ssim(const VideoClip& a, const VideoClip& b, const std::vector<Image>* masks = nullptr);

struct FrameScore {
  int time = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double masked_psnr = 0.0;
  double masked_ssim = 0.0;
};

struct EvalReport {
  std::vector<FrameScore> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  bool masked = false;
  double mean_masked_psnr = 0.0;
  double mean_masked_ssim = 0.0;
  std::string config;  // free-form echo of the evaluation inputs

  // One "frame ..." line per frame followed by a summary block; byte-stable.
  std::string to_text() const;
};

// pred and gt are matched by absolute frame time; only shared times are scored.
// masks, when given, are indexed by gt frame.
EvalReport evaluate(const VideoClip& pred, const VideoClip& gt, const std::vector<Image>* masks = nullptr);

// Gray composite per frame: luma(gt) in red and blue, luma(pred) in green.
VideoClip misalignment_viz(const VideoClip& gt, const VideoClip& pred);
Image misalignment_viz(const Image& gt, const Image& pred);

std::string format_db(double value);

}  // namespace unroll
