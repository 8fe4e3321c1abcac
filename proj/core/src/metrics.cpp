#include "unroll/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "unroll/errors.hpp"

namespace unroll {

namespace {

void check_mask(const Image& image, const Image& mask) {
  if (mask.width() != image.width() || mask.height() != image.height() ||
      (mask.channels() != 1 && mask.channels() != image.channels())) {
    throw InputError("mask does not match the image");
  }
}

bool mask_on(const Image& mask, int x, int y, int c) {
  return mask.at(x, y, mask.channels() == 1 ? 0 : c) != 0.0f;
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size) * size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double v = std::exp(-((x - c) * (x - c) + (y - c) * (y - c)) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>(y) * size + x] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double mse(const Image& a, const Image& b, const Image* mask) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw InputError("mse of empty images");
  if (mask) check_mask(a, *mask);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      for (int c = 0; c < a.channels(); ++c) {
        if (mask && !mask_on(*mask, x, y, c)) continue;
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sum += d * d;
        ++count;
      }
    }
  }
  if (count == 0) throw InputError("mask selects no pixels");
  return sum / count;
}

double psnr(const Image& a, const Image& b, const Image* mask) {
  const double e = mse(a, b, mask);
  if (e == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(1.0 / e);
}

double psnr(const VideoClip& a, const VideoClip& b, const std::vector<Image>* masks) {
  if (a.frame_count() != b.frame_count() || a.frame_count() == 0) throw InputError("psnr: frame counts differ");
  if (masks && static_cast<int>(masks->size()) != a.frame_count()) throw InputError("psnr: one mask per frame");
  double sum = 0.0;
  int finite = 0;
  for (int k = 0; k < a.frame_count(); ++k) {
    const double p = psnr(a.frames[k], b.frames[k], masks ? &(*masks)[k] : nullptr);
    if (std::isinf(p)) continue;
    sum += p;
    ++finite;
  }
  return finite == 0 ? kPsnrInfinity : sum / finite;
}

double ssim(const Image& a, const Image& b, const Image* mask, const SsimOptions& o) {
  require_same_shape(a, b, "ssim");
  if (a.width() < o.window || a.height() < o.window) {
    throw InputError("ssim needs frames at least " + std::to_string(o.window) + " pixels on each side");
  }
  if (mask) check_mask(a, *mask);
  const std::vector<double> w = gaussian_window(o.window, o.sigma);
  const double c1 = (o.k1 * o.range) * (o.k1 * o.range);
  const double c2 = (o.k2 * o.range) * (o.k2 * o.range);
  const int r = o.window / 2;
  double sum = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = r; y < a.height() - (o.window - 1 - r); ++y) {
      for (int x = r; x < a.width() - (o.window - 1 - r); ++x) {
        if (mask && !mask_on(*mask, x, y, c)) continue;
        double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
        for (int dy = 0; dy < o.window; ++dy) {
          for (int dx = 0; dx < o.window; ++dx) {
            const double g = w[static_cast<std::size_t>(dy) * o.window + dx];
            const double va = a.at(x - r + dx, y - r + dy, c);
            const double vb = b.at(x - r + dx, y - r + dy, c);
            ma += g * va;
            mb += g * vb;
            saa += g * va * va;
            sbb += g * vb * vb;
            sab += g * va * vb;
          }
        }
        const double va = saa - ma * ma;
        const double vb = sbb - mb * mb;
        const double cov = sab - ma * mb;
        sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++count;
      }
    }
  }
  if (count == 0) throw InputError("mask selects no SSIM window centers");
  return sum / count;
}

double ssim(const VideoClip& a, const VideoClip& b, const std::vector<Image>* masks) {
  if (a.frame_count() != b.frame_count() || a.frame_count() == 0) throw InputError("ssim: frame counts differ");
  if (masks && static_cast<int>(masks->size()) != a.frame_count()) throw InputError("ssim: one mask per frame");
  double sum = 0.0;
  for (int k = 0; k < a.frame_count(); ++k) sum += ssim(a.frames[k], b.frames[k], masks ? &(*masks)[k] : nullptr);
  return sum / a.frame_count();
}

std::string format_db(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

std::string EvalReport::to_text() const {
  std::ostringstream out;
  char buf[64];
  for (const FrameScore& f : frames) {
    std::snprintf(buf, sizeof buf, "%.6f", f.ssim);
    out << "frame time=" << f.time << " psnr=" << format_db(f.psnr) << " ssim=" << buf;
    if (masked) {
      std::snprintf(buf, sizeof buf, "%.6f", f.masked_ssim);
      out << " masked_psnr=" << format_db(f.masked_psnr) << " masked_ssim=" << buf;
    }
    out << '\n';
  }
  out << "summary\n";
  out << "  frames " << frames.size() << '\n';
  out << "  mean_psnr " << format_db(mean_psnr) << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", mean_ssim);
  out << "  mean_ssim " << buf << '\n';
  if (masked) {
    out << "  mean_masked_psnr " << format_db(mean_masked_psnr) << '\n';
    std::snprintf(buf, sizeof buf, "%.6f", mean_masked_ssim);
    out << "  mean_masked_ssim " << buf << '\n';
  }
  if (!config.empty()) out << "  config " << config << '\n';
  return out.str();
}

EvalReport evaluate(const VideoClip& pred, const VideoClip& gt, const std::vector<Image>* masks) {
  pred.validate();
  gt.validate();
  if (masks && static_cast<int>(masks->size()) != gt.frame_count()) {
    throw InputError("evaluate: expected one mask per ground-truth frame");
  }
  EvalReport report;
  report.masked = masks != nullptr;
  double psnr_sum = 0.0, ssim_sum = 0.0, mpsnr_sum = 0.0, mssim_sum = 0.0;
  int psnr_finite = 0, mpsnr_finite = 0;
  for (int k = 0; k < pred.frame_count(); ++k) {
    const int time = pred.first_time + k;
    const int g = time - gt.first_time;
    if (g < 0 || g >= gt.frame_count()) continue;
    FrameScore s;
    s.time = time;
    s.psnr = psnr(pred.frames[k], gt.frames[g]);
    s.ssim = ssim(pred.frames[k], gt.frames[g]);
    if (masks) {
      s.masked_psnr = psnr(pred.frames[k], gt.frames[g], &(*masks)[g]);
      s.masked_ssim = ssim(pred.frames[k], gt.frames[g], &(*masks)[g]);
      if (!std::isinf(s.masked_psnr)) mpsnr_sum += s.masked_psnr, ++mpsnr_finite;
      mssim_sum += s.masked_ssim;
    }
    if (!std::isinf(s.psnr)) psnr_sum += s.psnr, ++psnr_finite;
    ssim_sum += s.ssim;
    report.frames.push_back(s);
  }
  if (report.frames.empty()) throw InputError("prediction and ground truth share no frame times");
  const double n = static_cast<double>(report.frames.size());
  report.mean_psnr = psnr_finite ? psnr_sum / psnr_finite : kPsnrInfinity;
  report.mean_ssim = ssim_sum / n;
  if (masks) {
    report.mean_masked_psnr = mpsnr_finite ? mpsnr_sum / mpsnr_finite : kPsnrInfinity;
    report.mean_masked_ssim = mssim_sum / n;
  }
  return report;
}

Image misalignment_viz(const Image& gt, const Image& pred) {
  if (gt.width() != pred.width() || gt.height() != pred.height()) throw InputError("misalignment_viz: size mismatch");
  const Image lg = luma(gt);
  const Image lp = luma(pred);
  Image out(gt.width(), gt.height(), 3);
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      out.at(x, y, 0) = lg.at(x, y);
      out.at(x, y, 1) = lp.at(x, y);
      out.at(x, y, 2) = lg.at(x, y);
    }
  }
  return out;
}

VideoClip misalignment_viz(const VideoClip& gt, const VideoClip& pred) {
  if (gt.frame_count() != pred.frame_count()) throw InputError("misalignment_viz: frame counts differ");
  VideoClip out;
  out.shutter = gt.shutter;
  out.first_time = gt.first_time;
  for (int k = 0; k < gt.frame_count(); ++k) out.frames.push_back(misalignment_viz(gt.frames[k], pred.frames[k]));
  return out;
}

}  // namespace unroll
