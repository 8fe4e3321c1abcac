#include "unroll/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "unroll/canny.hpp"
#include "unroll/errors.hpp"
#include "unroll/parallel.hpp"
#include "unroll/patch_index.hpp"

namespace unroll {

std::vector<double> patch_gradient_energy(const VideoClip& clip) {
  const std::vector<Image> y = clip_luma(clip);
  const int w = clip.width();
  const int k = clip.frame_count();
  const int nx = w - kPatchWidth + 1;
  const int nk = k - kPatchFrames + 1;
  std::vector<double> energy(static_cast<std::size_t>(clip.height()) * nx * nk);
  parallel_for(clip.height(), [&](std::size_t row) {
    const int j = static_cast<int>(row);
    Image slice(w, k, 1);
    for (int t = 0; t < k; ++t) {
      const auto src = y[t].row(j);
      std::copy(src.begin(), src.end(), slice.row(t).begin());
    }
    const Image g = gradient_magnitude(slice, 0.0);
    for (int kk = 0; kk < nk; ++kk) {
      for (int x = 0; x < nx; ++x) {
        double s = 0.0;
        for (int dt = 0; dt < kPatchFrames; ++dt) {
          for (int dx = 0; dx < kPatchWidth; ++dx) s += g.at(x + dx, kk + dt);
        }
        energy[(static_cast<std::size_t>(j) * nk + kk) * nx + x] = s;
      }
    }
  });
  return energy;
}

RecurrenceStats recurrence_stats(const VideoClip& gs, const VideoClip& rs, const RecurrenceOptions& options) {
  gs.validate();
  rs.validate();
  if (gs.frame_count() < kPatchFrames || rs.frame_count() < kPatchFrames) {
    throw InputError("recurrence statistics need at least 3 frames per clip");
  }
  if (gs.width() < kPatchWidth || rs.width() < kPatchWidth) throw InputError("frames narrower than 7 pixels");
  if (!(options.top_fraction > 0.0 && options.top_fraction <= 1.0)) throw InputError("top fraction must be in (0, 1]");

  const PatchIndex gs_index(PatchSet(clip_luma(gs)));
  const PatchIndex rs_index(PatchSet(clip_luma(rs)));
  const PatchSet& gp = gs_index.patches();
  const std::size_t m = gp.size();
  std::vector<double> ratio(m);
  std::vector<char> has_internal(m, 1);
  parallel_for(gp.height(), [&](std::size_t row) {
    const std::size_t per_row = static_cast<std::size_t>(gp.per_row_k()) * gp.per_row_x();
    for (std::size_t i = row * per_row; i < (row + 1) * per_row; ++i) {
      const PatchCoord c = gp.coord(i);
      const auto accept = [&gp, c](std::size_t other) {
        const PatchCoord o = gp.coord(other);
        return o.row != c.row || std::abs(o.x - c.x) >= kPatchWidth || std::abs(o.k - c.k) >= kPatchFrames;
      };
      const Neighbor internal = gs_index.nearest(gp.patch(i), options.epsilon, accept);
      const Neighbor external = rs_index.nearest(gp.patch(i), options.epsilon);
      if (internal.index < 0) has_internal[i] = 0;
      const double d_gs = internal.index < 0 ? 0.0 : std::sqrt(static_cast<double>(internal.distance));
      const double d_rs = std::sqrt(static_cast<double>(external.distance));
      ratio[i] = d_rs / std::max(d_gs, options.min_denominator);
    }
  });

  const std::vector<double> energy = patch_gradient_energy(gs);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });

  RecurrenceStats s;
  s.patch_count = m;
  s.top_count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(options.top_fraction * m)));
  std::vector<double> top;
  top.reserve(s.top_count);
  for (std::size_t i = 0; i < s.top_count; ++i) top.push_back(ratio[order[i]]);
  for (double r : top) {
    s.mean_ratio += r;
    if (r <= 1.1) s.fraction_within_1_1 += 1.0;
    if (r <= 1.5) s.fraction_within_1_5 += 1.0;
  }
  s.mean_ratio /= top.size();
  s.fraction_within_1_1 /= top.size();
  s.fraction_within_1_5 /= top.size();
  for (double r : ratio) s.mean_ratio_all += r;
  s.mean_ratio_all /= m;
  std::vector<double> sorted = top;
  std::sort(sorted.begin(), sorted.end());
  for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    const double pos = q * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(sorted.size() - 1, lo + 1);
    s.quantiles.emplace_back(q, sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]));
  }
  const double max_energy = energy.empty() ? 0.0 : energy[order.front()];
  s.reliable = max_energy > 1e-9 && std::all_of(has_internal.begin(), has_internal.end(), [](char v) { return v; });
  return s;
}

std::string RecurrenceStats::to_text() const {
  std::ostringstream out;
  char buf[64];
  out << "patches " << patch_count << '\n';
  out << "top_patches " << top_count << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", mean_ratio);
  out << "mean_ratio_top " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", mean_ratio_all);
  out << "mean_ratio_all " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", fraction_within_1_1);
  out << "fraction_r_le_1.1 " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", fraction_within_1_5);
  out << "fraction_r_le_1.5 " << buf << '\n';
  for (const auto& [q, r] : quantiles) {
    std::snprintf(buf, sizeof buf, "quantile_%.2f %.6f", q, r);
    out << buf << '\n';
  }
  out << "reliable " << (reliable ? "yes" : "no") << '\n';
  return out.str();
}

}  // namespace unroll
