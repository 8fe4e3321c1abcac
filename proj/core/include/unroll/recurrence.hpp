#pragma once

#include <string>
#include <utility>
#include <vector>

#include "unroll/volume.hpp"

namespace unroll {

struct RecurrenceOptions {
  double top_fraction = 0.25;  // share of highest-gradient patches summarized
  double min_denominator = 1e-6;
  double epsilon = 0.0;        // > 0 uses approximate NN search
};

// Cross-video vs within-video xt-patch recurrence. For each GS patch p:
// d_GS = distance to its nearest GS patch that shares no pixel with p, d_RS = distance to
// its nearest RS patch, r = d_RS / max(d_GS, min_denominator).
struct RecurrenceStats {
  std::size_t patch_count = 0;
  std::size_t top_count = 0;
  double mean_ratio = 0.0;      // over the top-gradient patches
  double mean_ratio_all = 0.0;  // over every patch
  std::vector<std::pair<double, double>> quantiles;  // (q, r) over the top-gradient patches
  double fraction_within_1_1 = 0.0;
  double fraction_within_1_5 = 0.0;
  bool reliable = true;  // false for textureless input

  std::string to_text() const;
};

RecurrenceStats recurrence_stats(const VideoClip& gs, const VideoClip& rs, const RecurrenceOptions& options = {});

// Per-patch gradient-magnitude sum on the luma xt-slices, indexed like PatchSet.
std::vector<double> patch_gradient_energy(const VideoClip& clip);

}  // namespace unroll
