#include "unroll/ensemble.hpp"

#include <cmath>

#include "unroll/errors.hpp"
#include "unroll/parallel.hpp"

namespace unroll {

Image proposal_mean(std::span<const Image> proposals) {
  if (proposals.empty()) throw InputError("proposal set is empty");
  for (const Image& p : proposals) require_same_shape(proposals.front(), p, "proposals");
  const std::size_t n = proposals.front().size();
  std::vector<double> sum(n, 0.0);
  for (const Image& p : proposals) {
    const auto px = p.pixels();
    for (std::size_t i = 0; i < n; ++i) sum[i] += px[i];
  }
  Image mean(proposals.front().width(), proposals.front().height(), proposals.front().channels());
  auto out = mean.pixels();
  const double inv = 1.0 / static_cast<double>(proposals.size());
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(sum[i] * inv);
  return mean;
}

Image proposal_spread(std::span<const Image> proposals) {
  const Image mean = proposal_mean(proposals);
  const int w = mean.width();
  const int h = mean.height();
  const int ch = mean.channels();
  Image spread(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int c = 0; c < ch; ++c) {
        double var = 0.0;
        for (const Image& p : proposals) {
          const double d = p.at(x, y, c) - mean.at(x, y, c);
          var += d * d;
        }
        acc += std::sqrt(var / proposals.size());
      }
      spread.at(x, y) = static_cast<float>(acc / ch);
    }
  }
  return spread;
}

Image propose(const VideoClip& rs, int pair, const Augmentation& augmentation, const Interpolator& interpolator,
              const ComposeOptions& options) {
  if (pair < 0 || pair + 1 >= rs.frame_count()) throw RangeError("pair index outside the clip");
  const int earlier = pair;
  const int later = pair + 1;
  const int first = augmentation.time_reverse ? later : earlier;
  const int second = augmentation.time_reverse ? earlier : later;
  const PairContext ctx{rs.first_time + first, rs.first_time + second, augmentation};
  const auto interp = interpolator.prepare(augmentation.apply(rs.frames[first]),
                                           augmentation.apply(rs.frames[second]), ctx);
  return compose_pair(*interp, rs.width(), rs.height(), rs.channels(), rs.readout_rows(), augmentation, options);
}

std::vector<ProposalSet> propose_all(const VideoClip& rs, const Interpolator& interpolator,
                                     const ComposeOptions& options) {
  rs.validate();
  if (rs.frame_count() < 2) throw InputError("proposals need at least two RS frames");
  const int pairs = rs.frame_count() - 1;
  const auto augs = Augmentation::all();
  std::vector<ProposalSet> sets(pairs);
  for (int p = 0; p < pairs; ++p) {
    sets[p].proposals.resize(augs.size());
    sets[p].time = rs.first_time + p + 1;
  }
  parallel_for(static_cast<std::size_t>(pairs) * augs.size(), [&](std::size_t item) {
    const int p = static_cast<int>(item / augs.size());
    const std::size_t a = item % augs.size();
    sets[p].proposals[a] = propose(rs, p, augs[a], interpolator, options);
  });
  for (ProposalSet& s : sets) s.mean = proposal_mean(s.proposals);
  return sets;
}

}  // namespace unroll
