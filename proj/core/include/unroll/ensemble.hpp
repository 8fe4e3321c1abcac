#pragma once

#include <span>
#include <vector>

#include "unroll/augmentation.hpp"
#include "unroll/interp.hpp"

namespace unroll {

// The 16 augmentation proposals for one GS instant, indexed by augmentation id.
struct ProposalSet {
  std::vector<Image> proposals;
  Image mean;
  int time = 0;
};

// Per-pixel arithmetic mean, accumulated in double.
Image proposal_mean(std::span<const Image> proposals);
// Per-pixel standard deviation across proposals, averaged over channels.
Image proposal_spread(std::span<const Image> proposals);

// One proposal set per output time first_time + 1 .. first_time + K - 1. For each
// augmentation the pair is augmented, interpolated, mapped back and row-composed;
// time-reversed augmentations walk the pair backwards so every proposal targets the
// same top-row instant.
std::vector<ProposalSet> propose_all(const VideoClip& rs, const Interpolator& interpolator,
                                     const ComposeOptions& options = {});

// Single proposal (one augmentation) for pair p of the clip.
Image propose(const VideoClip& rs, int pair, const Augmentation& augmentation, const Interpolator& interpolator,
              const ComposeOptions& options = {});

}  // namespace unroll
