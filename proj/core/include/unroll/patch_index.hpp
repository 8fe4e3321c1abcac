#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "unroll/image.hpp"
#include "unroll/volume.hpp"

namespace unroll {

inline constexpr int kPatchWidth = 7;
inline constexpr int kPatchFrames = 3;
inline constexpr int kPatchDim = kPatchWidth * kPatchFrames;

// Top-left corner of an xt-patch: columns x .. x + 6 of image row `row`, frames k .. k + 2.
struct PatchCoord {
  int x = 0;
  int row = 0;
  int k = 0;
};

// Every 7x3 xt-patch of a single-channel clip, stride 1. Patch m is stored at
// data[m * 21 .. m * 21 + 20] with element dt * 7 + dx. Ordering: row, then k, then x.
class PatchSet {
 public:
  PatchSet() = default;
  // frames must be single-channel and share one shape; needs W >= 7 and K >= 3.
  explicit PatchSet(std::span<const Image> frames);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int frames() const noexcept { return frames_; }
  int per_row_x() const noexcept { return width_ - kPatchWidth + 1; }
  int per_row_k() const noexcept { return frames_ - kPatchFrames + 1; }
  std::size_t size() const noexcept { return count_; }

  std::span<const float> patch(std::size_t m) const noexcept { return {data_.data() + m * kPatchDim, kPatchDim}; }
  const float* data() const noexcept { return data_.data(); }
  PatchCoord coord(std::size_t m) const noexcept;
  std::size_t index(PatchCoord c) const noexcept;

 private:
  int width_ = 0;
  int height_ = 0;
  int frames_ = 0;
  std::size_t count_ = 0;
  std::vector<float> data_;
};

// Luma frames of a clip, as used for every patch computation.
std::vector<Image> clip_luma(const VideoClip& clip);

float patch_distance(const float* a, const float* b) noexcept;

struct Neighbor {
  std::int64_t index = -1;
  float distance = std::numeric_limits<float>::infinity();  // squared L2
};

// Nearest-neighbor index over a PatchSet. Exact duplicates are folded into one tree
// point; equal distances resolve to the lowest patch index. With epsilon > 0 the
// search may stop early and return a neighbor within (1 + epsilon) of the true
// distance.
class PatchIndex {
 public:
  using Filter = std::function<bool(std::size_t)>;

  explicit PatchIndex(PatchSet patches, int leaf_size = 8);

  const PatchSet& patches() const noexcept { return patches_; }
  std::size_t size() const noexcept { return patches_.size(); }
  std::size_t distinct() const noexcept { return groups_.size(); }

  // accept(m) == false removes patch m from consideration.
  Neighbor nearest(std::span<const float> query, double epsilon = 0.0, const Filter& accept = {}) const;

 private:
  struct Node {
    int dim = -1;  // -1 for leaves
    float low = 0.0f;   // largest left-child value along dim
    float high = 0.0f;  // smallest right-child value along dim
    std::uint32_t left = 0;   // child node, or first tree-order slot for leaves
    std::uint32_t right = 0;  // child node, or one past the last slot for leaves
  };
  struct Search;

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, int leaf_size);
  void search(std::uint32_t node, float mindist, float* dists, Search& s) const;

  PatchSet patches_;
  std::vector<std::uint32_t> groups_;        // representative (lowest) patch index per distinct patch
  std::vector<std::uint32_t> member_start_;  // members_[member_start_[g] .. member_start_[g + 1]] ascending
  std::vector<std::uint32_t> members_;
  std::vector<std::uint32_t> order_;  // group ids in tree order
  std::vector<float> points_;         // representative patches in tree order
  std::vector<Node> nodes_;
};

}  // namespace unroll
