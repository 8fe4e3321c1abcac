#include "unroll/patch_index.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "unroll/errors.hpp"
#include "unroll/parallel.hpp"

namespace unroll {

PatchSet::PatchSet(std::span<const Image> frames) {
  if (frames.empty()) throw InputError("patch extraction needs frames");
  for (const Image& f : frames) {
    if (f.channels() != 1) throw InputError("patch extraction expects single-channel frames");
    require_same_shape(frames.front(), f, "patch frames");
  }
  width_ = frames.front().width();
  height_ = frames.front().height();
  frames_ = static_cast<int>(frames.size());
  if (width_ < kPatchWidth || frames_ < kPatchFrames) {
    throw InputError("clip too small for 7x3 xt-patches (need W >= 7 and K >= 3, got W=" + std::to_string(width_) +
                     ", K=" + std::to_string(frames_) + ")");
  }
  count_ = static_cast<std::size_t>(height_) * per_row_k() * per_row_x();
  data_.resize(count_ * kPatchDim);
  parallel_for(height_, [&](std::size_t row) {
    const int j = static_cast<int>(row);
    for (int k = 0; k < per_row_k(); ++k) {
      for (int x = 0; x < per_row_x(); ++x) {
        float* dst = data_.data() + index({x, j, k}) * kPatchDim;
        for (int dt = 0; dt < kPatchFrames; ++dt) {
          const auto src = frames[k + dt].row(j);
          std::copy(src.begin() + x, src.begin() + x + kPatchWidth, dst + dt * kPatchWidth);
        }
      }
    }
  });
}

PatchCoord PatchSet::coord(std::size_t m) const noexcept {
  const std::size_t nx = per_row_x();
  const std::size_t nk = per_row_k();
  return {static_cast<int>(m % nx), static_cast<int>(m / (nx * nk)), static_cast<int>((m / nx) % nk)};
}

std::size_t PatchSet::index(PatchCoord c) const noexcept {
  return (static_cast<std::size_t>(c.row) * per_row_k() + c.k) * per_row_x() + c.x;
}

std::vector<Image> clip_luma(const VideoClip& clip) {
  std::vector<Image> out;
  out.reserve(clip.frames.size());
  for (const Image& f : clip.frames) out.push_back(luma(f));
  return out;
}

float patch_distance(const float* a, const float* b) noexcept {
  float d = 0.0f;
  for (int i = 0; i < kPatchDim; ++i) {
    const float e = a[i] - b[i];
    d += e * e;
  }
  return d;
}

struct PatchIndex::Search {
  const float* query;
  float prune_scale;
  const Filter* accept;
  Neighbor best;
};

PatchIndex::PatchIndex(PatchSet patches, int leaf_size) : patches_(std::move(patches)) {
  const std::size_t m = patches_.size();
  if (m == 0) throw InputError("patch index is empty");
  if (m > std::numeric_limits<std::uint32_t>::max()) throw InputError("too many patches");
  leaf_size = std::max(leaf_size, 1);

  // Fold exact duplicates: sort lexicographically, ties by index.
  std::vector<std::uint32_t> sorted(m);
  std::iota(sorted.begin(), sorted.end(), 0u);
  const float* base = patches_.data();
  auto less = [base](std::uint32_t a, std::uint32_t b) {
    return std::lexicographical_compare(base + std::size_t{a} * kPatchDim, base + std::size_t{a} * kPatchDim + kPatchDim,
                                        base + std::size_t{b} * kPatchDim, base + std::size_t{b} * kPatchDim + kPatchDim);
  };
  std::sort(sorted.begin(), sorted.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (less(a, b)) return true;
    if (less(b, a)) return false;
    return a < b;
  });
  members_.reserve(m);
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i + 1;
    while (j < m && !less(sorted[i], sorted[j])) ++j;
    groups_.push_back(sorted[i]);
    member_start_.push_back(static_cast<std::uint32_t>(members_.size()));
    members_.insert(members_.end(), sorted.begin() + i, sorted.begin() + j);
    i = j;
  }
  member_start_.push_back(static_cast<std::uint32_t>(members_.size()));

  order_.resize(groups_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * groups_.size() / leaf_size + 2);
  build(0, static_cast<std::uint32_t>(order_.size()), leaf_size);

  points_.resize(order_.size() * kPatchDim);
  for (std::size_t i = 0; i < order_.size(); ++i) {
    const auto p = patches_.patch(groups_[order_[i]]);
    std::copy(p.begin(), p.end(), points_.begin() + i * kPatchDim);
  }
}

std::uint32_t PatchIndex::build(std::uint32_t begin, std::uint32_t end, int leaf_size) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  auto value = [&](std::uint32_t slot, int dim) { return patches_.patch(groups_[order_[slot]])[dim]; };
  if (end - begin <= static_cast<std::uint32_t>(leaf_size)) {
    nodes_[id].left = begin;
    nodes_[id].right = end;
    return id;
  }
  int dim = 0;
  float spread = -1.0f;
  for (int d = 0; d < kPatchDim; ++d) {
    float lo = value(begin, d);
    float hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
      const float v = value(i, d);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > spread) {
      spread = hi - lo;
      dim = d;
    }
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return patches_.patch(groups_[a])[dim] < patches_.patch(groups_[b])[dim];
                   });
  float low = value(begin, dim);
  for (std::uint32_t i = begin; i < mid; ++i) low = std::max(low, value(i, dim));
  float high = value(mid, dim);
  for (std::uint32_t i = mid; i < end; ++i) high = std::min(high, value(i, dim));
  const std::uint32_t left = build(begin, mid, leaf_size);
  const std::uint32_t right = build(mid, end, leaf_size);
  Node& n = nodes_[id];
  n.dim = dim;
  n.low = low;
  n.high = high;
  n.left = left;
  n.right = right;
  return id;
}

void PatchIndex::search(std::uint32_t node_id, float mindist, float* dists, Search& s) const {
  const Node& node = nodes_[node_id];
  if (node.dim < 0) {
    for (std::uint32_t slot = node.left; slot < node.right; ++slot) {
      const float d = patch_distance(s.query, points_.data() + std::size_t{slot} * kPatchDim);
      if (d > s.best.distance) continue;
      const std::uint32_t g = order_[slot];
      std::int64_t pick = -1;
      if (!*s.accept) {
        pick = groups_[g];
      } else {
        for (std::uint32_t i = member_start_[g]; i < member_start_[g + 1]; ++i) {
          if ((*s.accept)(members_[i])) {
            pick = members_[i];
            break;
          }
        }
      }
      if (pick < 0) continue;
      if (d < s.best.distance || pick < s.best.index) s.best = {pick, d};
    }
    return;
  }
  const float v = s.query[node.dim];
  const float to_low = v - node.low;
  const float to_high = v - node.high;
  std::uint32_t near;
  std::uint32_t far;
  float cut;
  if (to_low + to_high < 0.0f) {
    near = node.left;
    far = node.right;
    cut = to_high * to_high;
  } else {
    near = node.right;
    far = node.left;
    cut = to_low * to_low;
  }
  search(near, mindist, dists, s);
  const float saved = dists[node.dim];
  const float far_dist = mindist + cut - saved;
  if (far_dist * s.prune_scale <= s.best.distance) {
    dists[node.dim] = cut;
    search(far, far_dist, dists, s);
    dists[node.dim] = saved;
  }
}

Neighbor PatchIndex::nearest(std::span<const float> query, double epsilon, const Filter& accept) const {
  if (query.size() != kPatchDim) throw InputError("query must have 21 elements");
  if (epsilon < 0.0) throw InputError("epsilon must be non-negative");
  // Exact mode keeps a small slack so float rounding in the bound never prunes a tie.
  const float scale = epsilon > 0.0 ? static_cast<float>((1.0 + epsilon) * (1.0 + epsilon)) : 1.0f - 1e-5f;
  Search s{query.data(), scale, &accept, {}};
  float dists[kPatchDim] = {};
  search(0, 0.0f, dists, s);
  return s.best;
}

}  // namespace unroll
