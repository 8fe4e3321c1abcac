#pragma once

#include "unroll/image.hpp"

namespace unroll {

// Dense displacement from frame A to frame B: A(x, y) ~ B(x + u, y + v).
struct FlowField {
  Image u;
  Image v;
  Image confidence;  // 0 where forward-backward error > 1 px or the local structure is degenerate

  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }
};

struct FlowOptions {
  int levels = 4;
  int iterations = 5;          // warp-refinement passes per pyramid level
  int window_radius = 3;       // structure-tensor window (box)
  double regularization = 1e-3;
  double max_step = 2.0;       // per-iteration update clamp, in pixels of the current level
  double consistency_px = 1.0;
  double min_structure = 1e-4; // smallest structure-tensor eigenvalue counted as textured
};

struct FlowPair {
  FlowField forward;   // A -> B
  FlowField backward;  // B -> A
};

// Coarse-to-fine iterative Lucas-Kanade on luma. Both directions are estimated so
// the confidence maps carry forward-backward consistency.
FlowPair estimate_flow_pair(const Image& a, const Image& b, const FlowOptions& options = {});
FlowField estimate_flow(const Image& a, const Image& b, const FlowOptions& options = {});

}  // namespace unroll
