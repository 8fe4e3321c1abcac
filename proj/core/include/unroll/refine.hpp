#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unroll/patch_index.hpp"
#include "unroll/volume.hpp"

namespace unroll {

enum class NNMode { exact, approx };

struct RefineConfig {
  int iterations = 5;
  std::optional<double> lambda;  // empty = auto
  double alpha_edge = 0.9;
  double alpha_flat = 0.1;
  double canny_low = 0.1;
  double canny_high = 0.2;
  NNMode nn_mode = NNMode::exact;
  double epsilon = 0.05;       // approx mode only
  int row_window = 0;          // > 0 restricts NN candidates to rows within +-row_window
  double early_exit = 1e-4;    // stop when an iteration lowers the total by less than this fraction

  // Throws InputError on out-of-range settings.
  void validate() const;
};

// Luma volume in double precision: value(x, y, k).
struct LumaVolume {
  int width = 0;
  int height = 0;
  int frames = 0;
  std::vector<double> values;

  LumaVolume() = default;
  LumaVolume(int width, int height, int frames);
  explicit LumaVolume(const VideoClip& clip);

  double& at(int x, int y, int k) noexcept { return values[index(x, y, k)]; }
  double at(int x, int y, int k) const noexcept { return values[index(x, y, k)]; }
  std::size_t index(int x, int y, int k) const noexcept {
    return (static_cast<std::size_t>(k) * height + y) * width + x;
  }
  PatchSet patches() const;
};

struct LossTerms {
  double nn = 0.0;
  double validity = 0.0;
  double total = 0.0;
};

// Per-patch weight, indexed like the PatchSet of the GS clip: alpha_edge where the
// patch center lies on a (dilated) Canny edge of its xt-slice, alpha_flat elsewhere.
std::vector<float> compute_alpha(const VideoClip& gs_initial, const RefineConfig& config);

struct RefineState {
  LumaVolume current;
  LumaVolume initial;
  std::vector<std::int64_t> assignment;  // per GS patch, index into the RS pool; -1 = none yet
  std::vector<float> alpha;
  double lambda = 0.0;
};

// Squared patch distance accumulated in double.
double patch_distance_exact(const LumaVolume& gs, PatchCoord at, std::span<const float> rs_patch) noexcept;

LossTerms loss(const RefineState& state, const PatchSet& pool);

// Moves each patch to the pool neighbor returned by the index when it is strictly
// closer than the current assignment. Returns the number of changed assignments.
std::size_t assign_neighbors(RefineState& state, const PatchIndex& index, const RefineConfig& config);

// Exact per-pixel minimizer of the loss for fixed assignments; clamp limits to [0, 1].
LumaVolume solve_pixels(const RefineState& state, const PatchSet& pool, bool clamp = true);

// L_NN at the current state divided by L_validity at the lambda = 0 minimizer.
double auto_lambda(const RefineState& state, const PatchSet& pool);

struct RefineTraceEntry {
  int iteration = 0;
  std::string step;  // "assign" or "solve"
  LossTerms terms;
};

struct RefineReport {
  double lambda = 0.0;
  std::vector<RefineTraceEntry> trace;
  int iterations_run = 0;
  bool early_exit = false;
  std::size_t pool_size = 0;
  std::size_t pool_distinct = 0;
};

// Test-time refinement of gs_initial against the xt-patch pool of rs. Only luma is
// optimized; each color channel receives the luma change. Throws InvariantError if
// the total loss ever increases.
VideoClip refine(const VideoClip& gs_initial, const VideoClip& rs, const RefineConfig& config = {},
                 RefineReport* report = nullptr);

}  // namespace unroll
