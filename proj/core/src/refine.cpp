#include "unroll/refine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "unroll/canny.hpp"
#include "unroll/errors.hpp"
#include "unroll/parallel.hpp"

namespace unroll {

void RefineConfig::validate() const {
  if (iterations < 0) throw InputError("refine iterations must be >= 0");
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) throw InputError("lambda must be finite and >= 0");
  if (!(alpha_flat >= 0.0 && alpha_flat <= alpha_edge && alpha_edge <= 1.0)) {
    throw InputError("alpha levels must satisfy 0 <= alpha_flat <= alpha_edge <= 1");
  }
  if (!(canny_low >= 0.0 && canny_low <= canny_high)) throw InputError("canny thresholds must satisfy 0 <= low <= high");
  if (!(epsilon >= 0.0 && epsilon <= 0.05)) throw InputError("approximate NN epsilon must lie in [0, 0.05]");
  if (row_window < 0) throw InputError("row window must be >= 0");
  if (!(early_exit >= 0.0)) throw InputError("early-exit threshold must be >= 0");
}

LumaVolume::LumaVolume(int w, int h, int k)
    : width(w), height(h), frames(k), values(static_cast<std::size_t>(w) * h * k, 0.0) {}

LumaVolume::LumaVolume(const VideoClip& clip) : LumaVolume(clip.width(), clip.height(), clip.frame_count()) {
  for (int k = 0; k < frames; ++k) {
    const Image y = luma(clip.frames[k]);
    const auto px = y.pixels();
    std::copy(px.begin(), px.end(), values.begin() + static_cast<std::ptrdiff_t>(index(0, 0, k)));
  }
}

PatchSet LumaVolume::patches() const {
  std::vector<Image> frames_f;
  frames_f.reserve(frames);
  for (int k = 0; k < frames; ++k) {
    Image f(width, height, 1);
    auto px = f.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(values[index(0, 0, k) + i]);
    frames_f.push_back(std::move(f));
  }
  return PatchSet(frames_f);
}

namespace {

// Patch layout of a W x H x K clip, mirroring PatchSet.
struct Layout {
  int nx;
  int nk;
  int rows;
  std::size_t count() const noexcept { return static_cast<std::size_t>(rows) * nk * nx; }
  std::size_t index(int x, int row, int k) const noexcept {
    return (static_cast<std::size_t>(row) * nk + k) * nx + x;
  }
};

Layout layout_of(const LumaVolume& v) {
  return {v.width - kPatchWidth + 1, v.frames - kPatchFrames + 1, v.height};
}

double validity_distance(const LumaVolume& a, const LumaVolume& b, PatchCoord at) noexcept {
  double d = 0.0;
  for (int dt = 0; dt < kPatchFrames; ++dt) {
    for (int dx = 0; dx < kPatchWidth; ++dx) {
      const double e = a.at(at.x + dx, at.row, at.k + dt) - b.at(at.x + dx, at.row, at.k + dt);
      d += e * e;
    }
  }
  return d;
}

void check_state(const RefineState& s) {
  const Layout l = layout_of(s.current);
  if (s.current.width != s.initial.width || s.current.height != s.initial.height ||
      s.current.frames != s.initial.frames) {
    throw InputError("refine state: current and initial clips differ in shape");
  }
  if (s.assignment.size() != l.count() || s.alpha.size() != l.count()) {
    throw InputError("refine state: per-patch arrays do not match the clip");
  }
}

}  // namespace

double patch_distance_exact(const LumaVolume& gs, PatchCoord at, std::span<const float> rs_patch) noexcept {
  double d = 0.0;
  for (int dt = 0; dt < kPatchFrames; ++dt) {
    for (int dx = 0; dx < kPatchWidth; ++dx) {
      const double e = gs.at(at.x + dx, at.row, at.k + dt) - static_cast<double>(rs_patch[dt * kPatchWidth + dx]);
      d += e * e;
    }
  }
  return d;
}

std::vector<float> compute_alpha(const VideoClip& gs_initial, const RefineConfig& config) {
  config.validate();
  gs_initial.validate();
  const int w = gs_initial.width();
  const int h = gs_initial.height();
  const int k = gs_initial.frame_count();
  if (w < kPatchWidth || k < kPatchFrames) throw InputError("clip too small for 7x3 xt-patches");
  const std::vector<Image> y = clip_luma(gs_initial);
  const Layout l{w - kPatchWidth + 1, k - kPatchFrames + 1, h};
  std::vector<float> alpha(l.count());
  const CannyOptions canny_options{1.0, config.canny_low, config.canny_high};
  parallel_for(h, [&](std::size_t row) {
    const int j = static_cast<int>(row);
    Image slice(w, k, 1);
    for (int t = 0; t < k; ++t) {
      const auto src = y[t].row(j);
      std::copy(src.begin(), src.end(), slice.row(t).begin());
    }
    const Image edges = dilate(canny(slice, canny_options));
    for (int kk = 0; kk < l.nk; ++kk) {
      for (int x = 0; x < l.nx; ++x) {
        const bool on_edge = edges.at(x + kPatchWidth / 2, kk + kPatchFrames / 2) != 0.0f;
        alpha[l.index(x, j, kk)] = static_cast<float>(on_edge ? config.alpha_edge : config.alpha_flat);
      }
    }
  });
  return alpha;
}

LossTerms loss(const RefineState& state, const PatchSet& pool) {
  check_state(state);
  const Layout l = layout_of(state.current);
  std::vector<double> row_nn(l.rows, 0.0);
  std::vector<double> row_val(l.rows, 0.0);
  parallel_for(l.rows, [&](std::size_t row) {
    const int j = static_cast<int>(row);
    double nn = 0.0;
    double val = 0.0;
    for (int k = 0; k < l.nk; ++k) {
      for (int x = 0; x < l.nx; ++x) {
        const std::size_t m = l.index(x, j, k);
        const double a = state.alpha[m];
        const PatchCoord at{x, j, k};
        if (state.assignment[m] >= 0) {
          nn += a * patch_distance_exact(state.current, at, pool.patch(static_cast<std::size_t>(state.assignment[m])));
        }
        val += (1.0 - a) * validity_distance(state.current, state.initial, at);
      }
    }
    row_nn[j] = nn;
    row_val[j] = val;
  });
  LossTerms t;
  for (int j = 0; j < l.rows; ++j) {
    t.nn += row_nn[j];
    t.validity += row_val[j];
  }
  t.total = t.nn + state.lambda * t.validity;
  return t;
}

std::size_t assign_neighbors(RefineState& state, const PatchIndex& index, const RefineConfig& config) {
  check_state(state);
  const Layout l = layout_of(state.current);
  const PatchSet& pool = index.patches();
  const double eps = config.nn_mode == NNMode::approx ? config.epsilon : 0.0;
  std::vector<std::size_t> changed(l.rows, 0);
  parallel_for(l.rows, [&](std::size_t row) {
    const int j = static_cast<int>(row);
    PatchIndex::Filter accept;
    if (config.row_window > 0) {
      accept = [&pool, j, window = config.row_window](std::size_t m) {
        return std::abs(pool.coord(m).row - j) <= window;
      };
    }
    float query[kPatchDim];
    for (int k = 0; k < l.nk; ++k) {
      for (int x = 0; x < l.nx; ++x) {
        const std::size_t m = l.index(x, j, k);
        const PatchCoord at{x, j, k};
        for (int dt = 0; dt < kPatchFrames; ++dt) {
          for (int dx = 0; dx < kPatchWidth; ++dx) {
            query[dt * kPatchWidth + dx] = static_cast<float>(state.current.at(x + dx, j, k + dt));
          }
        }
        const Neighbor nb = index.nearest(query, eps, accept);
        if (nb.index < 0 || nb.index == state.assignment[m]) continue;
        if (state.assignment[m] >= 0) {
          const double d_old =
              patch_distance_exact(state.current, at, pool.patch(static_cast<std::size_t>(state.assignment[m])));
          const double d_new = patch_distance_exact(state.current, at, pool.patch(static_cast<std::size_t>(nb.index)));
          if (!(d_new < d_old)) continue;
        }
        state.assignment[m] = nb.index;
        ++changed[j];
      }
    }
  });
  std::size_t total = 0;
  for (std::size_t c : changed) total += c;
  return total;
}

namespace {

LumaVolume solve_with_lambda(const RefineState& state, const PatchSet& pool, double lambda, bool clamp) {
  check_state(state);
  const LumaVolume& cur = state.current;
  const Layout l = layout_of(cur);
  LumaVolume out = cur;
  parallel_for(static_cast<std::size_t>(cur.height) * cur.frames, [&](std::size_t item) {
    const int y = static_cast<int>(item % cur.height);
    const int t = static_cast<int>(item / cur.height);
    const int k_lo = std::max(0, t - kPatchFrames + 1);
    const int k_hi = std::min(t, l.nk - 1);
    for (int x = 0; x < cur.width; ++x) {
      const int x_lo = std::max(0, x - kPatchWidth + 1);
      const int x_hi = std::min(x, l.nx - 1);
      const double g0 = state.initial.at(x, y, t);
      double num = 0.0;
      double den = 0.0;
      for (int k0 = k_lo; k0 <= k_hi; ++k0) {
        for (int x0 = x_lo; x0 <= x_hi; ++x0) {
          const std::size_t m = l.index(x0, y, k0);
          const double a = state.alpha[m];
          const double wv = lambda * (1.0 - a);
          if (state.assignment[m] >= 0 && a > 0.0) {
            const float r = pool.patch(static_cast<std::size_t>(state.assignment[m]))[(t - k0) * kPatchWidth + (x - x0)];
            num += a * r;
            den += a;
          }
          num += wv * g0;
          den += wv;
        }
      }
      if (den > 0.0) {
        const double g = num / den;
        out.at(x, y, t) = clamp ? std::clamp(g, 0.0, 1.0) : g;
      }
    }
  });
  return out;
}

void require_non_increasing(const LossTerms& before, const LossTerms& after, const char* step) {
  if (after.total > before.total * (1.0 + 1e-9) + 1e-300) {
    throw InvariantError(std::string("refinement loss increased during ") + step + ": " +
                         std::to_string(before.total) + " -> " + std::to_string(after.total));
  }
}

}  // namespace

LumaVolume solve_pixels(const RefineState& state, const PatchSet& pool, bool clamp) {
  return solve_with_lambda(state, pool, state.lambda, clamp);
}

double auto_lambda(const RefineState& state, const PatchSet& pool) {
  RefineState probe = state;
  probe.lambda = 0.0;
  const double l_nn = loss(probe, pool).nn;
  probe.current = solve_with_lambda(state, pool, 0.0, false);
  const double l_val = loss(probe, pool).validity;
  return l_nn / std::max(l_val, 1e-12);
}

VideoClip refine(const VideoClip& gs_initial, const VideoClip& rs, const RefineConfig& config, RefineReport* report) {
  config.validate();
  gs_initial.validate();
  rs.validate();
  if (gs_initial.width() != rs.width() || gs_initial.height() != rs.height()) {
    throw InputError("refine: GS and RS clips differ in frame size");
  }
  if (gs_initial.frame_count() < kPatchFrames || rs.frame_count() < kPatchFrames) {
    throw InputError("refine needs at least 3 frames in both clips");
  }
  if (gs_initial.width() < kPatchWidth) throw InputError("refine needs frames at least 7 pixels wide");
  RefineReport local;
  RefineReport& rep = report ? *report : local;
  rep = {};
  if (config.iterations == 0) return gs_initial;

  const PatchIndex index(PatchSet(clip_luma(rs)));
  const PatchSet& pool = index.patches();
  rep.pool_size = index.size();
  rep.pool_distinct = index.distinct();

  RefineState state;
  state.initial = LumaVolume(gs_initial);
  state.current = state.initial;
  state.alpha = compute_alpha(gs_initial, config);
  state.assignment.assign(state.alpha.size(), -1);
  state.lambda = config.lambda.value_or(0.0);

  LossTerms previous{};
  double iteration_start = 0.0;
  for (int it = 0; it < config.iterations; ++it) {
    assign_neighbors(state, index, config);
    if (it == 0 && !config.lambda) state.lambda = auto_lambda(state, pool);
    const LossTerms after_assign = loss(state, pool);
    if (it > 0) require_non_increasing(previous, after_assign, "neighbor assignment");
    rep.trace.push_back({it, "assign", after_assign});
    if (it == 0) iteration_start = after_assign.total;
    rep.iterations_run = it + 1;
    previous = after_assign;
    if (after_assign.total == 0.0) break;

    state.current = solve_pixels(state, pool);
    const LossTerms after_solve = loss(state, pool);
    require_non_increasing(after_assign, after_solve, "pixel solve");
    rep.trace.push_back({it, "solve", after_solve});
    previous = after_solve;
    const double drop = iteration_start - after_solve.total;
    iteration_start = after_solve.total;
    if (drop < config.early_exit * std::abs(after_solve.total + drop)) {
      rep.early_exit = it + 1 < config.iterations;
      break;
    }
  }
  rep.lambda = state.lambda;

  VideoClip out = gs_initial;
  for (int k = 0; k < out.frame_count(); ++k) {
    Image& f = out.frames[k];
    for (int y = 0; y < f.height(); ++y) {
      for (int x = 0; x < f.width(); ++x) {
        const double delta = state.current.at(x, y, k) - state.initial.at(x, y, k);
        if (delta == 0.0) continue;
        for (int c = 0; c < f.channels(); ++c) {
          f.at(x, y, c) = static_cast<float>(std::clamp(f.at(x, y, c) + delta, 0.0, 1.0));
        }
      }
    }
  }
  return out;
}

}  // namespace unroll
