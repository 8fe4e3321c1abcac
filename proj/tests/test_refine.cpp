#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "unroll/canny.hpp"
#include "unroll/errors.hpp"
#include "unroll/interp.hpp"
#include "unroll/metrics.hpp"
#include "unroll/patch_index.hpp"
#include "unroll/refine.hpp"
#include "unroll/synth.hpp"

using namespace unroll;

namespace {

VideoClip random_clip(int w, int h, int k, std::uint64_t seed, int channels = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  VideoClip clip;
  for (int t = 0; t < k; ++t) {
    Image f(w, h, channels);
    for (float& v : f.pixels()) v = u(rng);
    clip.frames.push_back(f);
  }
  return clip;
}

double brute_distance(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (int e = 0; e < kPatchDim; ++e) s += (double(a[e]) - b[e]) * (double(a[e]) - b[e]);
  return s;
}

struct Brute {
  std::size_t index;
  double distance;
};

template <typename Accept>
Brute brute_nearest(const PatchSet& set, std::span<const float> q, Accept accept) {
  Brute best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t m = 0; m < set.size(); ++m) {
    if (!accept(m)) continue;
    const double d = brute_distance(set.patch(m), q);
    if (d < best.distance) best = {m, d};
  }
  return best;
}

VideoClip add_noise(VideoClip clip, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  for (Image& f : clip.frames)
    for (float& v : f.pixels()) v = static_cast<float>(std::clamp(v + n(rng), 0.0, 1.0));
  return clip;
}

}  // namespace

TEST_CASE("patch counting") {
  const VideoClip tiny = random_clip(7, 5, 3, 1);
  const PatchSet one(clip_luma(tiny));
  CHECK(one.size() == 5);
  const VideoClip c = random_clip(12, 6, 5, 2);
  const PatchSet set(clip_luma(c));
  CHECK(set.size() == static_cast<std::size_t>(6 * (12 - 6) * (5 - 2)));
  for (std::size_t m : {std::size_t{0}, std::size_t{17}, set.size() - 1}) {
    const PatchCoord pc = set.coord(m);
    CHECK(set.index(pc) == m);
    for (int e = 0; e < kPatchDim; ++e) CHECK(set.patch(m)[e] == c.frames[pc.k + e / 7].at(pc.x + e % 7, pc.row));
  }
  CHECK_THROWS_AS(PatchSet(clip_luma(random_clip(6, 4, 3, 3))), InputError);
  CHECK_THROWS_AS(PatchSet(clip_luma(random_clip(8, 4, 2, 3))), InputError);
}

TEST_CASE("exact nearest neighbors match brute force") {
  const SceneSpec spec = random_scene(MotionFamily::translation, 4, {32, 24, 5, 1});
  const PairedSample p = make_pair(spec, 4, false);
  const PatchSet set(clip_luma(p.rs));
  const PatchIndex index(set);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::normal_distribution<float> jitter(0.0f, 0.02f);
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  int mismatches = 0;
  for (int q = 0; q < 1000; ++q) {
    std::vector<float> query(kPatchDim);
    if (q % 2 == 0) {
      for (float& v : query) v = u(rng);
    } else {
      const auto src = set.patch(pick(rng));
      for (int e = 0; e < kPatchDim; ++e) query[e] = src[e] + jitter(rng);
    }
    const Neighbor got = index.nearest(query);
    const Brute want = brute_nearest(set, query, [](std::size_t) { return true; });
    const double got_d = brute_distance(set.patch(static_cast<std::size_t>(got.index)), query);
    if (std::abs(got_d - want.distance) > 1e-6 * std::max(1.0, want.distance)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("stored patches are found at distance zero with the lowest index") {
  const PairedSample p = make_pair(test::static_scene(20, 12, 4), 6, false);
  const PatchSet set(clip_luma(p.rs));
  const PatchIndex index(set);
  CHECK(index.distinct() < index.size());  // static clip: every slice repeats over time
  for (std::size_t m = 0; m < set.size(); m += 7) {
    const Neighbor n = index.nearest(set.patch(m));
    CHECK(n.distance == 0.0f);
    std::size_t first = m;
    for (std::size_t o = 0; o < m; ++o)
      if (brute_distance(set.patch(o), set.patch(m)) == 0.0) {
        first = o;
        break;
      }
    CHECK(static_cast<std::size_t>(n.index) == first);
  }
}

TEST_CASE("approximate search stays within (1 + eps)^2") {
  const PairedSample p = make_pair(random_scene(MotionFamily::rotation, 7, {32, 24, 5, 1}), 7, false);
  const PatchSet set(clip_luma(p.rs));
  const PatchIndex index(set);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int q = 0; q < 300; ++q) {
    std::vector<float> query(kPatchDim);
    for (float& v : query) v = u(rng);
    const Neighbor n = index.nearest(query, 0.05);
    const Brute want = brute_nearest(set, query, [](std::size_t) { return true; });
    CHECK(brute_distance(set.patch(static_cast<std::size_t>(n.index)), query) <= 1.1025 * want.distance + 1e-9);
  }
}

TEST_CASE("filtered search honors the filter") {
  const PairedSample p = make_pair(random_scene(MotionFamily::zoom, 9, {24, 16, 4, 1}), 9, false);
  const PatchSet set(clip_luma(p.rs));
  const PatchIndex index(set);
  auto even_rows = [&](std::size_t m) { return set.coord(m).row % 2 == 0; };
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<std::size_t> pick(0, set.size() - 1);
  for (int q = 0; q < 100; ++q) {
    const auto query = set.patch(pick(rng));
    const Neighbor n = index.nearest(query, 0.0, even_rows);
    CHECK(set.coord(static_cast<std::size_t>(n.index)).row % 2 == 0);
    const Brute want = brute_nearest(set, query, even_rows);
    CHECK(brute_distance(set.patch(static_cast<std::size_t>(n.index)), query) == doctest::Approx(want.distance).epsilon(1e-6));
  }
  const Neighbor none = index.nearest(set.patch(0), 0.0, [](std::size_t) { return false; });
  CHECK(none.index == -1);
}

TEST_CASE("canny: constant input has no edges") {
  const Image flat(20, 10, 1, 0.6f);
  const Image edges = canny(flat);
  const Image mag = gradient_magnitude(flat);
  for (float v : edges.pixels()) CHECK(v == 0.0f);
  for (float v : mag.pixels()) CHECK(v == 0.0f);
}

TEST_CASE("alpha: constant clip is flat everywhere, a vertical edge gives a 3-px band") {
  RefineConfig cfg;
  VideoClip flat;
  for (int k = 0; k < 4; ++k) flat.frames.emplace_back(16, 6, 1, 0.3f);
  for (float a : compute_alpha(flat, cfg)) CHECK(a == doctest::Approx(cfg.alpha_flat));

  // Every xt-slice: 0 left of x = 10, 0.5 at x = 10, 1 to the right.
  VideoClip edge;
  for (int k = 0; k < 5; ++k) {
    Image f(24, 4, 1);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 24; ++x) f.at(x, y) = x < 10 ? 0.0f : (x == 10 ? 0.5f : 1.0f);
    edge.frames.push_back(f);
  }
  const auto alpha = compute_alpha(edge, cfg);
  const PatchSet layout(clip_luma(edge));
  REQUIRE(alpha.size() == layout.size());
  for (std::size_t m = 0; m < alpha.size(); ++m) {
    const int center = layout.coord(m).x + 3;
    const bool band = center >= 9 && center <= 11;
    CHECK(alpha[m] == static_cast<float>(band ? cfg.alpha_edge : cfg.alpha_flat));
  }
}

TEST_CASE("loss: zero cases and brute-force agreement") {
  const VideoClip rs = random_clip(16, 16, 4, 11);
  const PatchSet pool(clip_luma(rs));
  RefineState s = oracle::random_state(16, 16, 4, pool, 12);
  const LossTerms got = loss(s, pool);
  const LossTerms want = oracle::loss(s, pool);
  CHECK(std::abs(got.nn - want.nn) <= 1e-9 * want.nn);
  CHECK(std::abs(got.validity - want.validity) <= 1e-9 * want.validity);
  CHECK(std::abs(got.total - want.total) <= 1e-9 * want.total);

  std::fill(s.alpha.begin(), s.alpha.end(), 0.0f);
  CHECK(loss(s, pool).nn == 0.0);

  // GS equals its initial value and every patch sits verbatim in the pool.
  RefineState exact;
  exact.current = LumaVolume(rs);
  exact.initial = exact.current;
  for (std::size_t m = 0; m < pool.size(); ++m) exact.assignment.push_back(static_cast<std::int64_t>(m));
  exact.alpha.assign(pool.size(), 0.5f);
  exact.lambda = 1.0;
  const LossTerms zero = loss(exact, pool);
  CHECK(zero.nn == 0.0);
  CHECK(zero.validity == 0.0);
  CHECK(zero.total == 0.0);
}

TEST_CASE("pixel solve equals gradient descent on a 10 x 1 x 4 toy") {
  const VideoClip rs = random_clip(10, 1, 4, 13);
  const PatchSet pool(clip_luma(rs));
  const RefineState s = oracle::random_state(10, 1, 4, pool, 14);
  const LumaVolume closed = solve_pixels(s, pool, false);

  const std::vector<double> g = oracle::descend(s, pool);
  double worst = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) worst = std::max(worst, std::abs(g[p] - closed.values[p]));
  CHECK(worst <= 1e-6);
}

TEST_CASE("refine: T = 0 and fixed point return the input") {
  const PairedSample still = make_pair(test::static_scene(24, 16, 4), 15, false);
  RefineConfig cfg;
  cfg.iterations = 0;
  const VideoClip same = refine(still.rs, still.rs, cfg);
  for (int k = 0; k < 4; ++k) CHECK(same.frames[k] == still.rs.frames[k]);

  cfg.iterations = 5;
  RefineReport report;
  const VideoClip fixed = refine(still.gs, still.rs, cfg, &report);
  for (int k = 0; k < 4; ++k) CHECK(fixed.frames[k] == still.gs.frames[k]);
  REQUIRE_FALSE(report.trace.empty());
  CHECK(report.trace.back().terms.total == 0.0);
}

TEST_CASE("refine: monotone, balanced and harmless on a noisy translation clip") {
  const PairedSample p = make_pair(test::translating_scene(48, 40, 5, 1.5, 0.5), 16, false);
  const VideoClip initial_clean = reconstruct_clip(p.rs, BuiltinInterpolator());
  VideoClip initial = add_noise(initial_clean, 0.02, 17);
  RefineReport report;
  const VideoClip out = refine(initial, p.rs, {}, &report);
  REQUIRE(report.trace.size() >= 2);
  for (std::size_t i = 1; i < report.trace.size(); ++i)
    CHECK(report.trace[i].terms.total <= report.trace[i - 1].terms.total * (1.0 + 1e-12));
  const LossTerms& first_solve = report.trace[1].terms;
  CHECK(report.trace[1].step == "solve");
  const double ratio = first_solve.nn / (report.lambda * first_solve.validity);
  CHECK(ratio >= 0.1);
  CHECK(ratio <= 10.0);

  VideoClip gt;
  for (int k = 1; k < 5; ++k) gt.frames.push_back(p.gs.frames[k]);
  CHECK(psnr(out, gt) >= psnr(initial, gt) - 0.1);
}

TEST_CASE("refine: color channels receive the luma change") {
  const PairedSample p = make_pair(test::translating_scene(32, 24, 4, 1.0, 0.0), 18, false);
  const VideoClip initial = add_noise(p.gs, 0.03, 19);
  const VideoClip out = refine(initial, p.rs);
  int checked = 0;
  for (int k = 0; k < 4; ++k)
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 32; ++x) {
        const double d0 = out.frames[k].at(x, y, 0) - initial.frames[k].at(x, y, 0);
        bool interior = true;
        for (int c = 0; c < 3; ++c) {
          const float v = out.frames[k].at(x, y, c);
          interior &= v > 0.0f && v < 1.0f;
        }
        if (!interior) continue;
        for (int c = 1; c < 3; ++c) CHECK(std::abs(out.frames[k].at(x, y, c) - initial.frames[k].at(x, y, c) - d0) <= 1e-6);
        ++checked;
      }
  CHECK(checked > 0);
}

TEST_CASE("refine: configuration and input errors") {
  RefineConfig bad;
  bad.alpha_flat = 0.95;
  CHECK_THROWS_AS(bad.validate(), InputError);
  RefineConfig neg;
  neg.lambda = -1.0;
  CHECK_THROWS_AS(neg.validate(), InputError);
  RefineConfig iters;
  iters.iterations = -1;
  CHECK_THROWS_AS(iters.validate(), InputError);

  const VideoClip two = random_clip(16, 8, 2, 20);
  CHECK_THROWS_AS(refine(two, two), InputError);
  CHECK_THROWS_AS(refine(random_clip(16, 8, 3, 21), random_clip(17, 8, 3, 22)), InputError);
}
